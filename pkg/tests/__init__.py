"""Test suite for tylershape"""
