"""Utility modules for tylershape"""
