"""Estimation and benchmarking services for tylershape"""
