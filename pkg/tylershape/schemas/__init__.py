"""Pydantic schemas for tylershape domain types"""
