"""
PDNspot Test Suite
"""
