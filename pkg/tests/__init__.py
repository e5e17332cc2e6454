"""
Test suite for the impulse sensing calculator
"""
