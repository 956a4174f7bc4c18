"""
Test suite for latticeeft
"""
