"""
SB-MCL Package
"""
