"""
Function spaces, operators and cones on the unit interval.
"""
