"""
Radial energy, Nehari-manifold search and Picard iteration.
"""
