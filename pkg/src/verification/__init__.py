"""
Hypothesis certifiers and the closed-form apparatus of the kernel problem.
"""
