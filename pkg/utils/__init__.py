"""
Utility package for qpz.
Contains exact arithmetic, quadratic forms, zeta sums, period polynomials,
configuration and the result cache.
"""
