"""
lrlab - Lieb-Robinson Laboratory
Numerical checks of locality bounds, harmonic lattice dynamics, the AKLT chain
and gapped ground-state approximations at exact-diagonalization scale
"""

__version__ = "0.1.0"
