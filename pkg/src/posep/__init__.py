"""Positivity of linear maps on symmetric matrices and separability
checking in Kronecker subspaces, via sparse moment relaxations solved
with a built-in semidefinite programming solver.
"""

__version__ = "0.1.0"
