"""plgp: exact-arithmetic toolkit for general-position piecewise-linear maps.

Builds PL maps of finite simplicial complexes into R^m by subdivide-and-perturb,
then certifies, per external point z, that the set of secant lines through z is
finite and carries a disjoint small-mesh ball cover (zero-dimensionality).
"""

__version__ = "0.1.0"
