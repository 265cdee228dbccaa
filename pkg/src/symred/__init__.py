"""Symmetry reduction of quantum Laplacians on stratified N-body spaces.

The package assembles and verifies the reduced kinetic-energy operators of
three systems sharing one reduction scheme: a planar system with circular
symmetry, a free rigid body, and a triatomic molecule in mass-weighted shape
coordinates.  Every operator is checked against independent brute-force
oracles (Bessel zeros, a full unreduced grid Laplacian, and a pointwise
high-dimensional stencil).
"""

__version__ = "0.1.0"

from . import nbody, oracle, shape, so3, solver
from . import operators  # noqa: F401  (imported for side-effect-free API surface)
