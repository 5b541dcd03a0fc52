"""Finite-dimensional diagonals, matrix groups and lifted approximate diagonals.

Exact identities are decided over the rationals; operator norms come back
as certified ``[lower, upper]`` intervals.
"""
from .constructions import (
    approx_diagonal,
    cutdown_diagonal,
    defects,
    direct_sum_diagonal,
    ideal_diagonal,
    standard_c,
)
from .groups import MatrixGroup, SignedPermutation, is_irreducible, make_group
from .lifts import BiorthogonalSystem, Lift, certify_A, lift_apply, make_system
from .linalg import rank_of_span, vectorize
from .spaces import HostSpace, NormInterval, dual_host, op_norm, subsym_constant_M, vec_norm
from .tensor import (
    TensorElement,
    act,
    canonical_diagonal,
    coordinates_equal,
    group_diagonal,
    is_diagonal,
    pi,
    projective_upper,
    tensor_mul,
    to_coordinates,
    unique_bidiagonal,
)

__version__ = "0.1.0"
