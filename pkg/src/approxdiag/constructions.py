"""Diagonal constructions with exact checks and defect certificates.

* lifted group averages ``(1/|G|) sum E(g) (x) E(g^-1)`` and their defects
  against a host operator F;
* the ideal construction ``d_A . (e (x) e)`` (bullet product);
* the direct-sum construction ``d11 + c d11`` and its cut-down
  ``(P1 (x) P1) d (P1 (x) P1 + c)`` on two-block matrix algebras.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import linalg, spaces
from .groups import MatrixGroup, is_irreducible
from .lifts import Lift, ReducibleGroupError, lift_apply
from .spaces import HostSpace
from .tensor import (
    InternalCheckError,
    TensorElement,
    act,
    canonical_diagonal,
    coordinates_equal,
    pi,
    projective_upper,
    sparse_coordinates,
    tensor_mul,
)

DEFECT_TOL = 1e-9


def approx_diagonal(L: Lift, G: MatrixGroup) -> TensorElement:
    """``(1/|G|) sum_g E(g) (x) E(g^-1)`` with host operators as legs."""
    if G.n != L.n:
        raise linalg.DimensionError(f"group acts on n={G.n}, lift has n={L.n}")
    if not is_irreducible(G):
        raise ReducibleGroupError(f"group {G.name or '?'} is reducible")
    c = Fraction(1, len(G))
    terms = tuple((c, lift_apply(L, g.to_matrix()), lift_apply(L, g.inverse().to_matrix())) for g in G)
    return TensorElement(L.dim, terms)


def host_norm(host: HostSpace, seed: int = 0) -> Callable[[np.ndarray], float]:
    """Operator-norm upper bound on ``host``, cached per matrix."""
    cache: dict[bytes, float] = {}

    def norm(m: np.ndarray) -> float:
        f = np.ascontiguousarray(linalg.to_float(m))
        key = f.tobytes()
        if key not in cache:
            cache[key] = 0.0 if not f.any() else spaces.op_norm(host, host, f, seed=seed).upper
        return cache[key]

    return norm


@dataclass
class DefectReport:
    n: int
    pi_defect: float
    commutator_bound: float
    diag_norm_bound: float
    analytic_bound: float
    reduction_norm: float
    commutator_evaluated: float
    naive_commutator_bound: float
    identity_residual: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _commutator(F: np.ndarray, d: TensorElement) -> TensorElement:
    return act(F, d, "left") - act(F, d, "right")


def _same_element(s: TensorElement, t: TensorElement) -> float:
    """0 if equal; otherwise the largest coordinate difference."""
    if s.exact and t.exact:
        diff = sparse_coordinates(s - t)
        return 0.0 if not diff else max(abs(float(v)) for v in diff.values())
    diff = s - t
    Va = np.array([linalg.to_float(a).reshape(-1) * float(c) for c, a, _ in diff.terms])
    Vb = np.array([linalg.to_float(b).reshape(-1) for _, _, b in diff.terms])
    return float(np.max(np.abs(Va.T @ Vb))) if len(diff.terms) else 0.0


def defects(d: TensorElement, F, host: HostSpace, n: int | None = None, seed: int = 0) -> DefectReport:
    """Defect certificate of ``d`` against the host operator F.

    ``pi_defect`` is ``||pi(d) F - F||``.  The commutator ``F.d - d.F`` is
    rewritten as ``R.d - d.R`` with ``R = F - P F P`` and ``P = pi(d)``
    (the rewrite is checked as an identity of elements); its bound keeps
    every leg in factored form, ``sum |c| (||R|| ||a|| ||b|| + ||a|| ||b|| ||R||)``.
    The representation with legs multiplied out (``commutator_evaluated``)
    and the unreduced one (``naive_commutator_bound``) are reported as well.
    """
    F = np.asarray(F)
    if F.shape != (d.n, d.n) or host.dim != d.n:
        raise linalg.DimensionError("F, d and the host must share one dimension")
    exact = d.exact and linalg.is_exact(F)
    if not exact:
        F = linalg.to_float(F)
        d = TensorElement(d.n, tuple((float(c), linalg.to_float(a), linalg.to_float(b)) for c, a, b in d.terms))
    P = pi(d)
    norm = host_norm(host, seed)
    pi_defect = norm(P @ F - F if not exact else linalg.matmul(P, F) - F)
    R = F - (linalg.matmul_chain(P, F, P) if exact else P @ F @ P)
    r_norm = norm(R)
    reduced = _commutator(R, d)
    residual = _same_element(_commutator(F, d), reduced)
    if residual > 1e-12:
        raise InternalCheckError(f"F.d - d.F differs from its reduced form by {residual}")
    diag_bound = projective_upper(d, norm)
    factored = sum(abs(float(c)) * 2 * r_norm * norm(a) * norm(b) for c, a, b in d.terms)
    analytic = 2 * r_norm * diag_bound
    if factored > analytic + DEFECT_TOL:
        raise InternalCheckError(f"commutator bound {factored} exceeds 2||F-PFP|| ||d|| = {analytic}")
    return DefectReport(
        n=d.n if n is None else n,
        pi_defect=pi_defect,
        commutator_bound=factored,
        diag_norm_bound=diag_bound,
        analytic_bound=analytic,
        reduction_norm=r_norm,
        commutator_evaluated=projective_upper(reduced, norm),
        naive_commutator_bound=projective_upper(_commutator(F, d), norm),
        identity_residual=residual,
    )


# --- block algebras ------------------------------------------------------------


def embed(t: TensorElement, n: int, offset: int) -> TensorElement:
    """Place the legs of ``t`` as a diagonal block of M_n starting at ``offset``."""
    if offset + t.n > n:
        raise linalg.DimensionError("block does not fit")

    def place(m: np.ndarray) -> np.ndarray:
        out = linalg.zeros(n, n, linalg.is_exact(m))
        out[offset : offset + t.n, offset : offset + t.n] = m
        return out

    return TensorElement(n, tuple((c, place(a), place(b)) for c, a, b in t.terms))


def restrict(t: TensorElement, m: int) -> TensorElement:
    """Cut every leg down to its leading m x m block, checking nothing is lost."""
    terms = []
    for c, a, b in t.terms:
        for leg in (a, b):
            if np.any(leg[m:, :] != 0) or np.any(leg[:, m:] != 0):
                raise InternalCheckError("leg is not supported in the leading block")
        terms.append((c, a[:m, :m].copy(), b[:m, :m].copy()))
    return TensorElement(m, tuple(terms))


def block_projection(n: int, start: int, stop: int) -> np.ndarray:
    out = linalg.zeros(n, n)
    for i in range(start, stop):
        out[i, i] = 1
    return out


@dataclass(frozen=True)
class BlockAlgebra:
    """``M_a (+) M_b`` sitting block-diagonally in ``M_(a+b)``."""

    a: int
    b: int

    @property
    def n(self) -> int:
        return self.a + self.b

    def _range(self, which: int) -> range:
        return range(0, self.a) if which == 0 else range(self.a, self.n)

    def ideal_basis(self, which: int) -> list[np.ndarray]:
        r = self._range(which)
        return [linalg.matrix_unit(self.n, i, j) for i in r for j in r]

    def basis(self) -> list[np.ndarray]:
        return self.ideal_basis(0) + self.ideal_basis(1)

    def ideal_unit(self, which: int) -> np.ndarray:
        r = self._range(which)
        return block_projection(self.n, r.start, r.stop)

    def diagonal(self) -> TensorElement:
        """Canonical diagonals of the two blocks, embedded and summed."""
        parts = []
        if self.a:
            parts.append(embed(canonical_diagonal(self.a), self.n, 0))
        if self.b:
            parts.append(embed(canonical_diagonal(self.b), self.n, self.a))
        out = TensorElement.zero(self.n)
        for p in parts:
            out = out + p
        return out


def ideal_diagonal(d_A: TensorElement, e) -> TensorElement:
    """``d_A . (e (x) e)`` under the bullet product ``ac (x) bd``."""
    e = linalg.require_exact(np.asarray(e), "ideal unit")
    if e.shape != (d_A.n, d_A.n):
        raise linalg.DimensionError("e must live in the ambient algebra of d_A")
    if not linalg.equal(linalg.matmul(e, e), e):
        raise ValueError("e is not idempotent")
    return tensor_mul(d_A, TensorElement.elementary(e, e), "bullet")


# --- direct sums and cut-downs ------------------------------------------------------


def standard_c(m: int, k: int) -> TensorElement:
    """``sum_j e_(m+j, 0) (x) e_(0, m+j)``: left legs in the (2,1) corner,
    right legs in the (1,2) corner, ``pi = P2``."""
    if m < 1 or k < 0:
        raise ValueError("need m >= 1 and k >= 0")
    n = m + k
    return TensorElement(
        n, tuple((1, linalg.matrix_unit(n, m + j, 0), linalg.matrix_unit(n, 0, m + j)) for j in range(k))
    )


def _in_corner(x: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> bool:
    return linalg.equal(linalg.matmul_chain(rows, x, cols), x)


def _check_c(c: TensorElement, m: int, k: int) -> None:
    n = m + k
    if c.n != n:
        raise linalg.DimensionError(f"c must live in M_{n}")
    P1, P2 = block_projection(n, 0, m), block_projection(n, m, n)
    if not linalg.equal(pi(c), P2):
        raise ValueError("pi(c) is not the identity of the (2,2) corner")
    for _, a, b in c.terms:
        if not (_in_corner(a, P2, P1) and _in_corner(b, P1, P2)):
            raise ValueError("c must have left legs in the (2,1) and right legs in the (1,2) corner")


def direct_sum_diagonal(m: int, k: int, d11: TensorElement, c: TensorElement, product: str = "hash") -> TensorElement:
    """``d11 + c d11``.  ``product`` selects the multiplication of ``c`` and
    ``d11``; only ``hash`` yields a diagonal."""
    n = m + k
    if d11.n != n:
        raise linalg.DimensionError(f"d11 must be embedded in M_{n}")
    P1 = block_projection(n, 0, m)
    for _, a, b in d11.terms:
        if not (_in_corner(a, P1, P1) and _in_corner(b, P1, P1)):
            raise ValueError("d11 must be supported in the (1,1) corner")
    _check_c(c, m, k)
    return d11 + tensor_mul(c, d11, product)


def cutdown_diagonal(d: TensorElement, m: int, k: int, c: TensorElement) -> TensorElement:
    """``(P1 (x) P1) d (P1 (x) P1 + c)`` restricted to M_m.

    Multipliers act by ``(P1 (x) P1)(a (x) b) = P1 a (x) b P1`` and
    ``(a (x) b)(P1 (x) P1) = a P1 (x) P1 b``; the ``c`` part uses the hash
    product.
    """
    n = m + k
    if d.n != n:
        raise linalg.DimensionError(f"d must live in M_{n}")
    _check_c(c, m, k)
    P1 = block_projection(n, 0, m)
    left = TensorElement(n, tuple((co, linalg.matmul(P1, a), linalg.matmul(b, P1)) for co, a, b in d.terms))
    unit_part = TensorElement(n, tuple((co, linalg.matmul(a, P1), linalg.matmul(P1, b)) for co, a, b in left.terms))
    return restrict(unit_part + tensor_mul(left, c, "hash"), m)


def corner_identities(m: int, k: int, d11: TensorElement, c: TensorElement, a21, a12) -> dict[str, bool]:
    """The two corner identities linking c and d11, decided exactly:

    ``(pi(c) a21) . d11 == ((1 (x) a21) c) d11`` and
    ``((a12 (x) 1) c) d11 == d11 . (a12 pi(c))``.
    """
    a21, a12 = linalg.require_exact(np.asarray(a21)), linalg.require_exact(np.asarray(a12))
    pc = pi(c)
    lhs21 = act(linalg.matmul(pc, a21), d11, "left")
    rhs21 = tensor_mul(act(a21, c, "right"), d11, "hash")
    lhs12 = tensor_mul(act(a12, c, "left"), d11, "hash")
    rhs12 = act(linalg.matmul(a12, pc), d11, "right")
    return {"a21": coordinates_equal(lhs21, rhs21), "a12": coordinates_equal(lhs12, rhs12)}


def scale_c(c: TensorElement, t) -> TensorElement:
    """``sum (t r_j) (x) (t^-1 s_j)``: same element, different representation."""
    t = Fraction(t)
    return TensorElement(c.n, tuple((co, a * t, b / t) for co, a, b in c.terms))
