"""Finite sums of elementary tensors in M_n (x) M_n.

A :class:`TensorElement` stores a representation ``sum_i c_i a_i (x) b_i``
and never simplifies it.  Equality of elements goes through coordinates in
the basis ``e_ij (x) e_kl``: the coordinate ``C[i, j, k, l]`` of
``a (x) b`` is ``a[i, j] * b[k, l]``, so the n^2 x n^2 grid of a single
elementary tensor is ``outer(vec(a), vec(b))`` with row-major ``vec``.

Two products are available:

* ``hash``:   ``(a (x) b)(c (x) d) = ac (x) db``  (the module-compatible one)
* ``bullet``: ``(a (x) b).(c (x) d) = ac (x) bd``
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from . import linalg
from .groups import MatrixGroup

CONVENTIONS = ("hash", "bullet")
DIAGONAL_CONVENTIONS = ("std", "op", "both")


class InternalCheckError(AssertionError):
    """An identity that must hold by construction failed."""


@dataclass(frozen=True)
class TensorElement:
    n: int
    terms: tuple = ()

    def __post_init__(self) -> None:
        for c, a, b in self.terms:
            if a.shape != (self.n, self.n) or b.shape != (self.n, self.n):
                raise linalg.DimensionError(f"tensor legs must be {self.n}x{self.n}")

    @classmethod
    def from_terms(cls, n: int, terms: Iterable) -> "TensorElement":
        return cls(n, tuple((c, a, b) for c, a, b in terms))

    @classmethod
    def elementary(cls, a, b, coef=1) -> "TensorElement":
        a, b = np.asarray(a), np.asarray(b)
        return cls(a.shape[0], ((coef, a, b),))

    @classmethod
    def zero(cls, n: int) -> "TensorElement":
        return cls(n, ())

    @property
    def exact(self) -> bool:
        return all(
            not isinstance(c, float) and linalg.is_exact(a) and linalg.is_exact(b) for c, a, b in self.terms
        )

    def __len__(self) -> int:
        return len(self.terms)

    def _same_ambient(self, other: "TensorElement") -> None:
        if self.n != other.n:
            raise linalg.DimensionError(f"ambient M_{self.n} vs M_{other.n}")

    def __add__(self, other: "TensorElement") -> "TensorElement":
        self._same_ambient(other)
        return TensorElement(self.n, self.terms + other.terms)

    def __neg__(self) -> "TensorElement":
        return self.scale(-1)

    def __sub__(self, other: "TensorElement") -> "TensorElement":
        return self + (-other)

    def scale(self, s) -> "TensorElement":
        return TensorElement(self.n, tuple((s * c, a, b) for c, a, b in self.terms))


def _nonzeros(m: np.ndarray) -> list[tuple[int, int, object]]:
    return [(int(i), int(j), m[i, j]) for i, j in zip(*np.nonzero(m))]


def sparse_coordinates(t: TensorElement) -> dict[tuple[int, int, int, int], object]:
    """Nonzero coordinates ``{(i, j, k, l): C[i, j, k, l]}``."""
    out: dict[tuple[int, int, int, int], object] = {}
    for c, a, b in t.terms:
        if c == 0:
            continue
        bnz = _nonzeros(b)
        for i, j, av in _nonzeros(a):
            f = c * av
            for k, l, bv in bnz:
                key = (i, j, k, l)
                out[key] = out.get(key, 0) + f * bv
    return {k: v for k, v in out.items() if v != 0}


def to_coordinates(t: TensorElement) -> np.ndarray:
    """Exact n^2 x n^2 coordinate grid; row ``i*n+j``, column ``k*n+l``."""
    if not t.exact:
        raise linalg.ExactnessError("to_coordinates needs exact entries")
    n = t.n
    out = linalg.zeros(n * n, n * n)
    for (i, j, k, l), v in sparse_coordinates(t).items():
        out[i * n + j, k * n + l] = v
    return out


def float_coordinates(t: TensorElement) -> np.ndarray:
    """Float64 coordinate grid, for elements whose legs are float operators."""
    n = t.n
    out = np.zeros((n * n, n * n))
    for c, a, b in t.terms:
        out += float(c) * np.outer(linalg.to_float(a).reshape(-1), linalg.to_float(b).reshape(-1))
    return out


def coordinates_equal(s: TensorElement, t: TensorElement) -> bool:
    s._same_ambient(t)
    if not (s.exact and t.exact):
        raise linalg.ExactnessError("exact comparison needs exact entries")
    return not sparse_coordinates(s - t)


def _mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return linalg.matmul(a, b)


def tensor_mul(s: TensorElement, t: TensorElement, convention: str = "hash") -> TensorElement:
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown product convention {convention!r}")
    s._same_ambient(t)
    terms = []
    for c1, a, b in s.terms:
        for c2, c, d in t.terms:
            right = _mul(d, b) if convention == "hash" else _mul(b, d)
            terms.append((c1 * c2, _mul(a, c), right))
    return TensorElement(s.n, tuple(terms))


def act(a: np.ndarray, t: TensorElement, side: str) -> TensorElement:
    """Bimodule action: ``a.(b (x) c) = ab (x) c``, ``(b (x) c).a = b (x) ca``."""
    if a.shape != (t.n, t.n):
        raise linalg.DimensionError(f"cannot act by {a.shape} on M_{t.n} (x) M_{t.n}")
    if side == "left":
        return TensorElement(t.n, tuple((c, _mul(a, b), d) for c, b, d in t.terms))
    if side == "right":
        return TensorElement(t.n, tuple((c, b, _mul(d, a)) for c, b, d in t.terms))
    raise ValueError(f"side must be 'left' or 'right', not {side!r}")


def act_inner(a: np.ndarray, t: TensorElement, side: str) -> TensorElement:
    """The action that multiplies inside: ``b (x) c -> ba (x) c`` (left leg)
    or ``b (x) ac`` (right leg)."""
    if a.shape != (t.n, t.n):
        raise linalg.DimensionError(f"cannot act by {a.shape} on M_{t.n} (x) M_{t.n}")
    if side == "left":
        return TensorElement(t.n, tuple((c, _mul(b, a), d) for c, b, d in t.terms))
    if side == "right":
        return TensorElement(t.n, tuple((c, b, _mul(a, d)) for c, b, d in t.terms))
    raise ValueError(f"side must be 'left' or 'right', not {side!r}")


def pi(t: TensorElement, opposite: bool = False) -> np.ndarray:
    """Multiplication map ``a (x) b -> ab`` (or ``ba`` when opposite)."""
    exact = t.exact
    out = linalg.zeros(t.n, t.n, exact)
    for c, a, b in t.terms:
        if not exact:
            c, a, b = float(c), linalg.to_float(a), linalg.to_float(b)
        prod = _mul(b, a) if opposite else _mul(a, b)
        out = out + c * prod
    return out


def canonical_diagonal(n: int) -> TensorElement:
    if n < 1:
        raise ValueError("n must be at least 1")
    c = Fraction(1, n)
    terms = tuple(
        (c, linalg.matrix_unit(n, i, j), linalg.matrix_unit(n, j, i)) for i in range(n) for j in range(n)
    )
    return TensorElement(n, terms)


def group_diagonal(G: MatrixGroup) -> TensorElement:
    """The group average ``(1/|G|) sum_g g (x) g^-1``."""
    c = Fraction(1, len(G))
    return TensorElement(G.n, tuple((c, g.to_matrix(), g.inverse().to_matrix()) for g in G))


# --- diagonal identities -----------------------------------------------------


def _std_commutes(coords: dict, n: int) -> bool:
    """``e_pq.d = d.e_pq`` for every matrix unit, read off the coordinates:
    C vanishes unless i == l, and C[i, j, k, i] does not depend on i."""
    by_jk: dict[tuple[int, int], dict[int, object]] = {}
    for (i, j, k, l), v in coords.items():
        if i != l:
            return False
        by_jk.setdefault((j, k), {})[i] = v
    return all(len(vals) == n and len(set(vals.values())) == 1 for vals in by_jk.values())


def _op_commutes(coords: dict, n: int) -> bool:
    """``d e_pq`` multiplied into the left leg equals it multiplied into the
    right leg: C vanishes unless j == k, and C[i, j, j, l] does not depend
    on j."""
    by_il: dict[tuple[int, int], dict[int, object]] = {}
    for (i, j, k, l), v in coords.items():
        if j != k:
            return False
        by_il.setdefault((i, l), {})[j] = v
    return all(len(vals) == n and len(set(vals.values())) == 1 for vals in by_il.values())


def diagonal_checks(t: TensorElement) -> dict[str, bool]:
    """The four identities, each decided exactly."""
    if not t.exact:
        raise linalg.ExactnessError("diagonal checks need exact entries")
    coords = sparse_coordinates(t)
    ident = linalg.identity(t.n)
    return {
        "commutes": _std_commutes(coords, t.n),
        "pi_is_identity": linalg.equal(pi(t), ident),
        "commutes_op": _op_commutes(coords, t.n),
        "pi_op_is_identity": linalg.equal(pi(t, opposite=True), ident),
    }


def _verdict(checks: dict[str, bool], convention: str) -> bool:
    if convention not in DIAGONAL_CONVENTIONS:
        raise ValueError(f"unknown diagonal convention {convention!r}")
    std = checks["commutes"] and checks["pi_is_identity"]
    op = checks["commutes_op"] and checks["pi_op_is_identity"]
    return {"std": std, "op": op, "both": std and op}[convention]


def is_diagonal(t: TensorElement, convention: str = "std", explicit: bool = False) -> bool:
    """Exact diagonal test.

    By default the module identities are read off the coordinates; with
    ``explicit=True`` every matrix unit is actually applied on both sides.
    """
    if explicit:
        n = t.n
        units = [linalg.matrix_unit(n, p, q) for p in range(n) for q in range(n)]
        return is_diagonal_relative(t, units, linalg.identity(n), convention)
    return _verdict(diagonal_checks(t), convention)


def is_diagonal_relative(t: TensorElement, basis: Sequence[np.ndarray], unit: np.ndarray, convention: str = "std") -> bool:
    """Diagonal test for the subalgebra spanned by ``basis`` with identity ``unit``."""
    if not t.exact:
        raise linalg.ExactnessError("diagonal checks need exact entries")
    checks = {
        "commutes": all(coordinates_equal(act(b, t, "left"), act(b, t, "right")) for b in basis),
        "pi_is_identity": linalg.equal(pi(t), linalg.as_exact(unit)),
        "commutes_op": all(coordinates_equal(act_inner(b, t, "left"), act_inner(b, t, "right")) for b in basis),
        "pi_op_is_identity": linalg.equal(pi(t, opposite=True), linalg.as_exact(unit)),
    }
    return _verdict(checks, convention)


def _index(n: int, i: int, j: int, k: int, l: int) -> int:
    return ((i * n + j) * n + k) * n + l


def unique_bidiagonal(n: int, return_nullity: bool = False):
    """Solve ``d e_pq (inner, left) = d e_pq (inner, right)`` for all matrix
    units together with ``pi(d) = I`` over the rationals.

    The solution must be a single point; anything else raises
    :class:`InternalCheckError`.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if n > 4:
        raise ValueError("unique_bidiagonal is limited to n <= 4")
    nvars = n**4
    equations = []
    # The map C -> (b e_pq (x) c) - (b (x) e_pq c) sends the basis tensor
    # e_ij (x) e_kl to delta_jp e_iq (x) e_kl - delta_qk e_ij (x) e_pl.
    for p in range(n):
        for q in range(n):
            rows: dict[int, dict[int, int]] = {}
            for i in range(n):
                for j in range(n):
                    for k in range(n):
                        for l in range(n):
                            var = _index(n, i, j, k, l)
                            if j == p:
                                out = _index(n, i, q, k, l)
                                rows.setdefault(out, {})
                                rows[out][var] = rows[out].get(var, 0) + 1
                            if k == q:
                                out = _index(n, i, j, p, l)
                                rows.setdefault(out, {})
                                rows[out][var] = rows[out].get(var, 0) - 1
            equations.extend((row, 0) for row in rows.values() if any(row.values()))
    for a in range(n):
        for d in range(n):
            equations.append(({_index(n, a, j, j, d): 1 for j in range(n)}, 1 if a == d else 0))
    try:
        sol, nullity = linalg.solve_affine(equations, nvars)
    except ValueError as exc:
        raise InternalCheckError(f"no simultaneous diagonal for n={n}") from exc
    if nullity != 0:
        raise InternalCheckError(f"solution space for n={n} has dimension {nullity}, expected a single point")
    terms = []
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    v = sol[_index(n, i, j, k, l)]
                    if v:
                        terms.append((linalg._exact_scalar(v), linalg.matrix_unit(n, i, j), linalg.matrix_unit(n, k, l)))
    t = TensorElement(n, tuple(terms))
    return (t, nullity) if return_nullity else t


# --- norms ---------------------------------------------------------------------


def spectral_norm(a: np.ndarray) -> float:
    a = linalg.to_float(a)
    return float(np.linalg.norm(a, 2)) if a.size else 0.0


def projective_upper(t: TensorElement, norm: Callable[[np.ndarray], float] = spectral_norm) -> float:
    """``sum |c_i| norm(a_i) norm(b_i)`` for the stored representation."""
    total = 0.0
    for c, a, b in t.terms:
        if c == 0:
            continue
        total += abs(float(c)) * norm(a) * norm(b)
    return total
