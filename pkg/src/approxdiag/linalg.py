"""Dense matrices over exact rationals or float64.

Matrices are plain numpy arrays.  An *exact* matrix is an ``object`` array
whose entries are ``int`` or ``fractions.Fraction``; a *float* matrix is a
``float64`` array.  The two are never mixed implicitly: combining them raises
:class:`ExactnessError`, and :func:`to_float` is the only way across.
"""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

Scalar = Union[int, Fraction, float]


class ExactnessError(TypeError):
    """Float data reached an operation that needs exact arithmetic."""


class DimensionError(ValueError):
    """Operand shapes are incompatible."""


def _exact_scalar(x) -> int | Fraction:
    if isinstance(x, (bool, np.bool_)):
        return int(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else x
    if isinstance(x, Rational):
        return _exact_scalar(Fraction(x.numerator, x.denominator))
    raise ExactnessError(f"cannot use {type(x).__name__} value {x!r} as an exact scalar")


def as_exact(a) -> np.ndarray:
    """Copy ``a`` into an exact object array; floats are rejected."""
    arr = np.asarray(a, dtype=object) if not isinstance(a, np.ndarray) else a
    if arr.dtype.kind == "f":
        raise ExactnessError("float array given where exact entries are required")
    out = np.empty(arr.shape, dtype=object)
    flat_in = arr.reshape(-1)
    flat_out = out.reshape(-1)
    for i, x in enumerate(flat_in):
        flat_out[i] = _exact_scalar(x)
    return out


def is_exact(a: np.ndarray) -> bool:
    if a.dtype.kind in "iub":
        return True
    if a.dtype != object:
        return False
    return all(isinstance(x, (int, Fraction)) for x in a.reshape(-1))


def require_exact(a: np.ndarray, what: str = "matrix") -> np.ndarray:
    if not is_exact(a):
        raise ExactnessError(f"{what} must have exact rational entries")
    return a if a.dtype == object else as_exact(a)


def to_float(a) -> np.ndarray:
    """The explicit exact-to-float conversion."""
    arr = np.asarray(a)
    if arr.dtype == object:
        return np.array([float(x) for x in arr.reshape(-1)], dtype=float).reshape(arr.shape)
    return arr.astype(float)


def zeros(rows: int, cols: int, exact: bool = True) -> np.ndarray:
    if exact:
        out = np.empty((rows, cols), dtype=object)
        out.fill(0)
        return out
    return np.zeros((rows, cols))


def identity(n: int, exact: bool = True) -> np.ndarray:
    out = zeros(n, n, exact)
    for i in range(n):
        out[i, i] = 1
    return out


def matrix_unit(n: int, i: int, j: int, exact: bool = True) -> np.ndarray:
    """The n x n matrix unit e_ij (0-based indices)."""
    out = zeros(n, n, exact)
    out[i, j] = 1
    return out


def _check_kinds(a: np.ndarray, b: np.ndarray) -> bool:
    ea, eb = a.dtype == object, b.dtype == object
    if ea != eb:
        raise ExactnessError("cannot mix exact and float matrices; convert with to_float")
    return ea


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product.  Exact products skip zero entries on both sides."""
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    if not _check_kinds(a, b):
        return a @ b
    out = zeros(a.shape[0], b.shape[1])
    brows: dict[int, list] = {}
    for k, j in zip(*np.nonzero(b)):
        brows.setdefault(int(k), []).append((int(j), b[k, j]))
    for i, k in zip(*np.nonzero(a)):
        row = brows.get(int(k))
        if not row:
            continue
        aik = a[i, k]
        for j, v in row:
            out[i, j] += aik * v
    return out


def matmul_chain(*ms: np.ndarray) -> np.ndarray:
    out = ms[0]
    for m in ms[1:]:
        out = matmul(out, m)
    return out


def add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape != b.shape:
        raise DimensionError(f"cannot add {a.shape} and {b.shape}")
    _check_kinds(a, b)
    return a + b


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _check_kinds(a, b)
    return np.kron(a, b)


def equal(a: np.ndarray, b: np.ndarray) -> bool:
    """Exact equality of two exact matrices."""
    require_exact(a)
    require_exact(b)
    return a.shape == b.shape and bool(np.all(a == b))


def vectorize(m: np.ndarray) -> np.ndarray:
    """Row-major flattening (fixed once for the whole package)."""
    return np.array(m, dtype=m.dtype).reshape(-1)


# --- sparse exact Gaussian elimination ------------------------------------


class RowReducer:
    """Incremental reduced row-echelon form over the rationals.

    Rows are sparse ``{column: value}`` dicts with an optional right-hand
    side.  Pivot rows are kept fully reduced against one another, so a new
    row is reduced in a single pass over its pivot columns.
    """

    def __init__(self) -> None:
        self.pivots: dict[int, tuple[dict[int, Fraction], Fraction]] = {}
        self.inconsistent = False

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def add(self, row: Mapping[int, object], rhs=0) -> bool:
        """Insert one equation; return True if it raised the rank."""
        work = {}
        for c, v in row.items():
            v = _exact_scalar(v)
            if v:
                work[int(c)] = Fraction(v)
        r = Fraction(_exact_scalar(rhs))
        for c in [c for c in work if c in self.pivots]:
            f = work.get(c)
            if not f:
                continue
            prow, prhs = self.pivots[c]
            for pc, pv in prow.items():
                nv = work.get(pc, 0) - f * pv
                if nv:
                    work[pc] = nv
                else:
                    work.pop(pc, None)
            r -= f * prhs
        if not work:
            if r != 0:
                self.inconsistent = True
            return False
        col = min(work)
        piv = work[col]
        work = {c: v / piv for c, v in work.items()}
        r = r / piv
        for pc, (prow, prhs) in list(self.pivots.items()):
            f = prow.get(col)
            if not f:
                continue
            for c, v in work.items():
                nv = prow.get(c, 0) - f * v
                if nv:
                    prow[c] = nv
                else:
                    prow.pop(c, None)
            self.pivots[pc] = (prow, prhs - f * r)
        self.pivots[col] = (work, r)
        return True

    def solution(self, nvars: int) -> list[Fraction]:
        """A particular solution with every free variable set to zero."""
        sol = [Fraction(0)] * nvars
        for col, (_, r) in self.pivots.items():
            sol[col] = r
        return sol


def _sparse_vector(m: np.ndarray) -> dict[int, object]:
    flat = vectorize(m)
    return {int(i): flat[i] for i in np.nonzero(flat)[0]}


def rank_of_span(ms: Sequence[np.ndarray]) -> int:
    """Exact rank of the linear span of equally sized square matrices."""
    ms = list(ms)
    if not ms:
        return 0
    n = ms[0].shape[0]
    reducer = RowReducer()
    for m in ms:
        if m.ndim != 2 or m.shape != (n, n):
            raise DimensionError(f"expected {n}x{n} matrices, got {m.shape}")
        require_exact(m, "rank_of_span input")
        reducer.add(_sparse_vector(m))
        if reducer.rank == n * n:
            break
    return reducer.rank


def solve_affine(
    equations: Iterable[tuple[Mapping[int, object], object]], nvars: int
) -> tuple[list[Fraction], int]:
    """Solve a sparse exact linear system.

    Returns a particular solution and the dimension of the solution space.
    Raises ``ValueError`` if the system is inconsistent.
    """
    reducer = RowReducer()
    for row, rhs in equations:
        reducer.add(row, rhs)
    if reducer.inconsistent:
        raise ValueError("linear system has no solution")
    return reducer.solution(nvars), nvars - reducer.rank


def inverse(m: np.ndarray) -> np.ndarray:
    """Exact inverse by Gauss-Jordan; raises ``ValueError`` if singular."""
    m = require_exact(m)
    n = m.shape[0]
    if m.shape != (n, n):
        raise DimensionError("inverse needs a square matrix")
    work = np.empty((n, 2 * n), dtype=object)
    work[:, :n] = [[Fraction(x) for x in row] for row in m]
    work[:, n:] = identity(n)
    for col in range(n):
        piv = next((r for r in range(col, n) if work[r, col] != 0), None)
        if piv is None:
            raise ValueError("matrix is singular")
        if piv != col:
            work[[col, piv]] = work[[piv, col]]
        work[col] = work[col] / work[col, col]
        for r in range(n):
            if r != col and work[r, col] != 0:
                work[r] = work[r] - work[r, col] * work[col]
    return as_exact(work[:, n:])


def random_rational(rng: np.random.Generator, rows: int, cols: int, bound: int = 5, denom: int = 4) -> np.ndarray:
    """Random exact matrix with entries p/q, |p| <= bound, 1 <= q <= denom."""
    nums = rng.integers(-bound, bound + 1, size=(rows, cols))
    dens = rng.integers(1, denom + 1, size=(rows, cols))
    out = np.empty((rows, cols), dtype=object)
    for i in range(rows):
        for j in range(cols):
            out[i, j] = _exact_scalar(Fraction(int(nums[i, j]), int(dens[i, j])))
    return out
