"""Finite-dimensional host spaces and certified operator norms.

Three host kinds are supported:

``weighted_lp``
    ``(sum_i w_i |x_i|^p)^(1/p)``, or ``max_i |x_i|`` for ``p = inf``.
    Paired with its dual through the measure pairing ``sum_i w_i x_i y_i``.
``lorentz``
    ``(sum_n w_n x*_n^p)^(1/p)`` where ``x*`` is the nonincreasing
    rearrangement of ``|x|`` and ``w`` is positive and nonincreasing.
``mixed``
    ``l_q(l_p)``: coordinates are grouped into ``outer`` blocks of ``inner``
    entries (block ``j`` holds indices ``j*inner .. j*inner+inner-1``).

:func:`op_norm` returns a :class:`NormInterval`.  Weighted hosts are reduced
to unweighted ``l_p`` by the isometry ``x -> w^(1/p) x``; ``p`` in
``{1, 2, inf}`` is then solved exactly, other ``p`` get a norm-ascent lower
bound and an upper bound from Riesz-Thorin interpolation, tightened by a
Schur test when that is smaller.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import DimensionError, to_float

INF = math.inf
KINDS = ("weighted_lp", "lorentz", "mixed")

ASCENT_RTOL = 1e-10
ASCENT_MAX_ITER = 10_000
ASCENT_RANDOM_SEEDS = 16
SUBSYM_MAX_N = 10


def dual_exponent(p: float) -> float:
    if p == 1:
        return INF
    if p == INF:
        return 1.0
    return p / (p - 1.0)


@dataclass(frozen=True)
class HostSpace:
    kind: str
    dim: int
    p: float
    weights: tuple | None = None
    q: float | None = None
    inner: int | None = None
    outer: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown host kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError("host dimension must be positive")
        if not (1 <= self.p <= INF):
            raise ValueError(f"exponent p={self.p} outside [1, inf]")
        if self.kind == "weighted_lp":
            if self.weights is None or len(self.weights) != self.dim:
                raise ValueError("weighted_lp needs one weight per coordinate")
            if any(w <= 0 for w in self.weights):
                raise ValueError("measure weights must be positive")
        elif self.kind == "lorentz":
            if self.p == INF:
                raise ValueError("lorentz hosts need a finite exponent")
            w = self.weights
            if w is None or len(w) != self.dim:
                raise ValueError("lorentz host needs one weight per coordinate")
            if any(x <= 0 for x in w) or any(a < b for a, b in zip(w, w[1:])):
                raise ValueError("lorentz weights must be positive and nonincreasing")
        else:
            if self.q is None or self.inner is None or self.outer is None:
                raise ValueError("mixed host needs inner, outer and q")
            if self.inner * self.outer != self.dim:
                raise ValueError("mixed host: dim must equal inner * outer")
            if not (1 <= self.q <= INF):
                raise ValueError(f"outer exponent q={self.q} outside [1, inf]")

    # constructors -----------------------------------------------------------

    @classmethod
    def lp(cls, p: float, dim: int) -> "HostSpace":
        return cls("weighted_lp", dim, p, weights=(1,) * dim)

    @classmethod
    def weighted(cls, p: float, weights) -> "HostSpace":
        weights = tuple(weights)
        return cls("weighted_lp", len(weights), p, weights=weights)

    @classmethod
    def lorentz(cls, weights, p: float) -> "HostSpace":
        weights = tuple(weights)
        return cls("lorentz", len(weights), p, weights=weights)

    @classmethod
    def mixed(cls, outer: int, inner: int, q: float, p: float) -> "HostSpace":
        return cls("mixed", outer * inner, p, q=q, inner=inner, outer=outer)

    # helpers ----------------------------------------------------------------

    @property
    def unit_weights(self) -> bool:
        return self.kind == "weighted_lp" and all(w == 1 for w in self.weights)

    def weight_array(self) -> np.ndarray:
        """Float weights of the pairing (ones for lorentz / mixed hosts)."""
        if self.kind == "weighted_lp":
            return np.array([float(w) for w in self.weights])
        return np.ones(self.dim)

    def pairing(self, x, y) -> float:
        x, y = to_float(x), to_float(y)
        return float(np.sum(self.weight_array() * x * y))

    def as_unweighted(self) -> "HostSpace":
        """The l_p host this one is isometric to, if there is one."""
        if self.kind == "weighted_lp":
            return HostSpace.lp(self.p, self.dim)
        if self.kind == "mixed" and self.p == self.q:
            return HostSpace.lp(self.p, self.dim)
        raise ValueError(f"{self.kind} host is not isometric to l_p")

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "dim": self.dim, "p": self.p}
        if self.weights is not None:
            out["weights"] = [float(w) for w in self.weights]
        if self.kind == "mixed":
            out.update(q=self.q, inner=self.inner, outer=self.outer)
        return out


@dataclass(frozen=True)
class NormInterval:
    lower: float
    upper: float
    certified: bool = True
    converged: bool = True
    method: str = ""
    bounds: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if not (0 <= self.lower <= self.upper):
            raise ValueError(f"invalid interval [{self.lower}, {self.upper}]")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def to_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper if math.isfinite(self.upper) else None,
            "certified": self.certified,
            "converged": self.converged,
            "method": self.method,
            "bounds": dict(self.bounds),
        }


# --- vector norms ------------------------------------------------------------


def _lp_cols(X: np.ndarray, p: float) -> np.ndarray:
    A = np.abs(X)
    if p == INF:
        return A.max(axis=0) if A.shape[0] else np.zeros(A.shape[1])
    if p == 1:
        return A.sum(axis=0)
    # scale first to keep |x|^p in range
    m = A.max(axis=0)
    safe = np.where(m > 0, m, 1.0)
    return m * np.sum((A / safe) ** p, axis=0) ** (1.0 / p)


def _col_norms(h: HostSpace, X: np.ndarray) -> np.ndarray:
    """Host norms of the columns of X."""
    if h.kind == "weighted_lp":
        if h.p == INF:
            return _lp_cols(X, INF)
        w = h.weight_array()[:, None] ** (1.0 / h.p)
        return _lp_cols(w * X, h.p)
    if h.kind == "lorentz":
        w = np.array([float(v) for v in h.weights])
        S = -np.sort(-np.abs(X), axis=0)
        return _lp_cols(w[:, None] ** (1.0 / h.p) * S, h.p)
    B = X.reshape(h.outer, h.inner, -1)
    inner = np.stack([_lp_cols(B[j], h.p) for j in range(h.outer)])
    return _lp_cols(inner, h.q)


def vec_norm(h: HostSpace, x) -> float:
    x = to_float(x)
    if x.ndim != 1 or x.shape[0] != h.dim:
        raise DimensionError(f"vector of length {x.shape} on a host of dim {h.dim}")
    return float(_col_norms(h, x[:, None])[0])


def dual_host(h: HostSpace) -> HostSpace:
    """Weighted l_p' with the same weights, under the measure pairing."""
    if h.kind != "weighted_lp":
        raise ValueError(f"no dual-norm engine for {h.kind} hosts")
    return HostSpace.weighted(dual_exponent(h.p), h.weights)


# --- ascent machinery --------------------------------------------------------


def _lp_dualmap(Z: np.ndarray, p: float) -> np.ndarray:
    """Columnwise argmax of <z, x> over the unit ball of l_p."""
    out = np.zeros_like(Z)
    if Z.size == 0:
        return out
    if p == INF:
        return np.sign(Z)
    if p == 1:
        idx = np.argmax(np.abs(Z), axis=0)
        cols = np.arange(Z.shape[1])
        out[idx, cols] = np.sign(Z[idx, cols])
        return out
    e = dual_exponent(p) - 1.0
    A = np.abs(Z)
    m = A.max(axis=0)
    safe = np.where(m > 0, m, 1.0)
    out = np.sign(Z) * (A / safe) ** e
    n = _lp_cols(out, p)
    return out / np.where(n > 0, n, 1.0)


def _mixed_dualmap(Z: np.ndarray, outer: int, inner: int, p: float, q: float) -> np.ndarray:
    B = Z.reshape(outer, inner, -1)
    pd = dual_exponent(p)
    blocks = np.stack([_lp_dualmap(B[j], p) for j in range(outer)])
    sizes = np.stack([_lp_cols(B[j], pd) for j in range(outer)])
    coef = _lp_dualmap(sizes, q)
    return (blocks * coef[:, None, :]).reshape(Z.shape)


def _norming(h: HostSpace, Y: np.ndarray) -> np.ndarray:
    """Norming functionals (Euclidean pairing) of the columns of Y."""
    if h.kind == "weighted_lp":
        if h.p == INF:
            return _lp_dualmap(Y, 1.0)
        s = h.weight_array()[:, None] ** (1.0 / h.p)
        return s * _lp_dualmap(s * Y, dual_exponent(h.p))
    if h.kind == "mixed":
        return _mixed_dualmap(Y, h.outer, h.inner, dual_exponent(h.p), dual_exponent(h.q))
    w = np.array([float(v) for v in h.weights])
    ranks = np.argsort(np.argsort(-np.abs(Y), axis=0, kind="stable"), axis=0, kind="stable")
    G = np.sign(Y) * w[ranks] * np.abs(Y) ** (h.p - 1.0)
    n = _col_norms(h, Y)
    return G / np.where(n > 0, n, 1.0) ** (h.p - 1.0)


def _ascent_step(h: HostSpace, Z: np.ndarray) -> np.ndarray:
    """A unit vector of h roughly maximising <z, x>."""
    if h.kind == "weighted_lp":
        if h.p == INF:
            return _lp_dualmap(Z, INF)
        s = h.weight_array()[:, None] ** (1.0 / h.p)
        return _lp_dualmap(Z / s, h.p) / s
    if h.kind == "mixed":
        return _mixed_dualmap(Z, h.outer, h.inner, h.p, h.q)
    # lorentz: pair the largest weights with the largest |z| and solve the
    # resulting weighted l_p problem; the true norm renormalises below
    w = np.array([float(v) for v in h.weights])
    ranks = np.argsort(np.argsort(-np.abs(Z), axis=0, kind="stable"), axis=0, kind="stable")
    v = w[ranks]
    if h.p == 1:
        R = np.abs(Z) / v
        idx = np.argmax(R, axis=0)
        out = np.zeros_like(Z)
        cols = np.arange(Z.shape[1])
        out[idx, cols] = np.sign(Z[idx, cols])
    else:
        e = dual_exponent(h.p) - 1.0
        A = np.abs(Z) / v
        m = A.max(axis=0)
        out = np.sign(Z) * (A / np.where(m > 0, m, 1.0)) ** e
    n = _col_norms(h, out)
    return out / np.where(n > 0, n, 1.0)


@dataclass
class AscentResult:
    value: float
    vector: np.ndarray
    iterations: int
    converged: bool


def norm_ascent(
    src: HostSpace,
    dst: HostSpace,
    T: np.ndarray,
    seeds: np.ndarray,
    rtol: float = ASCENT_RTOL,
    max_iter: int = ASCENT_MAX_ITER,
) -> AscentResult:
    """Lower bound for ||T||_{src -> dst} by a generalised power method.

    Each column of ``seeds`` is iterated independently through
    ``x <- step_src(T^t norming_dst(T x))``; every iterate is evaluated
    exactly, so the returned value is a valid lower bound regardless of
    convergence.  For l_p hosts this is Boyd's iteration.
    """
    T = np.asarray(T, dtype=float)
    X = np.array(seeds, dtype=float)
    n = _col_norms(src, X)
    keep = n > 0
    X = X[:, keep] / n[keep]
    if X.shape[1] == 0:
        return AscentResult(0.0, np.zeros(T.shape[1]), 0, True)
    vals = _col_norms(dst, T @ X)
    best_vals = vals.copy()
    best_X = X.copy()
    active = np.ones(X.shape[1], dtype=bool)
    it = 0
    while it < max_iter and active.any():
        it += 1
        Xa = X[:, active]
        Y = T @ Xa
        Z = T.T @ _norming(dst, Y)
        Xn = _ascent_step(src, Z)
        nrm = _col_norms(src, Xn)
        ok = nrm > 0
        Xn[:, ok] /= nrm[ok]
        new = _col_norms(dst, T @ Xn)
        new[~ok] = 0.0
        old = vals[active]
        idx = np.flatnonzero(active)
        better = new > best_vals[idx]
        best_vals[idx[better]] = new[better]
        best_X[:, idx[better]] = Xn[:, better]
        X[:, idx] = Xn
        vals[idx] = new
        scale = np.maximum(np.abs(old), np.finfo(float).tiny)
        done = (np.abs(new - old) <= rtol * scale) | ~ok | (new < old * (1 - 1e-12))
        active[idx[done]] = False
    j = int(np.argmax(best_vals))
    return AscentResult(float(best_vals[j]), best_X[:, j], it, not active.any())


def default_seeds(dim: int, seed: int = 0, n_random: int = ASCENT_RANDOM_SEEDS) -> np.ndarray:
    """All basis vectors plus ``n_random`` fixed-seed Gaussian vectors."""
    rng = np.random.default_rng(seed)
    return np.hstack([np.eye(dim), rng.standard_normal((dim, n_random))])


# --- operator norms ----------------------------------------------------------


def _exact_l1(T: np.ndarray) -> float:
    return float(np.abs(T).sum(axis=0).max()) if T.size else 0.0


def _exact_linf(T: np.ndarray) -> float:
    return float(np.abs(T).sum(axis=1).max()) if T.size else 0.0


def _spectral(T: np.ndarray, rtol: float = 1e-12, max_iter: int = ASCENT_MAX_ITER) -> tuple[float, float, bool]:
    if not T.size or not np.any(T):
        return 0.0, 0.0, True
    U, s, Vt = np.linalg.svd(T)
    sigma = float(s[0])
    # refine the lower bound by power iteration on T^t T from the top
    # right singular vector; each iterate is an honest Rayleigh value
    x = Vt[0]
    lower = float(np.linalg.norm(T @ x) / np.linalg.norm(x))
    prev = lower
    converged = False
    for _ in range(max_iter):
        x = T.T @ (T @ x)
        nx = np.linalg.norm(x)
        if nx == 0:
            break
        x /= nx
        val = float(np.linalg.norm(T @ x))
        lower = max(lower, val)
        if abs(val - prev) <= rtol * max(val, np.finfo(float).tiny):
            converged = True
            break
        prev = val
    slack = 8 * max(T.shape) * np.finfo(float).eps
    upper = float(max(sigma * (1 + slack), lower))
    return min(lower, upper), upper, converged


def _schur_upper(A: np.ndarray, p: float, rtol: float = 1e-13, max_iter: int = 2000) -> float:
    """Schur-test upper bound for ||A||_p with A >= 0 entrywise.

    With positive test vectors chosen from the positive power iterate
    ``x``: if ``y = A x`` then ``||A||_p <= max_j ((A^t y^(p-1))_j / x_j^(p-1))^(1/p)``.
    The bound is exact at the fixed point of the iteration.
    """
    m, n = A.shape
    live_c = A.any(axis=0)
    live_r = A.any(axis=1)
    if not live_c.any():
        return 0.0
    A = A[np.ix_(live_r, live_c)]
    pd = dual_exponent(p)
    x = np.ones(A.shape[1])
    best = INF
    for _ in range(max_iter):
        y = A @ x
        g = A.T @ (y ** (p - 1.0))
        bound = float(np.max(g / x ** (p - 1.0)) ** (1.0 / p))
        if bound < best:
            done = best < INF and best - bound <= rtol * bound
            best = bound
            if done:
                break
        xn = g ** (pd - 1.0)
        xn /= xn.max()
        xn = np.maximum(xn, 1e-300)
        if np.allclose(xn, x, rtol=1e-15, atol=0):
            break
        x = xn
    return best


def _reduce_weighted(src: HostSpace, dst: HostSpace, T: np.ndarray) -> np.ndarray:
    p = src.p
    if p == INF:
        return T
    ws = src.weight_array() ** (1.0 / p) if src.kind == "weighted_lp" else np.ones(src.dim)
    wd = dst.weight_array() ** (1.0 / p) if dst.kind == "weighted_lp" else np.ones(dst.dim)
    return wd[:, None] * T / ws[None, :]


def _isometric_to_lp(h: HostSpace) -> bool:
    return h.kind == "weighted_lp" or (h.kind == "mixed" and h.p == h.q)


def op_norm(
    src: HostSpace,
    dst: HostSpace,
    T,
    seed: int = 0,
    n_random: int = ASCENT_RANDOM_SEEDS,
    rtol: float = ASCENT_RTOL,
    max_iter: int = ASCENT_MAX_ITER,
) -> NormInterval:
    """Certified interval for the operator norm of T: src -> dst."""
    T = to_float(T)
    if T.shape != (dst.dim, src.dim):
        raise DimensionError(f"operator of shape {T.shape} cannot map dim {src.dim} to dim {dst.dim}")
    if _isometric_to_lp(src) and _isometric_to_lp(dst) and src.p == dst.p:
        R = _reduce_weighted(src, dst, T)
        p = src.p
        if p == 1:
            v = _exact_l1(R)
            return NormInterval(v, v, method="column-sum")
        if p == INF:
            v = _exact_linf(R)
            return NormInterval(v, v, method="row-sum")
        if p == 2:
            lo, hi, conv = _spectral(R, max_iter=max_iter)
            return NormInterval(lo, hi, converged=conv, method="singular-value")
        flat = HostSpace.lp(p, src.dim), HostSpace.lp(p, dst.dim)
        res = norm_ascent(flat[0], flat[1], R, default_seeds(src.dim, seed, n_random), rtol, max_iter)
        interp = _exact_l1(R) ** (1.0 / p) * _exact_linf(R) ** (1.0 - 1.0 / p)
        schur = _schur_upper(np.abs(R), p)
        upper = max(min(interp, schur), res.value)
        return NormInterval(
            res.value,
            upper,
            converged=res.converged,
            method="ascent+interpolation",
            bounds={"interpolation": interp, "schur": schur, "seed": seed},
        )
    res = norm_ascent(src, dst, T, default_seeds(src.dim, seed, n_random), rtol, max_iter)
    return NormInterval(
        res.value, INF, certified=False, converged=res.converged, method="ascent (no certificate)", bounds={"seed": seed}
    )


def increasing_maps(N: int):
    """All pairs of equal-length increasing index sequences in range(N)."""
    for length in range(1, N + 1):
        combos = list(itertools.combinations(range(N), length))
        for src in combos:
            for dst in combos:
                yield src, dst


def subsym_constant_M(h: HostSpace, N: int | None = None) -> float:
    """Desk-scale estimate of the subsequence-equivalence constant.

    Maximises the ascent lower bound of ``x_{m_i}^* (x) -> x_{n_i}`` over
    every pair of increasing index maps on the first N coordinates.
    """
    if h.kind != "lorentz":
        raise ValueError("subsym_constant_M needs a lorentz host")
    N = h.dim if N is None else N
    if N > SUBSYM_MAX_N:
        raise ValueError(f"exhaustive enumeration capped at N={SUBSYM_MAX_N}")
    if N < 1 or N > h.dim:
        raise ValueError("N must lie in [1, dim]")
    sub = HostSpace.lorentz(h.weights[:N], h.p)
    best = 0.0
    seeds = np.eye(N)
    for src, dst in increasing_maps(N):
        A = np.zeros((N, N))
        A[list(dst), list(src)] = 1.0
        best = max(best, norm_ascent(sub, sub, A, seeds).value)
    return best
