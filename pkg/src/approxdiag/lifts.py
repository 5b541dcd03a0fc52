"""Biorthogonal systems on host spaces and the lift E: M_n -> B(X).

A system on a host of dimension D is a pair of D x n matrices ``X`` (the
vectors x_i as columns) and ``Y`` (the functionals x*_j as columns, in the
coordinates of the host's pairing ``<x, y> = sum_k w_k x_k y_k``).
Biorthogonality reads ``X^T W Y = I`` with ``W = diag(w)``, and the lift is

    E(a) = X a Y^T W,    i.e.  E(a) x = sum_ij a_ij <x, x*_j> x_i.

When X, Y and the weights are exact the lift of an exact matrix is exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import linalg, spaces
from .groups import MatrixGroup, is_irreducible
from .spaces import INF, HostSpace, NormInterval

SYSTEM_KINDS = ("lp_truncation", "dissection", "lorentz", "tensor")
CERT_TOL = 1e-9
N_RANDOM_PROBES = 8


class ReducibleGroupError(ValueError):
    pass


def _exact_weights(h: HostSpace) -> bool:
    return h.weights is not None and all(isinstance(w, (int, Fraction)) for w in h.weights)


def exact_power(x: Fraction, r: Fraction) -> Fraction | None:
    """``x**r`` for positive rational x and rational r, or None if irrational."""
    x, r = Fraction(x), Fraction(r)
    num, den = x.numerator ** abs(r.numerator), x.denominator ** abs(r.numerator)
    if r < 0:
        num, den = den, num
    k = r.denominator

    def root(m: int) -> int | None:
        c = round(m ** (1.0 / k)) if m else 0
        for cand in (c - 1, c, c + 1):
            if cand >= 0 and cand**k == m:
                return cand
        return None

    a, b = root(num), root(den)
    if a is None or b is None:
        return None
    return Fraction(a, b)


def _reciprocal_exponent(p: float) -> Fraction | None:
    """1/p as a fraction when p is a 'nice' rational (1, 1.5, 2, 3, inf ...)."""
    if p == INF:
        return Fraction(0)
    frac = Fraction(p).limit_denominator(1000)
    if float(frac) != p:
        return None
    return 1 / frac


@dataclass(frozen=True)
class BiorthogonalSystem:
    host: HostSpace
    X: np.ndarray
    Y: np.ndarray
    kind: str = "custom"
    coordinate: bool = False
    cells: tuple | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.X.shape != self.Y.shape or self.X.shape[0] != self.host.dim:
            raise linalg.DimensionError("X and Y must both be dim x n")
        if self.n > self.host.dim:
            raise ValueError("system size exceeds host dimension")

    @property
    def n(self) -> int:
        return self.X.shape[1]

    @property
    def exact(self) -> bool:
        weights_ok = self.host.kind != "weighted_lp" or _exact_weights(self.host)
        return weights_ok and linalg.is_exact(self.X) and linalg.is_exact(self.Y)

    def weight_matrix(self) -> np.ndarray:
        if self.exact:
            W = linalg.identity(self.host.dim)
            if self.host.kind == "weighted_lp":
                for i, w in enumerate(self.host.weights):
                    W[i, i] = linalg._exact_scalar(w)
            return W
        return np.diag(self.host.weight_array())

    def gram(self) -> np.ndarray:
        """``<x_i, x*_j>`` for all i, j."""
        if self.exact:
            return linalg.matmul_chain(self.X.T.copy(), self.weight_matrix(), self.Y)
        return linalg.to_float(self.X).T @ self.weight_matrix() @ linalg.to_float(self.Y)

    def biorthogonality_defect(self) -> float:
        G = self.gram()
        if self.exact:
            return 0.0 if linalg.equal(G, linalg.identity(self.n)) else float(np.max(np.abs(linalg.to_float(G) - np.eye(self.n))))
        return float(np.max(np.abs(G - np.eye(self.n)))) if self.n else 0.0

    def trace_defect(self) -> float:
        """``|1 - (1/n) sum_i <x_i, x*_i>|``."""
        tr = sum(self.gram()[i, i] for i in range(self.n))
        return abs(float(1 - Fraction(tr) / self.n)) if self.exact else abs(1 - float(tr) / self.n)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "n": self.n, "host": self.host.to_dict(), "exact": self.exact}
        if self.cells is not None:
            out["cells"] = [list(c) for c in self.cells]
        out.update(self.params)
        return out


def _coordinate_system(host: HostSpace, n: int, kind: str) -> BiorthogonalSystem:
    if n < 1 or n > host.dim:
        raise ValueError(f"system size {n} must lie in [1, {host.dim}]")
    I = linalg.identity(host.dim)[:, :n].copy()
    return BiorthogonalSystem(host, I, I.copy(), kind, coordinate=True)


def _dissection_system(p: float, atom_weights: Sequence, cells: Sequence[Sequence[int]]) -> BiorthogonalSystem:
    weights = tuple(atom_weights)
    if any(w <= 0 for w in weights):
        raise ValueError("atom measures must be positive")
    total = sum(weights)
    exact_w = all(isinstance(w, (int, Fraction)) for w in weights)
    if (exact_w and total != 1) or (not exact_w and abs(float(total) - 1.0) > 1e-12):
        raise ValueError(f"atom measures must sum to 1 (got {total})")
    D = len(weights)
    cells = tuple(tuple(int(a) for a in c) for c in cells)
    flat = sorted(a for c in cells for a in c)
    if flat != list(range(D)) or any(not c for c in cells):
        raise ValueError("cells must partition the atoms into nonempty sets")
    host = HostSpace.weighted(p, weights)
    n = len(cells)
    r = _reciprocal_exponent(p)
    mus = [sum(weights[a] for a in c) for c in cells]
    xs, ys = [], []
    exact = exact_w and r is not None
    if exact:
        for mu in mus:
            xv, yv = exact_power(mu, -r), exact_power(mu, r - 1)
            if xv is None or yv is None:
                exact = False
                break
            xs.append(xv)
            ys.append(yv)
    if exact:
        X, Y = linalg.zeros(D, n), linalg.zeros(D, n)
    else:
        X, Y = np.zeros((D, n)), np.zeros((D, n))
        inv_p = 0.0 if p == INF else 1.0 / p
        xs = [float(mu) ** -inv_p for mu in mus]
        ys = [float(mu) ** (inv_p - 1.0) for mu in mus]
    for i, c in enumerate(cells):
        for a in c:
            X[a, i] = xs[i]
            Y[a, i] = ys[i]
    return BiorthogonalSystem(host, X, Y, "dissection", cells=cells)


def _tensor_system(s1: BiorthogonalSystem, s2: BiorthogonalSystem) -> BiorthogonalSystem:
    for s in (s1, s2):
        if not s.host.unit_weights:
            raise ValueError("tensor systems need unit-weight l_p components")
    host = HostSpace.mixed(outer=s1.host.dim, inner=s2.host.dim, q=s1.host.p, p=s2.host.p)
    if s1.exact and s2.exact:
        X, Y = linalg.kron(s1.X, s2.X), linalg.kron(s1.Y, s2.Y)
    else:
        X = np.kron(linalg.to_float(s1.X), linalg.to_float(s2.X))
        Y = np.kron(linalg.to_float(s1.Y), linalg.to_float(s2.Y))
    return BiorthogonalSystem(host, X, Y, "tensor", params={"factors": [s1.to_dict(), s2.to_dict()]})


def make_system(kind: str, **params) -> BiorthogonalSystem:
    """Build a biorthogonal system.

    ``lp_truncation``: ``p``, ``dim``, ``n`` (first n unit vectors of l_p^dim).
    ``dissection``: ``p``, ``atom_weights`` (probabilities), ``cells``.
    ``lorentz``: ``weights``, ``p``, ``n``.
    ``tensor``: ``left``, ``right`` systems; the host is l_q(l_p) with
    the left exponent outside.
    """
    if kind == "lp_truncation":
        return _coordinate_system(HostSpace.lp(params["p"], int(params["dim"])), int(params["n"]), kind)
    if kind == "lorentz":
        return _coordinate_system(HostSpace.lorentz(params["weights"], params["p"]), int(params["n"]), kind)
    if kind == "dissection":
        return _dissection_system(params["p"], params["atom_weights"], params["cells"])
    if kind == "tensor":
        return _tensor_system(params["left"], params["right"])
    raise ValueError(f"unknown system kind {kind!r}")


# --- the lift ------------------------------------------------------------------


@dataclass(frozen=True)
class Lift:
    system: BiorthogonalSystem

    @property
    def n(self) -> int:
        return self.system.n

    @property
    def dim(self) -> int:
        return self.system.host.dim

    def apply(self, a) -> np.ndarray:
        return lift_apply(self, a)

    def projection(self) -> np.ndarray:
        return lift_apply(self, linalg.identity(self.n, self.system.exact))

    def adjoint(self, T: np.ndarray) -> np.ndarray:
        """Matrix of the adjoint on dual coordinates: ``W^-1 T^T W``."""
        w = self.system.host.weight_array()
        return linalg.to_float(T).T * w[None, :] / w[:, None]


def lift_apply(L: Lift, a) -> np.ndarray:
    s = L.system
    a = np.asarray(a)
    if a.shape != (s.n, s.n):
        raise linalg.DimensionError(f"expected a {s.n}x{s.n} matrix, got {a.shape}")
    exact = s.exact and linalg.is_exact(a)
    if s.coordinate:
        out = linalg.zeros(s.host.dim, s.host.dim, exact)
        out[: s.n, : s.n] = linalg.require_exact(a) if exact else linalg.to_float(a)
        return out
    if exact:
        return linalg.matmul_chain(s.X, linalg.require_exact(a), s.Y.T.copy(), s.weight_matrix())
    X, Y = linalg.to_float(s.X), linalg.to_float(s.Y)
    return (X @ linalg.to_float(a) @ Y.T) * s.host.weight_array()[None, :]


# --- dissections -----------------------------------------------------------------


def _cell_measure(weights, cell) -> Fraction | float:
    return sum(weights[a] for a in cell)


def refine_dyadic(atom_weights: Sequence, cells: Sequence[Sequence[int]]) -> list[tuple[int, ...]]:
    """Split the largest-measure splittable cell (lowest index on ties) into
    two halves by atom count, keeping it in place."""
    candidates = [i for i, c in enumerate(cells) if len(c) > 1]
    if not candidates:
        raise ValueError("every cell is a single atom; no further refinement")
    best = max(candidates, key=lambda i: (_cell_measure(atom_weights, cells[i]), -i))
    c = tuple(cells[best])
    half = len(c) // 2
    out = [tuple(x) for x in cells]
    out[best : best + 1] = [c[:half], c[half:]]
    return out


def dyadic_chain(atom_weights: Sequence, steps: int) -> list[list[tuple[int, ...]]]:
    """Refinement chain starting from the one-cell dissection."""
    cells = [tuple(range(len(atom_weights)))]
    chain = [cells]
    for _ in range(steps):
        cells = refine_dyadic(atom_weights, cells)
        chain.append(cells)
    return chain


def random_dissection(rng: np.random.Generator, n_atoms: int, n_cells: int) -> tuple[tuple[Fraction, ...], list[tuple[int, ...]]]:
    """Random rational probability on ``n_atoms`` atoms, randomly grouped
    into ``n_cells`` nonempty cells."""
    if not 1 <= n_cells <= n_atoms:
        raise ValueError("need 1 <= n_cells <= n_atoms")
    raw = [int(v) for v in rng.integers(1, 20, size=n_atoms)]
    total = sum(raw)
    weights = tuple(Fraction(v, total) for v in raw)
    order = [int(i) for i in rng.permutation(n_atoms)]
    labels = list(range(n_cells)) + [int(v) for v in rng.integers(0, n_cells, size=n_atoms - n_cells)]
    cells: list[list[int]] = [[] for _ in range(n_cells)]
    for atom, lab in zip(order, labels):
        cells[lab].append(atom)
    return weights, [tuple(sorted(c)) for c in cells]


# --- property (A) certification ---------------------------------------------------


@dataclass
class CertificateRow:
    n: int
    group: str
    group_order: int
    irreducible: bool
    a_i_residual: float
    a_ii_residual: float | None
    a_ii_certified: bool
    a_iii: float
    a_iii_lower: float
    a_iii_method: str
    trace_defect: float
    biorthogonality_defect: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class CertificateReport:
    rows: list[CertificateRow]
    probes: dict
    verdict: bool
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "rows": [r.to_dict() for r in self.rows],
            "probes": self.probes,
            "verdict": self.verdict,
            "notes": list(self.notes),
        }


def probe_vectors(h: HostSpace, seed: int = 0, n_random: int = N_RANDOM_PROBES) -> np.ndarray:
    """Columns: standard basis, all-ones, then fixed-seed random vectors,
    each scaled to norm 1 in ``h``."""
    rng = np.random.default_rng(seed)
    P = np.hstack([np.eye(h.dim), np.ones((h.dim, 1)), rng.standard_normal((h.dim, n_random))])
    norms = np.array([spaces.vec_norm(h, P[:, j]) for j in range(P.shape[1])])
    return P / norms[None, :]


def structural_bound(h: HostSpace, K: float = 1.0) -> tuple[float, float]:
    """``(2 K M, M)`` for a lorentz host, M estimated on at most 10 coordinates."""
    M = spaces.subsym_constant_M(h, min(h.dim, spaces.SUBSYM_MAX_N))
    return 2 * K * M, M


def _residual(h: HostSpace, P: np.ndarray, V: np.ndarray) -> float:
    R = P @ V - V
    return max(spaces.vec_norm(h, R[:, j]) for j in range(V.shape[1]))


def certify_A(
    schedule: Sequence[tuple[BiorthogonalSystem, MatrixGroup]],
    host: HostSpace | None = None,
    test_vectors: np.ndarray | None = None,
    test_functionals: np.ndarray | None = None,
    seed: int = 0,
    tol: float = CERT_TOL,
) -> CertificateReport:
    """Finite-scale property (A) report along a schedule of systems.

    A(i):   max over probe vectors of ``||P x - x||``.
    A(ii):  max over probe functionals of ``||P^a z - z||`` in the dual norm
            (weighted l_p hosts only; otherwise reported as not certified).
    A(iii): max over the group of the operator-norm upper bound of ``E(g)``;
            on lorentz hosts the certified value is the structural ``2KM``
            bound and the ascent lower bounds are reported next to it.
    """
    if not schedule:
        raise ValueError("empty schedule")
    host = schedule[0][0].host if host is None else host
    ns = [s.n for s, _ in schedule]
    if any(a > b for a, b in zip(ns, ns[1:])):
        raise ValueError("schedule must be nondecreasing in n")
    dual = spaces.dual_host(host) if host.kind == "weighted_lp" else None
    V = probe_vectors(host, seed) if test_vectors is None else linalg.to_float(test_vectors)
    Z = None
    if dual is not None:
        Z = probe_vectors(dual, seed + 1) if test_functionals is None else linalg.to_float(test_functionals)
    notes = []
    if dual is None:
        notes.append(f"A(ii) not certified: no dual-norm engine for {host.kind} hosts")
    structural = None
    if host.kind == "lorentz":
        structural = structural_bound(host)
        notes.append(f"A(iii) on lorentz host: structural bound 2KM with K=1, M={structural[1]!r}")
    rows = []
    for system, G in schedule:
        if system.host != host:
            raise ValueError("every system in the schedule must live on the given host")
        if G.n != system.n:
            raise linalg.DimensionError(f"group acts on n={G.n}, system has n={system.n}")
        if not is_irreducible(G):
            raise ReducibleGroupError(f"group {G.name or '?'} on n={G.n} is reducible")
        L = Lift(system)
        P = linalg.to_float(L.projection())
        a_i = _residual(host, P, V)
        a_ii = _residual(dual, L.adjoint(P), Z) if dual is not None else None
        lowers, uppers = [], []
        for g in G:
            iv = spaces.op_norm(host, host, lift_apply(L, g.to_matrix()), seed=seed)
            lowers.append(iv.lower)
            uppers.append(iv.upper)
        if structural is not None:
            a_iii, method = structural[0], "structural 2KM"
        else:
            a_iii, method = max(uppers), "op_norm upper"
        rows.append(
            CertificateRow(
                n=system.n,
                group=G.name,
                group_order=len(G),
                irreducible=True,
                a_i_residual=a_i,
                a_ii_residual=a_ii,
                a_ii_certified=dual is not None,
                a_iii=a_iii,
                a_iii_lower=max(lowers),
                a_iii_method=method,
                trace_defect=system.trace_defect(),
                biorthogonality_defect=system.biorthogonality_defect(),
            )
        )
    ok = all(math.isfinite(r.a_iii) and r.a_iii_lower <= r.a_iii + tol for r in rows)
    ok = ok and all(b.a_i_residual <= a.a_i_residual + tol for a, b in zip(rows, rows[1:]))
    if dual is not None:
        ok = ok and all(b.a_ii_residual <= a.a_ii_residual + tol for a, b in zip(rows, rows[1:]))
    probes = {
        "vectors": "standard basis, all-ones, random normal; each scaled to unit host norm",
        "n_vectors": int(V.shape[1]),
        "n_random": N_RANDOM_PROBES,
        "seed": seed,
        "functionals": None if Z is None else int(Z.shape[1]),
        "functional_seed": None if Z is None else seed + 1,
    }
    return CertificateReport(rows, probes, ok, notes)
