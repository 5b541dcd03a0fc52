"""Finite matrix groups, mostly in signed-permutation form D(t)·sigma."""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import linalg

ORDER_CAP = 10**6


class GroupOrderError(ValueError):
    """A construction would exceed ORDER_CAP elements."""


@dataclass(frozen=True, order=True)
class SignedPermutation:
    """The monomial matrix with entry ``signs[perm[j]]`` at ``(perm[j], j)``.

    Column j is sent to row ``perm[j]``; ``signs`` is indexed by row, so the
    element equals ``D(signs) @ P`` where ``P`` is the permutation matrix.
    Field order makes the dataclass ordering lexicographic in
    (sign vector, permutation word).
    """

    signs: tuple[int, ...]
    perm: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.signs) != len(self.perm):
            raise ValueError("signs and perm must have equal length")
        if sorted(self.perm) != list(range(len(self.perm))):
            raise ValueError(f"{self.perm} is not a permutation of 0..n-1")
        if any(s not in (1, -1) for s in self.signs):
            raise ValueError("signs must be +1 or -1")

    @classmethod
    def identity(cls, n: int) -> "SignedPermutation":
        return cls((1,) * n, tuple(range(n)))

    @classmethod
    def make(cls, perm: Sequence[int], signs: Sequence[int] | None = None) -> "SignedPermutation":
        perm = tuple(int(i) for i in perm)
        signs = (1,) * len(perm) if signs is None else tuple(int(s) for s in signs)
        return cls(signs, perm)

    @property
    def n(self) -> int:
        return len(self.perm)

    def __matmul__(self, other: "SignedPermutation") -> "SignedPermutation":
        if other.n != self.n:
            raise linalg.DimensionError("signed permutations of different degree")
        perm = tuple(self.perm[j] for j in other.perm)
        signs = [0] * self.n
        for j in range(self.n):
            row = other.perm[j]
            signs[self.perm[row]] = self.signs[self.perm[row]] * other.signs[row]
        return SignedPermutation(tuple(signs), perm)

    def inverse(self) -> "SignedPermutation":
        perm = [0] * self.n
        signs = [0] * self.n
        for j, i in enumerate(self.perm):
            perm[i] = j
            signs[j] = self.signs[i]
        return SignedPermutation(tuple(signs), tuple(perm))

    def kron(self, other: "SignedPermutation") -> "SignedPermutation":
        """Kronecker product, matching ``np.kron`` of the dense matrices."""
        m = other.n
        perm = tuple(self.perm[a] * m + other.perm[b] for a in range(self.n) for b in range(m))
        signs = tuple(s * t for s in self.signs for t in other.signs)
        return SignedPermutation(signs, perm)

    def to_matrix(self, exact: bool = True) -> np.ndarray:
        out = linalg.zeros(self.n, self.n, exact)
        for j, i in enumerate(self.perm):
            out[i, j] = self.signs[i]
        return out

    def sparse_vector(self) -> dict[int, int]:
        """Row-major vectorisation as a sparse dict."""
        return {i * self.n + j: self.signs[i] for j, i in enumerate(self.perm)}

    def to_dict(self) -> dict:
        return {"perm": list(self.perm), "signs": list(self.signs)}


@dataclass(frozen=True)
class DenseElement:
    """Fallback group element: an invertible exact matrix."""

    entries: tuple[tuple, ...]

    @classmethod
    def from_matrix(cls, m) -> "DenseElement":
        m = linalg.as_exact(m)
        return cls(tuple(tuple(row) for row in m))

    @property
    def n(self) -> int:
        return len(self.entries)

    def to_matrix(self, exact: bool = True) -> np.ndarray:
        m = linalg.as_exact(self.entries)
        return m if exact else linalg.to_float(m)

    def __matmul__(self, other: "DenseElement") -> "DenseElement":
        return DenseElement.from_matrix(linalg.matmul(self.to_matrix(), other.to_matrix()))

    def inverse(self) -> "DenseElement":
        return DenseElement.from_matrix(linalg.inverse(self.to_matrix()))

    def kron(self, other: "DenseElement") -> "DenseElement":
        return DenseElement.from_matrix(linalg.kron(self.to_matrix(), other.to_matrix()))

    def sparse_vector(self) -> dict[int, object]:
        flat = linalg.vectorize(self.to_matrix())
        return {int(i): flat[i] for i in np.nonzero(flat)[0]}

    def __lt__(self, other: "DenseElement") -> bool:
        return self.entries < other.entries


@dataclass(frozen=True)
class MatrixGroup:
    n: int
    elements: tuple
    name: str = ""
    generators: tuple | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "_members", frozenset(self.elements))

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator:
        return iter(self.elements)

    def __contains__(self, g) -> bool:
        return g in self._members

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def signed(self) -> bool:
        return all(isinstance(g, SignedPermutation) for g in self.elements)

    def identity(self):
        if self.signed:
            return SignedPermutation.identity(self.n)
        return DenseElement.from_matrix(linalg.identity(self.n))

    def matrices(self, exact: bool = True) -> list[np.ndarray]:
        return [g.to_matrix(exact) for g in self.elements]

    def is_closed(self) -> bool:
        """Full check: identity, inverses and all products are members."""
        if self.identity() not in self:
            return False
        if any(g.inverse() not in self for g in self.elements):
            return False
        return all(g @ h in self for g in self.elements for h in self.elements)


def _finish(n: int, elements: Iterable, name: str, generators=None) -> MatrixGroup:
    return MatrixGroup(n, tuple(sorted(set(elements))), name, None if generators is None else tuple(generators))


def _check_cap(order: int) -> None:
    if order > ORDER_CAP:
        raise GroupOrderError(f"group order {order} exceeds the cap {ORDER_CAP}")


def _signs(n: int) -> list[tuple[int, ...]]:
    return list(itertools.product((-1, 1), repeat=n))


def _with_signs(n: int, perms: Iterable[tuple[int, ...]]) -> list[SignedPermutation]:
    perms = list(perms)
    return [SignedPermutation(t, p) for t in _signs(n) for p in perms]


def _cycle_powers(n: int) -> list[tuple[int, ...]]:
    return [tuple((j + k) % n for j in range(n)) for k in range(n)]


def _perm_closure(n: int, gens: Sequence[tuple[int, ...]]) -> set[tuple[int, ...]]:
    ident = tuple(range(n))
    seen = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for p in frontier:
            for g in gens:
                q = tuple(g[i] for i in p)
                if q not in seen:
                    seen.add(q)
                    nxt.append(q)
                    _check_cap(len(seen) * 2**n)
        frontier = nxt
    return seen


def is_transitive(n: int, perms: Sequence[Sequence[int]]) -> bool:
    orbit = {0}
    frontier = [0]
    while frontier:
        i = frontier.pop()
        for p in perms:
            j = p[i]
            if j not in orbit:
                orbit.add(j)
                frontier.append(j)
    return len(orbit) == n


def closure(generators: Sequence, n: int | None = None, name: str = "closure") -> MatrixGroup:
    """Smallest group containing the generators (breadth-first)."""
    gens = []
    for g in generators:
        if isinstance(g, (SignedPermutation, DenseElement)):
            gens.append(g)
            continue
        m = linalg.as_exact(g)
        try:
            linalg.inverse(m)
        except ValueError:
            raise ValueError("singular generator") from None
        gens.append(DenseElement.from_matrix(m))
    if not gens:
        if n is None:
            raise ValueError("closure of no generators needs n")
        return _finish(n, [SignedPermutation.identity(n)], name, ())
    n = gens[0].n if n is None else n
    if any(g.n != n for g in gens):
        raise linalg.DimensionError("generators of different sizes")
    if not all(isinstance(g, SignedPermutation) for g in gens):
        gens = [g if isinstance(g, DenseElement) else DenseElement.from_matrix(g.to_matrix()) for g in gens]
        ident = DenseElement.from_matrix(linalg.identity(n))
    else:
        ident = SignedPermutation.identity(n)
    seen = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = g @ x
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
                    _check_cap(len(seen))
        frontier = nxt
    return _finish(n, seen, name, gens)


def make_group(kind: str, **params) -> MatrixGroup:
    """Build a named group.

    ``monomial`` / ``cyclic_monomial``: ``n``.
    ``transitive_with_signs``: ``n`` and ``permutations`` (generators of a
    transitive permutation group H); returns ``{D(t) h}``.
    ``tensor``: ``left`` and ``right`` groups; returns ``{g (x) h}``.
    ``closure``: ``generators`` (signed permutations or exact matrices).
    """
    if kind in ("monomial", "cyclic_monomial"):
        n = int(params["n"])
        if n < 1:
            raise ValueError("n must be at least 1")
        if kind == "monomial":
            _check_cap(2**n * math.factorial(n))
            perms = itertools.permutations(range(n))
        else:
            _check_cap(2**n * n)
            perms = _cycle_powers(n)
        return _finish(n, _with_signs(n, perms), f"{kind}({n})")
    if kind == "transitive_with_signs":
        n = int(params["n"])
        perms = [tuple(int(i) for i in p) for p in params["permutations"]]
        for p in perms:
            if sorted(p) != list(range(n)):
                raise ValueError(f"{p} is not a permutation of 0..{n - 1}")
        if not is_transitive(n, perms):
            raise ValueError("permutations do not generate a transitive group")
        H = _perm_closure(n, perms)
        _check_cap(2**n * len(H))
        return _finish(n, _with_signs(n, H), f"transitive_with_signs({n})")
    if kind == "tensor":
        G, H = params["left"], params["right"]
        _check_cap(len(G) * len(H))
        elems = {g.kron(h) for g in G for h in H}
        return _finish(G.n * H.n, elems, f"{G.name or 'G'} (x) {H.name or 'H'}")
    if kind == "closure":
        return closure(params["generators"], params.get("n"), params.get("name", "closure"))
    raise ValueError(f"unknown group kind {kind!r}")


def sign_group(n: int) -> MatrixGroup:
    """The diagonal sign flips {D(t)}; reducible for n >= 2."""
    return _finish(n, [SignedPermutation(t, tuple(range(n))) for t in _signs(n)], f"signs({n})")


def tensor_power(G: MatrixGroup, k: int) -> MatrixGroup:
    out = G
    for _ in range(k - 1):
        out = make_group("tensor", left=out, right=G)
    return out


def smallest_named_group(n: int) -> MatrixGroup:
    """Tensor powers of cyclic_monomial(2) when n is a power of two
    (order 2n^2), cyclic_monomial(n) otherwise."""
    k = n.bit_length() - 1
    if n >= 2 and n == 2**k:
        G = tensor_power(make_group("cyclic_monomial", n=2), k)
        return MatrixGroup(G.n, G.elements, f"cyclic_monomial(2)^(x){k}")
    return make_group("cyclic_monomial", n=n)


def is_irreducible(G: MatrixGroup) -> bool:
    """True iff the elements span all of M_n (exact rank n^2)."""
    return span_rank(G) == G.n * G.n


def span_rank(G: MatrixGroup) -> int:
    reducer = linalg.RowReducer()
    for g in G:
        reducer.add(g.sparse_vector())
        if reducer.rank == G.n * G.n:
            break
    return reducer.rank


# --- group-spec files --------------------------------------------------------


def group_from_spec(spec: dict) -> MatrixGroup:
    """``{"n": int, "generators": [{"perm": [...], "signs": [...]}]}``.

    ``perm`` is 0-based: column j goes to row ``perm[j]``.  ``signs``
    defaults to all +1.
    """
    if not isinstance(spec, dict) or "n" not in spec or "generators" not in spec:
        raise ValueError("group spec needs 'n' and 'generators'")
    n = int(spec["n"])
    gens = []
    for g in spec["generators"]:
        perm = g["perm"]
        if len(perm) != n:
            raise ValueError(f"generator {g} does not have degree {n}")
        gens.append(SignedPermutation.make(perm, g.get("signs")))
    return closure(gens, n, spec.get("name", "closure"))


def load_group_spec(path) -> MatrixGroup:
    return group_from_spec(json.loads(Path(path).read_text()))


def group_to_spec(G: MatrixGroup) -> dict:
    gens = G.generators if G.generators is not None else G.elements
    if not all(isinstance(g, SignedPermutation) for g in gens):
        raise ValueError("only signed-permutation groups have a spec form")
    return {"n": G.n, "generators": [g.to_dict() for g in gens]}


def as_fraction_matrix(g) -> np.ndarray:
    return linalg.as_exact([[Fraction(x) for x in row] for row in g.to_matrix()])
