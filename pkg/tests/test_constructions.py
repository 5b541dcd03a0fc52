from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from approxdiag import constructions as cons
from approxdiag import linalg, tensor
from approxdiag.groups import make_group, sign_group, smallest_named_group
from approxdiag.lifts import Lift, ReducibleGroupError, make_system
from approxdiag.spaces import HostSpace
from approxdiag.tensor import TensorElement, canonical_diagonal, is_diagonal, pi

E = linalg.matrix_unit


def harmonic(dim):
    F = linalg.zeros(dim, dim)
    for i in range(dim):
        F[i, i] = Fraction(1, i + 1)
    return F


@pytest.mark.parametrize("kind,n", [("monomial", 3), ("cyclic_monomial", 4)])
def test_full_truncation_gives_exact_diagonal(kind, n):
    L = Lift(make_system("lp_truncation", p=2, dim=n, n=n))
    d = cons.approx_diagonal(L, make_group(kind, n=n))
    assert d.exact and is_diagonal(d, "both")


def test_pi_of_lifted_average_is_the_projection():
    L = Lift(make_system("lp_truncation", p=2, dim=5, n=3))
    d = cons.approx_diagonal(L, make_group("monomial", n=3))
    assert len(d) == 48 and all(c == Fraction(1, 48) for c, _, _ in d.terms)
    assert linalg.equal(pi(d), L.projection())


@pytest.mark.parametrize("p", [1, 1.5, 2, 3, float("inf")])
def test_lifted_average_bounded_by_one_on_lp(p):
    L = Lift(make_system("lp_truncation", p=p, dim=6, n=3))
    d = cons.approx_diagonal(L, make_group("cyclic_monomial", n=3))
    assert tensor.projective_upper(d, cons.host_norm(L.system.host)) <= 1 + 1e-9


def test_approx_diagonal_validation():
    L = Lift(make_system("lp_truncation", p=2, dim=4, n=2))
    with pytest.raises(linalg.DimensionError):
        cons.approx_diagonal(L, make_group("monomial", n=3))
    with pytest.raises(ReducibleGroupError):
        cons.approx_diagonal(L, sign_group(2))


def test_defects_of_the_projection_vanish():
    L = Lift(make_system("lp_truncation", p=2, dim=8, n=3))
    d = cons.approx_diagonal(L, make_group("cyclic_monomial", n=3))
    rep = cons.defects(d, L.projection(), L.system.host)
    assert rep.pi_defect == 0 and rep.commutator_bound == 0 and rep.commutator_evaluated == 0


@pytest.mark.parametrize("n", [2, 4, 8])
def test_harmonic_defects(n):
    dim = 32
    L = Lift(make_system("lp_truncation", p=2, dim=dim, n=n))
    d = cons.approx_diagonal(L, smallest_named_group(n))
    rep = cons.defects(d, harmonic(dim), HostSpace.lp(2, dim))
    assert abs(rep.pi_defect - 1 / (n + 1)) <= 1e-12
    assert rep.commutator_bound <= 2 / (n + 1) * rep.diag_norm_bound + 1e-9
    assert rep.commutator_bound <= rep.analytic_bound + 1e-9
    # F commutes with P here, so the commutator itself is the zero element
    assert rep.identity_residual == 0 and rep.commutator_evaluated == 0


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2, 3]))
def test_defect_identity_for_random_operators(seed, p):
    rng = np.random.default_rng(seed)
    dim, n = 6, int(rng.integers(1, 5))
    host = HostSpace.lp(p, dim)
    L = Lift(make_system("lp_truncation", p=p, dim=dim, n=n))
    d = cons.approx_diagonal(L, make_group("cyclic_monomial", n=n))
    F = rng.standard_normal((dim, dim))
    rep = cons.defects(d, F, host)
    assert rep.identity_residual <= 1e-12
    # the factored bound is the reduced-form bound, and it dominates the evaluated one
    assert rep.commutator_bound == pytest.approx(2 * rep.reduction_norm * rep.diag_norm_bound, rel=1e-12)
    assert rep.commutator_evaluated <= rep.commutator_bound + 1e-9
    assert min(rep.pi_defect, rep.commutator_bound, rep.diag_norm_bound) >= 0


def test_defects_dimension_mismatch():
    L = Lift(make_system("lp_truncation", p=2, dim=4, n=2))
    d = cons.approx_diagonal(L, make_group("cyclic_monomial", n=2))
    with pytest.raises(linalg.DimensionError):
        cons.defects(d, np.eye(3), HostSpace.lp(2, 4))


# --- ideal construction -------------------------------------------------------------


def test_ideal_with_identity_is_unchanged():
    d = canonical_diagonal(3)
    assert tensor.coordinates_equal(cons.ideal_diagonal(d, linalg.identity(3)), d)


def test_ideal_with_zero_is_zero():
    out = cons.ideal_diagonal(canonical_diagonal(3), linalg.zeros(3, 3))
    assert not tensor.sparse_coordinates(out)


def test_ideal_of_m2_plus_m1():
    B = cons.BlockAlgebra(2, 1)
    out = cons.ideal_diagonal(B.diagonal(), B.ideal_unit(0))
    assert tensor.coordinates_equal(out, cons.embed(canonical_diagonal(2), 3, 0))
    assert tensor.is_diagonal_relative(out, B.ideal_basis(0), B.ideal_unit(0), "both")


def test_ideal_requires_idempotent():
    with pytest.raises(ValueError):
        cons.ideal_diagonal(canonical_diagonal(2), 2 * linalg.identity(2))


def test_block_diagonal_is_relative_diagonal_of_the_whole_algebra():
    B = cons.BlockAlgebra(2, 3)
    assert tensor.is_diagonal_relative(B.diagonal(), B.basis(), linalg.identity(5), "both")
    assert not is_diagonal(B.diagonal(), "std")


# --- direct sums and cut-downs ------------------------------------------------------


def test_standard_c_empty():
    c = cons.standard_c(2, 0)
    assert len(c) == 0 and linalg.equal(pi(c), linalg.zeros(2, 2))


def test_standard_c_pi():
    assert linalg.equal(pi(cons.standard_c(2, 2)), E(4, 2, 2) + E(4, 3, 3))


def test_standard_c_corners():
    m, k = 2, 3
    P1, P2 = cons.block_projection(5, 0, m), cons.block_projection(5, m, 5)
    for _, a, b in cons.standard_c(m, k).terms:
        assert linalg.equal(linalg.matmul_chain(P2, a, P1), a)
        assert linalg.equal(linalg.matmul_chain(P1, b, P2), b)


def test_direct_sum_without_complement():
    d11 = canonical_diagonal(2)
    assert tensor.coordinates_equal(cons.direct_sum_diagonal(2, 0, d11, cons.standard_c(2, 0)), d11)


def test_direct_sum_two_two_coordinates():
    d = cons.direct_sum_diagonal(2, 2, cons.embed(canonical_diagonal(2), 4, 0), cons.standard_c(2, 2))
    half = Fraction(1, 2)
    expect = TensorElement(4, tuple((half, E(4, r, i), E(4, i, r)) for r in range(4) for i in range(2)))
    assert tensor.coordinates_equal(d, expect)
    assert is_diagonal(d, "std") and linalg.equal(pi(d), linalg.identity(4))


def test_cutdown_without_complement():
    d = canonical_diagonal(3)
    assert tensor.coordinates_equal(cons.cutdown_diagonal(d, 3, 0, cons.standard_c(3, 0)), d)


def test_cutdown_two_two_coordinates():
    out = cons.cutdown_diagonal(canonical_diagonal(4), 2, 2, cons.standard_c(2, 2))
    q = Fraction(1, 4)
    terms = [(q, E(2, r, s), E(2, s, r)) for r in range(2) for s in range(2)]
    terms += [(2 * q, E(2, r, 0), E(2, 0, r)) for r in range(2)]
    assert tensor.coordinates_equal(out, TensorElement(2, tuple(terms)))
    assert is_diagonal(out, "std") and linalg.equal(pi(out), linalg.identity(2))


def test_cutdown_one_one():
    out = cons.cutdown_diagonal(canonical_diagonal(2), 1, 1, cons.standard_c(1, 1))
    assert out.n == 1 and linalg.equal(pi(out), linalg.identity(1)) and is_diagonal(out, "std")


@pytest.mark.parametrize("m,k", [(m, k) for m in range(1, 4) for k in range(1, 4)])
def test_direct_sum_and_cutdown_are_diagonals(m, k):
    n = m + k
    d11, c = cons.embed(canonical_diagonal(m), n, 0), cons.standard_c(m, k)
    assert is_diagonal(cons.direct_sum_diagonal(m, k, d11, c), "std")
    assert is_diagonal(cons.cutdown_diagonal(canonical_diagonal(n), m, k, c), "std")


def test_bullet_product_breaks_the_direct_sum_model():
    d11, c = cons.embed(canonical_diagonal(1), 2, 0), cons.standard_c(1, 1)
    hashed = cons.direct_sum_diagonal(1, 1, d11, c, product="hash")
    bulleted = cons.direct_sum_diagonal(1, 1, d11, c, product="bullet")
    assert linalg.equal(pi(hashed), linalg.identity(2))
    assert not linalg.equal(pi(bulleted), linalg.identity(2))


def test_support_and_pi_violations():
    c = cons.standard_c(2, 1)
    with pytest.raises(ValueError):
        cons.direct_sum_diagonal(2, 1, canonical_diagonal(3), c)
    bad_c = TensorElement(3, ((1, E(3, 2, 0), E(3, 0, 2)), (1, E(3, 2, 1), E(3, 1, 2))))
    with pytest.raises(ValueError):
        cons.direct_sum_diagonal(2, 1, cons.embed(canonical_diagonal(2), 3, 0), bad_c)
    with pytest.raises(ValueError):
        cons.cutdown_diagonal(canonical_diagonal(3), 2, 1, bad_c)


@pytest.mark.parametrize("t", [Fraction(3), Fraction(-2, 5)])
def test_rescaled_c_keeps_verdicts(t):
    for m, k in [(1, 1), (2, 3)]:
        n = m + k
        d11, c = cons.embed(canonical_diagonal(m), n, 0), cons.standard_c(m, k)
        sc = cons.scale_c(c, t)
        assert linalg.equal(pi(sc), pi(c))
        assert is_diagonal(cons.direct_sum_diagonal(m, k, d11, sc), "std")
        assert is_diagonal(cons.cutdown_diagonal(canonical_diagonal(n), m, k, sc), "std")


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 3))
def test_corner_identities(seed, m, k):
    rng = np.random.default_rng(seed)
    n = m + k
    a21, a12 = linalg.zeros(n, n), linalg.zeros(n, n)
    a21[m:, :m] = linalg.random_rational(rng, k, m)
    a12[:m, m:] = linalg.random_rational(rng, m, k)
    out = cons.corner_identities(m, k, cons.embed(canonical_diagonal(m), n, 0), cons.standard_c(m, k), a21, a12)
    assert out == {"a21": True, "a12": True}
