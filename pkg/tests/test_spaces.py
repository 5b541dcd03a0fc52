import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from approxdiag import linalg, spaces
from approxdiag.spaces import INF, HostSpace, dual_host, op_norm, vec_norm
from oracles import lp_norm, power_iteration_spectral

EXPONENTS = [1, 1.5, 2, 3, INF]


def test_euclidean_norm():
    assert vec_norm(HostSpace.weighted(2, (1, 1)), [3, 4]) == pytest.approx(5, abs=1e-15)


def test_lorentz_single_support_takes_largest_weight():
    assert vec_norm(HostSpace.lorentz((1, 0.5), 1), [0, 2]) == pytest.approx(2)


def test_lorentz_norm_is_symmetric():
    rng = np.random.default_rng(0)
    h = HostSpace.lorentz([k**-0.5 for k in range(1, 9)], 2)
    x = rng.standard_normal(8)
    assert vec_norm(h, x) == pytest.approx(vec_norm(h, rng.permutation(x)), rel=1e-15)


def test_lorentz_norm_against_sorted_formula():
    rng = np.random.default_rng(1)
    w = np.array([k**-0.5 for k in range(1, 7)])
    x = rng.standard_normal(6)
    expect = np.sum(w * np.sort(np.abs(x))[::-1] ** 3) ** (1 / 3)
    assert vec_norm(HostSpace.lorentz(w, 3), x) == pytest.approx(expect, rel=1e-13)


def test_weighted_norm_formula():
    rng = np.random.default_rng(2)
    w, x = rng.uniform(0.1, 2, 5), rng.standard_normal(5)
    for p in EXPONENTS:
        assert vec_norm(HostSpace.weighted(p, w), x) == pytest.approx(lp_norm(x, p, None if p == INF else w), rel=1e-13)


def test_mixed_norm_formula_and_reduction():
    rng = np.random.default_rng(3)
    x = rng.standard_normal(6)
    h = HostSpace.mixed(outer=2, inner=3, q=3, p=1.5)
    blocks = [lp_norm(x[j * 3 : j * 3 + 3], 1.5) for j in range(2)]
    assert vec_norm(h, x) == pytest.approx(lp_norm(blocks, 3), rel=1e-13)
    for p in EXPONENTS:
        same = HostSpace.mixed(outer=2, inner=3, q=p, p=p)
        assert vec_norm(same, x) == pytest.approx(lp_norm(x, p), rel=1e-13)


def test_lorentz_weights_validated():
    with pytest.raises(ValueError):
        HostSpace.lorentz((0.5, 1), 2)
    with pytest.raises(ValueError):
        HostSpace.lorentz((1, 0.5), INF)


def test_vec_norm_dimension_mismatch():
    with pytest.raises(linalg.DimensionError):
        vec_norm(HostSpace.lp(2, 3), [1, 2])


def host_kinds():
    w = [k**-0.5 for k in range(1, 7)]
    return [
        HostSpace.lp(1.5, 6),
        HostSpace.weighted(3, [0.5, 1, 2, 0.25, 1, 3]),
        HostSpace.weighted(INF, [1] * 6),
        HostSpace.lorentz(w, 2),
        HostSpace.lorentz(w, 1),
        HostSpace.mixed(outer=2, inner=3, q=INF, p=1),
        HostSpace.mixed(outer=3, inner=2, q=1.5, p=4),
    ]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-50, 50))
def test_homogeneity_and_triangle_on_every_kind(seed, c):
    rng = np.random.default_rng(seed)
    for h in host_kinds():
        x, y = rng.standard_normal(6), rng.standard_normal(6)
        assert vec_norm(h, c * x) == pytest.approx(abs(c) * vec_norm(h, x), rel=1e-12, abs=1e-300)
        assert vec_norm(h, x + y) <= vec_norm(h, x) + vec_norm(h, y) + 1e-12


def test_dual_of_hilbert_space_is_itself():
    d = dual_host(HostSpace.weighted(2, (1, 1, 1)))
    assert d.p == 2 and d.weights == (1, 1, 1)


def test_dual_of_l1_is_max_norm():
    d = dual_host(HostSpace.weighted(1, (0.5, 0.5)))
    assert d.p == INF and vec_norm(d, [3, -7]) == 7


def test_dual_host_rejects_lorentz():
    with pytest.raises(ValueError):
        dual_host(HostSpace.lorentz((1, 0.5), 2))


@pytest.mark.parametrize("p", EXPONENTS)
def test_holder_under_measure_pairing(p):
    rng = np.random.default_rng(4)
    h = HostSpace.weighted(p, rng.uniform(0.1, 1, 6))
    d = dual_host(h)
    for _ in range(20):
        x, y = rng.standard_normal(6), rng.standard_normal(6)
        assert abs(h.pairing(x, y)) <= vec_norm(h, x) * vec_norm(d, y) * (1 + 1e-12)


@pytest.mark.parametrize("p", EXPONENTS)
def test_identity_operator_has_norm_one(p):
    iv = op_norm(HostSpace.lp(p, 4), HostSpace.lp(p, 4), np.eye(4))
    assert iv.lower == pytest.approx(1, abs=1e-12) and iv.upper == pytest.approx(1, abs=1e-12)


def test_diagonal_spectral_norm():
    iv = op_norm(HostSpace.lp(2, 2), HostSpace.lp(2, 2), np.diag([3.0, 1.0]))
    assert iv.lower == pytest.approx(3, rel=1e-12) and iv.upper == pytest.approx(3, rel=1e-12)


def test_p2_interval_matches_power_iteration_oracle():
    rng = np.random.default_rng(5)
    for _ in range(10):
        T = linalg.to_float(linalg.random_rational(rng, 3, 3))
        iv = op_norm(HostSpace.lp(2, 3), HostSpace.lp(2, 3), T)
        ref = power_iteration_spectral(T)
        assert abs(iv.lower - ref) <= 1e-9 * ref and abs(iv.upper - ref) <= 1e-9 * ref


def test_p2_ascent_alone_matches_oracle():
    rng = np.random.default_rng(6)
    h = HostSpace.lp(2, 3)
    for _ in range(10):
        T = linalg.to_float(linalg.random_rational(rng, 3, 3))
        res = spaces.norm_ascent(h, h, T, spaces.default_seeds(3), rtol=1e-14)
        assert res.value == pytest.approx(power_iteration_spectral(T), rel=1e-9)


def test_l1_and_linf_are_column_and_row_sums():
    T = np.array([[1.0, -2.0], [3.0, 0.5]])
    assert op_norm(HostSpace.lp(1, 2), HostSpace.lp(1, 2), T).upper == 4
    assert op_norm(HostSpace.lp(INF, 2), HostSpace.lp(INF, 2), T).upper == 3.5


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(EXPONENTS))
def test_interval_ordered_and_tight_where_exact(seed, p):
    rng = np.random.default_rng(seed)
    T = rng.standard_normal((4, 4))
    h = HostSpace.lp(p, 4)
    iv = op_norm(h, h, T)
    assert iv.lower <= iv.upper
    if p in (1, 2, INF):
        assert iv.width <= 1e-9 * iv.upper


@pytest.mark.parametrize("p", [1.5, 3])
def test_interpolation_soundness(p):
    rng = np.random.default_rng(7)
    h = HostSpace.lp(p, 5)
    for _ in range(10):
        T = rng.standard_normal((5, 5))
        iv = op_norm(h, h, T)
        assert iv.lower <= iv.bounds["interpolation"] + 1e-12
        assert iv.lower <= iv.bounds["schur"] + 1e-12


def test_ascent_lower_bound_is_attained_by_a_vector():
    rng = np.random.default_rng(8)
    h = HostSpace.lp(3, 4)
    T = rng.standard_normal((4, 4))
    res = spaces.norm_ascent(h, h, T, spaces.default_seeds(4))
    assert vec_norm(h, T @ res.vector) == pytest.approx(res.value * vec_norm(h, res.vector), rel=1e-12)


@pytest.mark.parametrize("p", EXPONENTS)
def test_weight_rescaling_is_an_isometry(p):
    rng = np.random.default_rng(9)
    T = rng.standard_normal((4, 4))
    w = rng.uniform(0.2, 3, 4)
    flat = op_norm(HostSpace.lp(p, 4), HostSpace.lp(p, 4), T)
    s = np.ones(4) if p == INF else w ** (1 / p)
    conj = T * s[None, :] / s[:, None]
    weighted = op_norm(HostSpace.weighted(p, w), HostSpace.weighted(p, w), conj)
    assert weighted.lower == pytest.approx(flat.lower, rel=1e-12)
    assert weighted.upper == pytest.approx(flat.upper, rel=1e-12)


def test_lorentz_gets_lower_bound_only():
    h = HostSpace.lorentz([1, 0.7, 0.5], 2)
    iv = op_norm(h, h, np.eye(3))
    assert not iv.certified and iv.upper == INF
    assert iv.lower == pytest.approx(1, rel=1e-12)


def test_mixed_with_distinct_exponents_is_uncertified():
    h = HostSpace.mixed(outer=2, inner=2, q=1, p=2)
    iv = op_norm(h, h, np.eye(4))
    assert not iv.certified and iv.lower == pytest.approx(1, rel=1e-12)


def test_op_norm_dimension_mismatch():
    with pytest.raises(linalg.DimensionError):
        op_norm(HostSpace.lp(2, 3), HostSpace.lp(2, 3), np.eye(2))


def test_subsym_constant_of_l2_is_one():
    assert spaces.subsym_constant_M(HostSpace.lorentz([1.0] * 5, 2)) == pytest.approx(1, rel=1e-12)


def test_subsym_constant_single_coordinate():
    h = HostSpace.lorentz([k**-0.5 for k in range(1, 5)], 2)
    assert spaces.subsym_constant_M(h, 1) == pytest.approx(1, rel=1e-12)


def test_subsym_constant_regression_anchor():
    # exhaustive enumeration, w_n = n^(-1/2), p = 2, N = 6
    h = HostSpace.lorentz([k**-0.5 for k in range(1, 7)], 2)
    M = spaces.subsym_constant_M(h, 6)
    assert M >= 1
    assert M == pytest.approx(1.0, abs=1e-12)


def test_subsym_constant_enumeration_cap():
    h = HostSpace.lorentz([k**-0.5 for k in range(1, 12)], 2)
    with pytest.raises(ValueError):
        spaces.subsym_constant_M(h, 11)


def test_increasing_maps_count():
    # sum_k C(N, k)^2 = C(2N, N) - 1
    assert sum(1 for _ in spaces.increasing_maps(5)) == math.comb(10, 5) - 1


def test_norm_interval_rejects_inverted_bounds():
    with pytest.raises(ValueError):
        spaces.NormInterval(2.0, 1.0)
