import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from _oracles import soft_threshold_ref
from proxflow.prox_ops import (check_prox_optimality, make_blockwise, make_box_indicator,
                               make_l1, make_nuclear, make_zero, soft_threshold)

finite = st.floats(-50, 50, allow_nan=False, allow_subnormal=False)
vecs = arrays(np.float64, st.integers(1, 8), elements=finite)


@given(st.floats(1e-3, 10), vecs)
def test_soft_threshold_matches_reference(k, v):
    assert np.array_equal(soft_threshold(k, v), soft_threshold_ref(k, v))


def test_soft_threshold_rejects_nonpositive():
    with pytest.raises(ValueError):
        soft_threshold(0.0, [1.0])


@pytest.mark.parametrize("alpha,lam", [(0.3, 1.0), (1.0, 0.5), (2.0, 0.1)])
def test_l1_prox_grid_brute_force(alpha, lam):
    g = make_l1(lam)
    grid = np.linspace(-4, 4, 80001)
    for v in np.linspace(-3, 3, 13):
        obj = alpha * lam * np.abs(grid) + 0.5 * (grid - v) ** 2
        z = g.prox(alpha, [v])[0]
        assert abs(z - grid[np.argmin(obj)]) <= 2e-4


def _ops():
    return [make_zero(), make_l1(0.7), make_nuclear(0.4, (3, 2)),
            make_box_indicator(-np.ones(6), np.ones(6)),
            make_blockwise([make_l1(0.2), make_nuclear(0.3, (2, 2))], [2, 4])]


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, 6, elements=finite), arrays(np.float64, 6, elements=finite),
       st.floats(0.05, 5))
def test_prox_nonexpansive(a, b, alpha):
    for g in _ops():
        d = np.linalg.norm(g.prox(alpha, a) - g.prox(alpha, b))
        assert d <= np.linalg.norm(a - b) * (1 + 1e-12) + 1e-12, g.name


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, 6, elements=finite), st.floats(0.05, 5))
def test_prox_lands_in_domain(v, alpha):
    for g in _ops():
        z = g.prox(alpha, v)
        assert g.value(z) < np.inf


def test_nuclear_prox_is_svt_and_methods_agree():
    rng = np.random.default_rng(0)
    gl = make_nuclear(0.5, (4, 3))
    gj = make_nuclear(0.5, (4, 3), svd_method="jacobi")
    for _ in range(50):
        v = rng.standard_normal(12) * 2
        u, s, wt = np.linalg.svd(v.reshape(4, 3), full_matrices=False)
        ref = (u * np.maximum(s - 0.8 * 0.5, 0)) @ wt
        assert np.allclose(gl.prox(0.8, v), ref.ravel(), atol=1e-12)
        assert np.allclose(gj.prox(0.8, v), ref.ravel(), atol=1e-12)
        assert gl.value(v) == pytest.approx(0.5 * s.sum())


@pytest.mark.parametrize("g", _ops(), ids=lambda g: g.name)
def test_prox_optimality_holds(g):
    rng = np.random.default_rng(1)
    for k in range(5):
        res = check_prox_optimality(g, 0.7, 3 * rng.standard_normal(6), tol=1e-8, seed=k)
        assert res.passed, (res.worst_violation, res.exact_membership)


def test_prox_optimality_detects_wrong_prox():
    g = make_l1(1.0)

    class Broken(type(g)):
        def prox(self, alpha, v):
            return np.asarray(v, dtype=float) * 0.5

    res = check_prox_optimality(Broken(lam=1.0), 1.0, np.array([3.0, -0.2]), tol=1e-8)
    assert not res.passed and res.witness is not None


def test_l1_min_norm_subgradient_grid_oracle():
    g = make_l1(0.5)
    x = np.array([1.5, 0.0, -2.0])
    s = g.min_norm_subgradient(x)
    # oracle: minimize |s| over the subdifferential [lam sign(x_i)] or [-lam, lam]
    for i, xi in enumerate(x):
        cands = np.linspace(-0.5, 0.5, 1001) if xi == 0 else np.array([0.5 * np.sign(xi)])
        assert abs(s[i]) == pytest.approx(np.min(np.abs(cands)))
    assert g.is_subgradient(x, s, 1e-12)
    assert not g.is_subgradient(x, s + np.array([0.1, 0, 0]), 1e-12)


def test_nuclear_min_norm_subgradient_is_subgradient():
    g = make_nuclear(0.3, (3, 3))
    u = np.linalg.qr(np.random.default_rng(2).standard_normal((3, 3)))[0]
    x = (u[:, :2] * [2.0, 1.0]) @ u[:, :2].T
    s = g.min_norm_subgradient(x.ravel())
    assert np.linalg.norm(s) == pytest.approx(0.3 * np.sqrt(2))
    rng = np.random.default_rng(3)
    for _ in range(200):
        y = x.ravel() + rng.standard_normal(9)
        assert g.value(y) >= g.value(x.ravel()) + s @ (y - x.ravel()) - 1e-12


def test_box_rules():
    g = make_box_indicator([0, 0], [1, 1])
    assert g.value([0.5, 0.5]) == 0.0 and g.value([2.0, 0.5]) == np.inf
    assert np.array_equal(g.prox(3.0, [2.0, -1.0]), [1.0, 0.0])
    assert np.array_equal(g.min_norm_subgradient([0.5, 0.5]), [0.0, 0.0])
    assert g.min_norm_subgradient([1.0, 0.5]) is None
    assert g.is_subgradient([1.0, 0.0], [2.0, -1.0], 0.0)
    assert not g.is_subgradient([1.0, 0.0], [-2.0, -1.0], 0.0)
    pts = g.sample_domain(np.random.default_rng(0), [0.5, 0.5], 50, scale=3.0)
    assert all(g.domain_test(p) for p in pts)
    with pytest.raises(ValueError):
        make_box_indicator([1.0], [0.0])


def test_blockwise_splits():
    g = make_blockwise([make_l1(1.0), make_zero()], [2, 1])
    assert g.value([1.0, -2.0, 5.0]) == 3.0
    assert np.array_equal(g.prox(1.0, [2.0, 0.5, 5.0]), [1.0, 0.0, 5.0])
    assert g.is_subgradient([1.0, 0.0, 3.0], [1.0, 0.2, 0.0], 1e-12)
    with pytest.raises(ValueError):
        g.value([1.0, 2.0])
    with pytest.raises(ValueError):
        make_blockwise([make_nuclear(1.0, (2, 2))], [3])


def test_constructor_validation():
    with pytest.raises(ValueError):
        make_l1(0.0)
    with pytest.raises(ValueError):
        make_nuclear(-1.0, (2, 2))
    with pytest.raises(ValueError):
        make_l1(1.0).prox(0.0, [1.0])
