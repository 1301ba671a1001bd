import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from proxflow import certificates as cert
from proxflow.demos import get_demo
from proxflow.dynamics import FlowConfig, integrate
from proxflow.numerics import DomainError
from proxflow.problems import lasso_problem, quadratic_problem
from proxflow.prox_ops import make_box_indicator, make_l1, make_nuclear, make_zero


def _scalar():
    p, _ = get_demo("scalar-lasso").build()
    return p


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(0.1, 2.0))
def test_moreau_decrease_brute_force(x, alpha):
    # -(2/alpha) min_y [<grad f, y - x> + |y - x|^2 / (2 alpha) + g(y) - g(x)]
    p = _scalar()
    grad = x - 1.0
    y = np.linspace(-6, 6, 240001)
    inner = grad * (y - x) + (y - x) ** 2 / (2 * alpha) + 0.5 * np.abs(y) - 0.5 * abs(x)
    ref = -(2.0 / alpha) * inner.min()
    assert cert.moreau_decrease(p, alpha, np.array([x])) == pytest.approx(ref, abs=1e-6)


def test_moreau_decrease_domain():
    p = quadratic_problem(np.eye(2), np.zeros(2), make_box_indicator([0, 0], [1, 1]))
    with pytest.raises(DomainError):
        cert.moreau_decrease(p, 1.0, np.array([2.0, 0.0]))


def test_min_norm_composite_subgradient_grid_oracle():
    p = lasso_problem([[1.0, 0.0], [0.0, 1.0]], [0.2, 3.0], 0.5)
    x = np.array([0.0, 0.0])
    s = cert.min_norm_composite_subgradient(p, x).s
    grad = p.f.gradient(x)
    grid = np.linspace(-0.5, 0.5, 10001)
    for i in range(2):
        assert abs(s[i]) == pytest.approx(np.min(np.abs(grad[i] + grid)), abs=1e-4)
    q = quadratic_problem(np.eye(2), np.zeros(2), make_nuclear(1.0, (1, 2)))
    with pytest.raises(cert.UnsupportedOperatorError):
        cert.min_norm_composite_subgradient(q, x)


def test_pl_estimate_permutation_invariant_and_exact_for_quadratic():
    p, x0 = get_demo("lasso").build(7)
    pts = cert.GaussianCloud([x0], scale=1.0, seed=3)(300)
    a = cert.estimate_pl_constant(p, 1.0, pts, 300)
    b = cert.estimate_pl_constant(p, 1.0, pts[::-1].copy(), 300)
    assert a.mu_hat == b.mu_hat and np.array_equal(a.min_witness, b.min_witness)
    q, y0 = get_demo("quadratic").build(0)
    assert cert.estimate_pl_constant(q, 1.0, cert.GaussianCloud([y0], seed=1), 200).mu_hat == pytest.approx(1.0)
    with pytest.raises(ValueError):
        cert.estimate_pl_constant(q, 1.0, np.zeros((3, 3)), 3)


def test_gaussian_cloud_deterministic_and_projected():
    g = make_box_indicator([0, 0], [1, 1])
    c = cert.GaussianCloud([[0.5, 0.5], [2.0, 2.0]], scale=2.0, seed=4, g=g)
    a, b = c(50), c(50)
    assert np.array_equal(a, b)
    assert np.array_equal(a[0], [0.5, 0.5]) and np.array_equal(a[1], [1.0, 1.0])
    assert all(g.domain_test(x) for x in a)


def test_residual_link_and_kl_hold():
    p, x0 = get_demo("quadratic-l1").build(7)
    cloud = cert.GaussianCloud([x0, p.data["xstar"]], scale=1.0, seed=2)
    assert cert.check_dg_residual_link(p, 0.7, cloud, 300).passed
    kl = cert.check_kl(p, cloud, 300, 0.0)
    assert kl.passed and kl.details["largest_passing_mu"] > 0.1


def test_monotone_report_fields():
    p, x0 = get_demo("box").build()
    tr = integrate(p, FlowConfig(step=1e-2, t_end=5.0), x0)
    r = cert.check_monotone_cost(tr)
    assert r.passed and r.details["n_infinite"] > 0
    d = r.to_dict()
    assert set(d) == {"name", "passed", "worst_violation", "slack", "witness", "details"}
    # an infinite cost after a finite one is a violation
    bad = tr.costs.copy()
    bad[-1] = np.inf
    tr.costs = bad
    r = cert.check_monotone_cost(tr)
    assert not r.passed and r.to_dict()["worst_violation"] == "inf"


def test_exp_rate_window():
    p, x0 = get_demo("quadratic").build(0)
    tr = integrate(p, FlowConfig(step=1e-2, t_end=2.0, method="rk4"), x0)
    with pytest.raises(ValueError):
        cert.estimate_exp_rate(tr, window=(1e-30, 1e-29))
    fit = cert.estimate_exp_rate(tr, window=(1e-3, 10.0))
    assert fit.rate == pytest.approx(2.0, rel=1e-6)


def test_alpha_grid_validation():
    p = _scalar()
    with pytest.raises(ValueError):
        cert.check_dg_alpha_monotone(p, np.zeros((1, 1)), [1.0, 0.5])


def test_jsonable():
    assert cert._jsonable({"a": np.float64(np.nan), "b": (np.int64(2), -np.inf),
                           "c": np.array([1.0]), "d": np.bool_(True)}) == \
        {"a": "nan", "b": [2, "-inf"], "c": [1.0], "d": True}
