import io
import math

import numpy as np
import pytest

from proxflow.demos import get_demo
from proxflow.dynamics import (DivergenceError, FlowConfig, Trajectory, integrate,
                               prox_grad_vector_field, stationarity_residual)
from proxflow.numerics import NumericalError
from proxflow.problems import CompositeProblem, SmoothTerm, lasso_problem, quadratic_problem
from proxflow.prox_ops import make_zero


@pytest.mark.parametrize("kw", [dict(alpha=0), dict(step=-1), dict(t_end=0),
                                dict(step=2, t_end=1), dict(method="rk45"),
                                dict(record_every=0), dict(residual_stop=-1)])
def test_flow_config_validation(kw):
    with pytest.raises(ValueError):
        FlowConfig(**kw)


def test_n_steps():
    assert FlowConfig(step=1e-3, t_end=20).n_steps == 20000


def _unit_quadratic(n=3):
    return quadratic_problem(np.eye(n), np.zeros(n), make_zero())


@pytest.mark.parametrize("method,h,order", [("euler", 1e-2, 1), ("rk4", 1e-1, 4)])
def test_convergence_order_on_linear_flow(method, h, order):
    # g = 0, f = |x|^2 / 2, alpha = 1: x' = -x, so x(t) = e^{-t} x0
    p, x0 = _unit_quadratic(), np.array([1.0, -2.0, 0.5])
    errs = []
    for step in (h, h / 2):
        tr = integrate(p, FlowConfig(step=step, t_end=1.0, method=method), x0)
        errs.append(np.linalg.norm(tr.final_state - math.exp(-1.0) * x0))
    assert errs[0] / errs[1] == pytest.approx(2 ** order, rel=0.1)


def test_recording_and_residual_stop():
    p, x0 = _unit_quadratic(), np.ones(3)
    tr = integrate(p, FlowConfig(step=0.01, t_end=1.0, record_every=7), x0)
    assert tr.times[0] == 0.0 and tr.times[-1] == pytest.approx(1.0)
    assert np.allclose(np.diff(tr.times[:-1]), 0.07)
    stop = integrate(p, FlowConfig(step=0.01, t_end=100.0, residual_stop=1e-3), x0)
    assert stop.residuals[-1] <= 1e-3 < stop.residuals[-2]
    assert stop.costs[0] == pytest.approx(1.5)
    assert np.allclose(stop.flow_norms_sq, stop.residuals ** 2)


def test_field_matches_stationarity_residual():
    p = lasso_problem([[1.0, 2.0]], [1.0], 0.5)
    x = np.array([0.3, -0.2])
    d, z = prox_grad_vector_field(p, 0.5, x)
    assert np.allclose(d, z - x)
    assert stationarity_residual(p, 0.5, x) == pytest.approx(np.linalg.norm(d))
    with pytest.raises(ValueError):
        prox_grad_vector_field(p, 0.0, x)


def test_divergence_and_bad_inputs():
    p, x0 = _unit_quadratic(), np.ones(3)
    with pytest.raises(DivergenceError):
        integrate(p, FlowConfig(step=0.1, t_end=1000.0), x0,
                  field_fn=lambda x: (10.0 * x, x))
    with pytest.raises(ValueError):
        integrate(p, FlowConfig(), np.ones(2))
    nan_f = CompositeProblem(SmoothTerm(lambda x: 0.0, lambda x: x * np.nan), make_zero(), 1, "nan")
    with pytest.raises(NumericalError):
        integrate(nan_f, FlowConfig(t_end=1.0), np.ones(1))


def test_trajectory_csv_and_validation():
    p, x0 = get_demo("scalar-lasso").build()
    tr = integrate(p, FlowConfig(step=0.25, t_end=0.5), x0)
    text = tr.to_csv(include_states=True, header_lines=["config_sha256: abc"])
    lines = text.splitlines()
    assert lines[0] == "# config_sha256: abc"
    assert lines[1] == "t,cost,residual,flow_norm_sq,x0"
    assert lines[2].startswith("0.0,0.125,0.5,0.25,0.0")
    buf = io.StringIO()
    tr.to_csv(buf)
    assert buf.getvalue().count("\n") == len(tr) + 1
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 0.0]), np.zeros((2, 1)), np.zeros(2), np.zeros(2),
                   np.zeros(2), tr.config)
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0]), np.zeros((2, 1)), np.zeros(2), np.zeros(2),
                   np.zeros(2), tr.config)


def test_integrate_is_deterministic():
    p, x0 = get_demo("quadratic-l1").build(7)
    cfg = FlowConfig(step=1e-2, t_end=2.0, method="rk4")
    a, b = integrate(p, cfg, x0), integrate(p, cfg, x0)
    assert a.to_csv(include_states=True) == b.to_csv(include_states=True)
