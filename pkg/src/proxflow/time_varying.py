"""
Parameter-varying problems ``F(x, theta(t))``: the frozen-parameter flow and
cost-tracking envelopes.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .certificates import GaussianCloud, _report, estimate_pl_constant
from .dynamics import BLOWUP_NORM, DivergenceError, prox_grad_vector_field
from .numerics import NumericalError, as_mat, as_vec, largest_eigenvalue_psd
from .problems import ista, lasso_problem

SIMPSON_PANELS = 2048


@dataclass(frozen=True)
class ParameterPath:
    """``theta(t)`` with its derivative and the Lipschitz constant of ``F`` in ``theta``.

    ``speeds`` optionally evaluates ``||theta'(t)||`` on an array of times at
    once; otherwise ``theta_dot`` is called pointwise.
    """

    theta: Callable[[float], np.ndarray]
    theta_dot: Callable[[float], np.ndarray]
    ell_theta: float
    t_end: float
    speeds: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def speed(self, t):
        return float(np.linalg.norm(self.theta_dot(t)))

    def speed_many(self, ts):
        if self.speeds is not None:
            return np.asarray(self.speeds(np.asarray(ts, dtype=float)), dtype=float)
        return np.array([self.speed(t) for t in ts])


def constant_path(theta0, t_end, ell_theta=0.0):
    theta0 = np.atleast_1d(np.asarray(theta0, dtype=float))
    zero = np.zeros_like(theta0)
    return ParameterPath(lambda t: theta0.copy(), lambda t: zero.copy(), ell_theta, t_end,
                         speeds=np.zeros_like)


def sinusoidal_path(base, amplitude, t_end, omega=1.0, ell_theta=0.0):
    """``theta(t) = base + amplitude * sin(omega t)``."""
    base = np.atleast_1d(np.asarray(base, dtype=float))
    amp = np.broadcast_to(np.asarray(amplitude, dtype=float), base.shape).copy()
    amp_norm = float(np.linalg.norm(amp))
    return ParameterPath(lambda t: base + amp * math.sin(omega * t),
                         lambda t: amp * omega * math.cos(omega * t),
                         ell_theta, t_end,
                         speeds=lambda ts: amp_norm * abs(omega) * np.abs(np.cos(omega * ts)))


def smooth_stop_path(start, end, stop_time, t_end, ell_theta=0.0):
    """Smoothstep from ``start`` to ``end`` over ``[0, stop_time]``, constant afterwards."""
    start = np.atleast_1d(np.asarray(start, dtype=float))
    delta = np.atleast_1d(np.asarray(end, dtype=float)) - start
    delta_norm = float(np.linalg.norm(delta))

    def theta(t):
        s = min(max(t / stop_time, 0.0), 1.0)
        return start + delta * (3 * s * s - 2 * s ** 3)

    def theta_dot(t):
        if t >= stop_time or t < 0:
            return np.zeros_like(delta)
        s = t / stop_time
        return delta * (6 * s - 6 * s * s) / stop_time

    def speeds(ts):
        s = ts / stop_time
        inside = (ts >= 0) & (ts < stop_time)
        return np.where(inside, delta_norm * np.abs(6 * s - 6 * s * s) / stop_time, 0.0)

    return ParameterPath(theta, theta_dot, ell_theta, t_end, speeds=speeds)


@dataclass(frozen=True)
class TvProblem:
    """A problem family ``theta -> CompositeProblem`` along a parameter path.

    ``mu`` is a proximal PL constant valid for every frozen problem; when left
    as None it is estimated from snapshots during :func:`integrate_tv`.
    """

    family: Callable
    path: ParameterPath
    oracle_tol: float = 1e-10
    oracle_max_iter: int = 1_000_000
    mu: Optional[float] = None


def lasso_tv_problem(A, lam, path, radius):
    """
    LASSO with a moving target ``u = theta(t)``.

    ``ell_theta`` bounds ``||grad_u F|| = ||u - A x||`` over the run region
    ``||x|| <= radius``: ``max_t ||u(t)|| + ||A||_2 radius``, with the path
    maximum taken on a grid of 4097 times.
    """
    A = as_mat(A, "A")
    L = largest_eigenvalue_psd(A.T @ A)
    grid = np.linspace(0.0, path.t_end, 4097)
    u_max = max(float(np.linalg.norm(path.theta(t))) for t in grid)
    ell = u_max + math.sqrt(L) * radius
    path = dataclasses.replace(path, ell_theta=ell)

    def family(theta):
        return lasso_problem(A, theta, lam, lipschitz=L)

    return TvProblem(family, path)


@dataclass
class TrackingRecord:
    times: np.ndarray
    V: np.ndarray
    bound_gronwall: np.ndarray
    bound_paper: np.ndarray
    theta_dot_norm: np.ndarray
    states: np.ndarray
    optima: np.ndarray
    mu: float
    alpha: float
    step: float
    path: ParameterPath = field(repr=False)

    def __post_init__(self):
        n = len(self.times)
        if not (len(self.V) == len(self.bound_gronwall) == len(self.bound_paper) == n):
            raise ValueError("tracking record columns must have equal lengths")

    def __len__(self):
        return len(self.times)

    def to_csv(self, fh=None, header_lines=()):
        out = io.StringIO() if fh is None else fh
        for line in header_lines:
            out.write(f"# {line}\n")
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["t", "V", "bound_gronwall", "bound_paper", "theta_dot_norm"])
        for row in zip(self.times, self.V, self.bound_gronwall, self.bound_paper,
                       self.theta_dot_norm):
            w.writerow([repr(float(v)) for v in row])
        if fh is None:
            return out.getvalue()


def tracking_bound(V0, mu, alpha, path, t, form="gronwall"):
    """
    Envelope on the tracking gap at time ``t``.

    ``gronwall``: ``e^{-c t} V0 + 2 l int_0^t e^{-c (t - s)} ||theta'(s)|| ds``
    with ``c = mu alpha``, the direct integration of the differential
    inequality. ``scaled``: the same with the integral term divided by ``c``.
    The integral uses composite Simpson on 2048 panels.
    """
    if not (mu > 0 and alpha > 0):
        raise ValueError("mu and alpha must be positive")
    if form not in ("gronwall", "scaled"):
        raise ValueError(f"unknown form {form!r}")
    c = mu * alpha
    return _envelope(V0, c, path.ell_theta, _drift_integral(path, c, t), t, form)


def _envelope(V0, c, ell, integral, t, form):
    drift = 2.0 * ell * integral
    if form == "scaled":
        drift /= c
    return math.exp(-c * t) * V0 + drift


def _drift_integral(path, c, t):
    if t <= 0:
        return 0.0
    tau = np.linspace(0.0, t, SIMPSON_PANELS + 1)
    vals = path.speed_many(tau) * np.exp(-c * (t - tau))
    w = np.ones(SIMPSON_PANELS + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float(t / SIMPSON_PANELS / 3.0 * (w @ vals))


def _frozen_optimum(tp, theta, t, warm):
    p = tp.family(theta)
    try:
        res = ista(p, x0=warm, tol=tp.oracle_tol, max_iter=tp.oracle_max_iter)
    except NumericalError as exc:
        raise NumericalError(f"inner optimum did not converge at t={t:g}: {exc}",
                             residual=exc.residual, state=exc.state) from exc
    return p, res


def estimate_tv_mu(tp, alpha, snapshots, scale=0.5, n=200, seed=0):
    """Smallest empirical PL constant over frozen problems at ``(t, x, x*)`` snapshots."""
    mus = []
    for t, x, xs in snapshots:
        p, res = _frozen_optimum(tp, tp.path.theta(t), t, xs)
        p = p.with_fstar(res.value, "ista-oracle")
        cloud = GaussianCloud(np.vstack([x, res.x]), scale=scale, seed=seed, g=p.g)
        mus.append(estimate_pl_constant(p, alpha, cloud, n).mu_hat)
    return min(mus)


def integrate_tv(tp, cfg, x0, n_snapshots=10):
    """
    Integrate ``x' = F_prox(x; theta(t))`` and record the tracking gap.

    At each recorded time the frozen problem's optimal value comes from ISTA
    warm-started at the previous optimum. When ``tp.mu`` is None the PL
    constant used for the envelopes is the smallest empirical estimate over
    ``n_snapshots`` recorded times.
    """
    x = as_vec(x0, "x0").copy()
    h, alpha = cfg.step, cfg.alpha
    path = tp.path

    def field_at(t, y):
        return prox_grad_vector_field(tp.family(path.theta(t)), alpha, y)[0]

    times, states, gaps, optima, speeds = [], [], [], [], []
    warm = None
    n_steps = cfg.n_steps
    for k in range(n_steps + 1):
        t = k * h
        if k % cfg.record_every == 0 or k == n_steps:
            theta = path.theta(t)
            p, res = _frozen_optimum(tp, theta, t, warm)
            warm = res.x
            times.append(t)
            states.append(x.copy())
            optima.append(res.x)
            gaps.append(p.F(x) - res.value)
            speeds.append(path.speed(t))
        if k == n_steps:
            break
        k1 = field_at(t, x)
        if cfg.method == "euler":
            x = x + h * k1
        else:
            k2 = field_at(t + h / 2, x + h / 2 * k1)
            k3 = field_at(t + h / 2, x + h / 2 * k2)
            k4 = field_at(t + h, x + h * k3)
            x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        nx = float(np.linalg.norm(x))
        if not nx <= BLOWUP_NORM:
            raise DivergenceError(f"time-varying flow diverged at t={t + h:g}",
                                  residual=nx, state=x)

    times = np.array(times)
    states = np.array(states)
    optima = np.array(optima)
    V = np.array(gaps)
    mu = tp.mu
    if mu is None:
        idx = np.unique(np.linspace(0, len(times) - 1, n_snapshots).astype(int))
        mu = estimate_tv_mu(tp, alpha, [(times[i], states[i], optima[i]) for i in idx])
    return _assemble(times, V, states, optima, np.array(speeds), mu, alpha, h, path)


def _assemble(times, V, states, optima, speeds, mu, alpha, step, path):
    if not (mu > 0 and alpha > 0):
        raise ValueError("mu and alpha must be positive")
    V0 = float(V[0])
    c = mu * alpha
    ints = [_drift_integral(path, c, t) for t in times]
    bg = np.array([_envelope(V0, c, path.ell_theta, i, t, "gronwall")
                   for i, t in zip(ints, times)])
    bp = np.array([_envelope(V0, c, path.ell_theta, i, t, "scaled")
                   for i, t in zip(ints, times)])
    return TrackingRecord(times, V, bg, bp, speeds, states, optima, mu, alpha, step, path)


def with_mu(record, mu):
    """Recompute both envelopes of ``record`` for another PL constant."""
    return _assemble(record.times, record.V, record.states, record.optima,
                     record.theta_dot_norm, mu, record.alpha, record.step, record.path)


def check_tracking(record, mu=None, alpha=None, slack_constant=1.0):
    """
    Tracking gap stays below the Gronwall envelope plus ``C h``.

    The scaled envelope is compared and reported in ``details`` but does
    not decide the outcome.
    """
    if len(record) == 0:
        raise ValueError("empty tracking record")
    mu = record.mu if mu is None else mu
    alpha = record.alpha if alpha is None else alpha
    if mu != record.mu or alpha != record.alpha:
        record = with_mu(dataclasses.replace(record, alpha=alpha), mu)
    excess = record.V - record.bound_gronwall
    k = int(np.argmax(excess))
    scaled_excess = record.V - record.bound_paper
    return _report("tracking", excess[k], slack_constant * record.step, float(record.times[k]),
                   mu=mu, alpha=alpha, ell_theta=record.path.ell_theta,
                   scaled_form_worst=float(np.max(scaled_excess)),
                   scaled_form_holds=bool(np.all(scaled_excess <= slack_constant * record.step)),
                   min_V=float(np.min(record.V)))


def check_tracking_dini(record, mu=None, slack_constant=1.0):
    """Discrete form of ``D+V <= -mu alpha V + 2 l ||theta'||`` between recorded samples."""
    mu = record.mu if mu is None else mu
    dt = np.diff(record.times)
    q = np.diff(record.V) / dt
    rhs = (-mu * record.alpha * record.V[:-1]
           + 2.0 * record.path.ell_theta * record.theta_dot_norm[:-1])
    roundoff = 8.0 * np.finfo(float).eps * np.maximum(1.0, np.abs(record.V[:-1])) / dt
    excess = q - rhs - roundoff
    k = int(np.argmax(excess))
    H = float(np.max(dt))
    return _report("tracking-dini", excess[k], slack_constant * H, float(record.times[k]),
                   mu=mu)
