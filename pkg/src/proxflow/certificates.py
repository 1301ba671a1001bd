"""
Empirical certificates for the descent, proximal PL / KL and rate inequalities
of the proximal gradient flow.

Every check returns a :class:`CertificateReport`; ``passed`` is true exactly
when ``worst_violation <= slack_used``. Checks quantified over all ``x`` are
evaluated on finite seeded sample clouds and labelled ``empirical``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dynamics import integrate, prox_grad_vector_field
from .numerics import INF, DomainError, log_linear_fit
from .prox_ops import L1, MinNormSubgradResult, Zero

EPS = np.finfo(float).eps


class UnsupportedOperatorError(TypeError):
    """The regularizer has no usable subdifferential description."""


@dataclass
class CertificateReport:
    name: str
    passed: bool
    worst_violation: float
    slack_used: float
    witness: Optional[object] = None
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "worst_violation": _jsonable(self.worst_violation),
            "slack": _jsonable(self.slack_used),
            "witness": _jsonable(self.witness),
            "details": {k: _jsonable(v) for k, v in self.details.items()},
        }


def _report(name, worst, slack, witness=None, **details):
    worst = float(worst)
    return CertificateReport(name, bool(worst <= slack), worst, float(slack), witness, details)


def _jsonable(v):
    if v is None or isinstance(v, (bool, str)):
        return v
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, dict):
        return {k: _jsonable(w) for k, w in v.items()}
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (list, tuple)):
        return [_jsonable(w) for w in v]
    if isinstance(v, (int, np.integer)):
        return int(v)
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


@dataclass(frozen=True)
class PLEstimate:
    mu_hat: float
    alpha: float
    n_samples: int
    min_witness: np.ndarray


@dataclass(frozen=True)
class ExpRateFit:
    rate: float
    r2: float
    intercept: float
    n_points: int
    t_window: tuple


# ---------------------------------------------------------------------------
# Sample clouds
# ---------------------------------------------------------------------------

class GaussianCloud:
    """
    Seeded sampler of points scattered around a set of centers.

    Calling ``cloud(n)`` returns an ``(n, dim)`` array; the same ``n`` always
    gives the same points. Points are mapped into ``dom g`` by the prox of
    ``g`` when ``g`` is not finite-valued (a projection for indicators).
    """

    def __init__(self, centers, scale=0.5, seed=0, g=None):
        self.centers = np.atleast_2d(np.asarray(centers, dtype=float))
        self.scale = float(scale)
        self.seed = seed
        self.g = g

    def __call__(self, n):
        rng = np.random.default_rng(self.seed)
        k = len(self.centers)
        # every center gets used before any repeats
        idx = np.concatenate([np.arange(min(n, k)), rng.integers(0, k, max(0, n - k))])
        pts = self.centers[idx] + self.scale * rng.standard_normal((n, self.centers.shape[1]))
        pts[:min(n, k)] = self.centers[:min(n, k)]
        if self.g is not None and not self.g.finite_valued:
            pts = np.array([self.g.prox(1.0, q) for q in pts])
        return pts


def trajectory_cloud(traj, scale=0.5, seed=0, g=None, max_centers=50):
    """Cloud centered on (a thinned copy of) the trajectory's states, initial state first."""
    states = traj.states
    if len(states) > max_centers:
        states = states[np.unique(np.linspace(0, len(states) - 1, max_centers).astype(int))]
    return GaussianCloud(states, scale=scale, seed=seed, g=g)


def _points(sampler, n):
    pts = sampler(n) if callable(sampler) else np.asarray(sampler, dtype=float)
    return np.atleast_2d(pts)


# ---------------------------------------------------------------------------
# Core quantities
# ---------------------------------------------------------------------------

def moreau_decrease(p, alpha, x):
    """
    Decrease functional of the proximal PL inequality, evaluated in closed form.

    The inner maximization over ``y`` is attained at
    ``z = prox_{alpha g}(x - alpha grad f(x))``.
    """
    x = np.asarray(x, dtype=float)
    gx = p.g.value(x)
    if gx == INF:
        raise DomainError("moreau_decrease needs x in dom g")
    grad = p.f.gradient(x)
    z = p.g.prox(alpha, x - alpha * grad)
    d = x - z
    return (2.0 / alpha) * (float(grad @ d) - float(d @ d) / (2.0 * alpha) + gx - p.g.value(z))


def min_norm_composite_subgradient(p, x):
    """Minimum-norm element of ``grad f(x) + dg(x)`` for l1 or zero ``g``."""
    x = np.asarray(x, dtype=float)
    grad = p.f.gradient(x)
    if isinstance(p.g, Zero):
        s = grad
    elif isinstance(p.g, L1):
        lam = p.g.lam
        # x_i = 0: shrink grad_i toward zero by at most lam
        off = np.sign(grad) * np.maximum(np.abs(grad) - lam, 0.0)
        s = np.where(x != 0, grad + lam * np.sign(x), off)
    else:
        raise UnsupportedOperatorError(
            f"min-norm composite subgradient not available for g = {p.g.name}")
    return MinNormSubgradResult(s, float(np.linalg.norm(s)))


def _gap(p, x):
    if p.fstar is None:
        raise ValueError(f"{p.name}: optimal value unknown")
    return p.F(x) - p.fstar


# ---------------------------------------------------------------------------
# Trajectory checks
# ---------------------------------------------------------------------------

def check_monotone_cost(traj):
    """
    Costs never increase between recorded samples.

    Increments are measured relative to ``max(1, |cost|)`` and compared against
    ``1e-9 + 10 H^2`` with ``H`` the largest recorded interval. An infinite cost
    may precede finite ones but never follow them.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    c = np.asarray(traj.costs, dtype=float)
    H = float(np.max(np.diff(traj.times))) if len(traj) > 1 else traj.config.step
    slack = 1e-9 + 10.0 * H * H
    worst, witness = -INF, None
    n_inf = int(np.sum(np.isinf(c)))
    for k in range(len(c) - 1):
        a, b = c[k], c[k + 1]
        if a == INF:
            continue
        if b == INF:
            v = INF
        else:
            v = (b - a) / max(1.0, abs(a))
        if v > worst:
            worst, witness = v, float(traj.times[k + 1])
    if worst == -INF:
        worst = 0.0 if len(c) > 1 else -INF
    return _report("monotone", worst, slack, witness, n_samples=len(c),
                   n_infinite=n_inf, interval=H)


@dataclass(frozen=True)
class DiniCalibration:
    constant: float
    violation_h: float
    violation_half: float
    ratio: float
    step: float


def _dini_violations(traj, alpha):
    c = np.asarray(traj.costs, dtype=float)
    fin = np.isfinite(c[:-1]) & np.isfinite(c[1:])
    dt = np.diff(traj.times)
    shift = traj.fstar if traj.fstar is not None else 0.0
    with np.errstate(invalid="ignore"):
        q = np.diff(c) / dt
    bound = -traj.flow_norms_sq[:-1] / alpha
    roundoff = 8.0 * EPS * np.maximum(1.0, np.abs(c[:-1] + shift)) / dt
    raw = np.where(fin, q - bound, -INF)
    return raw, roundoff, dt


def calibrate_dini_constant(p, cfg, x0, safety=2.0):
    """
    Slack constant ``C`` for the discrete Dini check, from runs at ``h`` and ``h/2``.

    The largest excess of the forward quotient over ``-||F_prox||^2 / alpha``
    should shrink linearly with the step; ``ratio`` is that shrink factor.
    """
    half = dataclasses.replace(cfg, step=cfg.step / 2.0, record_every=cfg.record_every)
    v = []
    for c in (cfg, half):
        tr = integrate(p, c, x0)
        raw, _, dt = _dini_violations(tr, c.alpha)
        v.append((float(np.max(raw, initial=-INF)), float(np.max(dt))))
    (vh, H), (vh2, H2) = v
    ratio = vh2 / vh if vh > 0 else float("nan")
    C = safety * max(vh / H, vh2 / H2, 0.0)
    return DiniCalibration(C, vh, vh2, ratio, cfg.step)


def check_dini_bound(traj, p, alpha, slack_constant=None):
    """
    Forward quotients of the cost stay below ``-||F_prox(x)||^2 / alpha + C H``.

    Only consecutive finite-cost samples are compared. Floating-point
    cancellation in the cost difference is subtracted from each excess before
    comparing with ``C H``. Without ``slack_constant``, ``C`` is calibrated by
    re-integrating from the trajectory's first state at ``h`` and ``h/2``.
    """
    details = {}
    if slack_constant is None:
        cal = calibrate_dini_constant(p, traj.config, traj.states[0])
        slack_constant = cal.constant
        details.update(calibration_ratio=cal.ratio, violation_h=cal.violation_h,
                       violation_half=cal.violation_half)
    raw, roundoff, dt = _dini_violations(traj, alpha)
    excess = raw - roundoff
    H = float(np.max(dt)) if dt.size else traj.config.step
    if not np.any(np.isfinite(excess)):
        return _report("dini", -INF, slack_constant * H, None, n_pairs=0,
                       slack_constant=slack_constant, **details)
    k = int(np.argmax(excess))
    return _report("dini", excess[k], slack_constant * H, float(traj.times[k]),
                   n_pairs=int(np.sum(np.isfinite(excess))), slack_constant=slack_constant,
                   **details)


def estimate_exp_rate(traj, fstar=None, window=(1e-8, 1e-1)):
    """Log-linear fit of the optimality gap over samples with gap inside ``window``."""
    c = np.asarray(traj.costs, dtype=float)
    if traj.fstar is None:
        if fstar is None:
            raise ValueError("optimal value unknown: pass fstar")
        c = c - fstar
    lo, hi = window
    mask = np.isfinite(c) & (c >= lo) & (c <= hi)
    if np.sum(mask) < 3:
        raise ValueError(f"fewer than 3 samples with gap in [{lo:g}, {hi:g}]")
    t = traj.times[mask]
    rate, intercept, r2 = log_linear_fit(t, c[mask])
    return ExpRateFit(rate, r2, intercept, int(mask.sum()), (float(t[0]), float(t[-1])))


def check_rate(traj, mu_hat, alpha, fstar=None, window=(1e-8, 1e-1)):
    """Fitted decay rate is at least ``mu_hat * alpha``."""
    fit = estimate_exp_rate(traj, fstar, window)
    target = mu_hat * alpha
    return _report("rate", target - fit.rate, 0.0, None, fitted_rate=fit.rate, r2=fit.r2,
                   predicted_pl_rate=target, predicted_condition12_rate=2.0 * target,
                   t_window=list(fit.t_window), n_points=fit.n_points)


# ---------------------------------------------------------------------------
# Sample-cloud checks
# ---------------------------------------------------------------------------

def estimate_pl_constant(p, alpha, sampler, n=1000):
    """
    Smallest ratio of the decrease functional to twice the optimality gap.

    Samples with gap at most 1e-12 are excluded.
    """
    if p.fstar is None:
        raise ValueError(f"{p.name}: optimal value unknown")
    best, witness, used = INF, None, 0
    for x in _points(sampler, n):
        gap = _gap(p, x)
        if gap <= 1e-12:
            continue
        used += 1
        r = moreau_decrease(p, alpha, x) / (2.0 * gap)
        if r < best:
            best, witness = r, x
    if used == 0:
        raise ValueError("no admissible samples (all within 1e-12 of the optimum)")
    return PLEstimate(max(0.0, best), float(alpha), used, witness)


def check_condition12(p, alpha, mu, sampler, n=1000):
    """``1/2 ||F_prox(x)||^2 >= mu alpha^2 (F(x) - F*)`` on a sample cloud."""
    worst, witness, max_mu = -INF, None, INF
    for x in _points(sampler, n):
        d, _ = prox_grad_vector_field(p, alpha, x)
        lhs = 0.5 * float(d @ d)
        gap = _gap(p, x)
        v = mu * alpha ** 2 * gap - lhs
        if v > worst:
            worst, witness = v, x
        if gap > 1e-12:
            max_mu = min(max_mu, lhs / (alpha ** 2 * gap))
    return _report("condition12", worst, 1e-10, witness, mu=mu, alpha=alpha,
                   largest_passing_mu=max_mu, predicted_rate=2.0 * mu * alpha,
                   empirical=True)


def check_kl(p, sampler, n, mu_hat):
    """``min_{s in dF(x)} ||s||^2 >= 2 mu_hat (F(x) - F*)`` on a sample cloud."""
    worst, witness, max_mu = -INF, None, INF
    for x in _points(sampler, n):
        s = min_norm_composite_subgradient(p, x)
        gap = _gap(p, x)
        v = 2.0 * mu_hat * gap - s.norm ** 2
        if v > worst:
            worst, witness = v, x
        if gap > 1e-12:
            max_mu = min(max_mu, s.norm ** 2 / (2.0 * gap))
    return _report("kl", worst, 1e-10, witness, mu_hat=mu_hat, largest_passing_mu=max_mu,
                   empirical=True)


def check_lemma_cauchy_schwarz(p, alpha, sampler, n=1000):
    """``alpha ||s_min(x)|| >= ||x - z||`` on a sample cloud."""
    worst, witness = -INF, None
    for x in _points(sampler, n):
        s = min_norm_composite_subgradient(p, x)
        d, _ = prox_grad_vector_field(p, alpha, x)
        v = float(np.linalg.norm(d)) - alpha * s.norm
        if v > worst:
            worst, witness = v, x
    return _report("cauchy-schwarz", worst, 1e-9, witness, alpha=alpha, empirical=True)


def check_dg_alpha_monotone(p, x, alphas):
    """The decrease functional is nonincreasing in ``alpha`` at every point of ``x``."""
    alphas = np.asarray(alphas, dtype=float)
    if np.any(alphas <= 0) or np.any(np.diff(alphas) <= 0):
        raise ValueError("alphas must be positive and strictly increasing")
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    worst, witness = -INF, None
    for q in pts:
        vals = np.array([moreau_decrease(p, a, q) for a in alphas])
        for i in range(len(alphas) - 1):
            # every smaller alpha must dominate every larger one
            v = float(np.max(vals[i + 1:] - vals[i]))
            if v > worst:
                worst, witness = v, q
    return _report("alpha-monotone", worst, 1e-10, witness, alphas=alphas,
                   n_points=len(pts), empirical=True)


def check_dg_residual_link(p, alpha, sampler, n=1000):
    """Decrease functional dominates ``||x - z||^2 / alpha^2``."""
    worst, witness = -INF, None
    for x in _points(sampler, n):
        d, _ = prox_grad_vector_field(p, alpha, x)
        v = float(d @ d) / alpha ** 2 - moreau_decrease(p, alpha, x)
        if v > worst:
            worst, witness = v, x
    return _report("dg-residual-link", worst, 1e-10, witness, empirical=True)
