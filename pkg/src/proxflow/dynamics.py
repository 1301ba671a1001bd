"""
Proximal gradient flow ``x' = -x + prox_{alpha g}(x - alpha grad f(x))`` and
its fixed-step integration.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .numerics import INF, NumericalError, as_vec

BLOWUP_NORM = 1e12


class DivergenceError(NumericalError):
    """The state norm exceeded the blow-up threshold."""


@dataclass(frozen=True)
class FlowConfig:
    alpha: float = 1.0
    step: float = 1e-3
    method: str = "euler"
    t_end: float = 20.0
    record_every: int = 1
    residual_stop: Optional[float] = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not self.step > 0 or not self.t_end > 0:
            raise ValueError("step and t_end must be positive")
        if self.step > self.t_end:
            raise ValueError("step must not exceed t_end")
        if self.method not in ("euler", "rk4"):
            raise ValueError(f"method must be 'euler' or 'rk4', got {self.method!r}")
        if int(self.record_every) < 1:
            raise ValueError("record_every must be >= 1")
        if self.residual_stop is not None and self.residual_stop < 0:
            raise ValueError("residual_stop must be nonnegative")

    @property
    def n_steps(self):
        return int(round(self.t_end / self.step))


@dataclass
class Trajectory:
    """Recorded samples of one integration run.

    ``costs`` hold ``F(x) - fstar`` when the problem's optimal value is known
    (``fstar`` is then set) and ``F(x)`` otherwise; ``+inf`` marks samples
    outside ``dom g``.
    """

    times: np.ndarray
    states: np.ndarray
    costs: np.ndarray
    residuals: np.ndarray
    flow_norms_sq: np.ndarray
    config: FlowConfig
    fstar: Optional[float] = None
    problem_name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.times)
        if not (len(self.states) == len(self.costs) == len(self.residuals)
                == len(self.flow_norms_sq) == n):
            raise ValueError("trajectory columns must have equal lengths")
        if n > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    @property
    def final_state(self):
        return self.states[-1]

    def dini_quotients(self):
        """Forward difference quotients of the cost between recorded samples."""
        with np.errstate(invalid="ignore"):
            return np.diff(self.costs) / np.diff(self.times)

    def to_csv(self, fh=None, include_states=False, header_lines=()):
        """Write ``t, cost, residual, flow_norm_sq[, x_0, ...]``; returns the text if ``fh`` is None."""
        out = io.StringIO() if fh is None else fh
        for line in header_lines:
            out.write(f"# {line}\n")
        w = csv.writer(out, lineterminator="\n")
        cols = ["t", "cost", "residual", "flow_norm_sq"]
        if include_states:
            cols += [f"x{i}" for i in range(self.states.shape[1])]
        w.writerow(cols)
        for k in range(len(self)):
            row = [self.times[k], self.costs[k], self.residuals[k], self.flow_norms_sq[k]]
            if include_states:
                row += list(self.states[k])
            w.writerow([_fmt(v) for v in row])
        if fh is None:
            return out.getvalue()


def _fmt(v):
    return repr(float(v))


def prox_grad_vector_field(p, alpha, x):
    """
    Evaluate the flow at ``x``.

    Returns
    -------
    field : ndarray
        ``z - x``.
    z : ndarray
        ``prox_{alpha g}(x - alpha grad f(x))``.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    grad = p.f.gradient(x)
    if not np.all(np.isfinite(grad)):
        raise NumericalError(f"{p.name}: non-finite gradient", state=x)
    z = p.g.prox(alpha, x - alpha * grad)
    if not np.all(np.isfinite(z)):
        raise NumericalError(f"{p.name}: non-finite prox output", state=x)
    return z - x, z


def stationarity_residual(p, alpha, x):
    """``||x - prox_{alpha g}(x - alpha grad f(x))||``; zero exactly at stationary points."""
    d, _ = prox_grad_vector_field(p, alpha, np.asarray(x, dtype=float))
    return float(np.linalg.norm(d))


def integrate(p, cfg, x0, field_fn: Optional[Callable] = None):
    """
    Integrate the flow with a fixed-step explicit scheme.

    Parameters
    ----------
    p : CompositeProblem
    cfg : FlowConfig
    x0 : array_like
        May lie outside ``dom g``; its cost is then recorded as ``+inf``.
    field_fn : callable, optional
        Replacement for the vector field, ``x -> (dx, z)``. Used for
        controlled experiments such as sign-reversed flows.

    Raises
    ------
    DivergenceError
        If ``||x||`` exceeds 1e12.
    """
    x = as_vec(x0, "x0").copy()
    if x.size != p.dim:
        raise ValueError(f"x0 has {x.size} entries, problem dim is {p.dim}")
    if field_fn is None:
        alpha = cfg.alpha

        def field_fn(y):
            return prox_grad_vector_field(p, alpha, y)

    h = cfg.step
    n_steps = cfg.n_steps
    every = int(cfg.record_every)
    shift = p.fstar if p.fstar is not None else 0.0

    times, states, costs, res, fns = [], [], [], [], []

    def record(k, y, d):
        nsq = float(d @ d)
        times.append(k * h)
        states.append(y.copy())
        c = p.F(y)
        costs.append(c - shift if c != INF else INF)
        res.append(math.sqrt(nsq))
        fns.append(nsq)
        return math.sqrt(nsq)

    for k in range(n_steps + 1):
        k1, _ = field_fn(x)
        last = k == n_steps
        stop = cfg.residual_stop is not None and math.sqrt(float(k1 @ k1)) <= cfg.residual_stop
        if k % every == 0 or last or stop:
            record(k, x, k1)
        if last or stop:
            break
        if cfg.method == "euler":
            x = x + h * k1
        else:
            k2, _ = field_fn(x + 0.5 * h * k1)
            k3, _ = field_fn(x + 0.5 * h * k2)
            k4, _ = field_fn(x + h * k3)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        nx = float(np.linalg.norm(x))
        if not math.isfinite(nx):
            raise NumericalError(f"{p.name}: state became non-finite at t={(k + 1) * h:g}",
                                 state=x)
        if nx > BLOWUP_NORM:
            raise DivergenceError(f"{p.name}: ||x|| = {nx:.3g} exceeds {BLOWUP_NORM:g} "
                                  f"at t={(k + 1) * h:g}", residual=nx, state=x)

    return Trajectory(np.array(times), np.array(states), np.array(costs), np.array(res),
                      np.array(fns), cfg, p.fstar, p.name)
