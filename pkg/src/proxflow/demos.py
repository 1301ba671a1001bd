"""Built-in seeded problem instances used by the CLI, scripts and tests."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import problems as pb
from .prox_ops import make_box_indicator, make_l1, make_zero


@dataclass(frozen=True)
class Demo:
    name: str
    description: str
    build: Callable  # seed -> (problem, x0)
    alpha: float = 1.0


def lasso_demo(seed=7, m=20, n=40, lam=0.1):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n)) / np.sqrt(m)
    x_true = np.zeros(n)
    support = rng.choice(n, size=4, replace=False)
    x_true[support] = rng.choice([-1.0, 1.0], size=4) * (1.0 + rng.random(4))
    u = A @ x_true + 0.05 * rng.standard_normal(m)
    p = pb.attach_ista_fstar(pb.lasso_problem(A, u, lam))
    x0 = rng.standard_normal(n)
    return p, x0


def scalar_lasso_demo(seed=0):
    p = pb.lasso_problem([[1.0]], [1.0], 0.5)
    xs, fs = pb.scalar_lasso_solution(1.0, 1.0, 0.5)
    return p.with_fstar(fs, "closed-form", xstar=np.array([xs])), np.zeros(1)


def quadratic_demo(seed=0, n=3):
    p = pb.quadratic_problem(np.eye(n), np.zeros(n), make_zero())
    x0 = np.random.default_rng(seed).standard_normal(n)
    return p, x0


def quadratic_l1_demo(seed=7, n=6, lam=0.5):
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((n, n))
    Q = B.T @ B / n + 0.5 * np.eye(n)
    Q = 0.5 * (Q + Q.T)
    b = rng.standard_normal(n)
    p = pb.attach_ista_fstar(pb.quadratic_problem(Q, b, make_l1(lam)))
    return p, 2.0 * rng.standard_normal(n)


def matrix_recovery_demo(seed=7, shape=(5, 5), k=10, lam=0.5):
    rng = np.random.default_rng(seed)
    ops = [rng.standard_normal(shape) / np.sqrt(k) for _ in range(k)]
    L = np.outer(rng.standard_normal(shape[0]), rng.standard_normal(shape[1]))
    y = np.array([np.sum(a * L) for a in ops]) + 0.01 * rng.standard_normal(k)
    p = pb.attach_ista_fstar(pb.matrix_recovery_problem(ops, y, lam))
    return p, rng.standard_normal(shape[0] * shape[1])


def matrix_factorization_demo(seed=7, n=6, m=4, h=2, samples=8, lam=0.2):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((samples, n)) / np.sqrt(samples)
    W = rng.standard_normal((n, 1)) @ rng.standard_normal((1, m))
    Y = X @ W + 0.01 * rng.standard_normal((samples, m))
    p = pb.matrix_factorization_problem(X, Y, h, lam)
    return p, 0.5 * rng.standard_normal(p.dim)


def mlp_slice_demo(seed=7, lam=1e-3, free=(0, 1)):
    """Two first-layer weights of a (2, 8, 2, 1) tanh MLP on two-moons; the rest frozen."""
    data = pb.two_moons(200, noise=0.1, seed=seed)
    full = pb.sparse_mlp_problem((2, 8, 2, 1), data, lam)
    base = full.data["layout"].init(seed, scale=1.0)
    p = pb.frozen_slice(full, base, list(free))
    return p, np.array([2.5, -2.5])


def box_demo(seed=0, start="outside"):
    """``1/2 ||x - c||^2`` over the unit box; ``start`` picks an exterior or interior x0."""
    lo, hi = np.zeros(2), np.ones(2)
    if start == "outside":
        c, x0 = np.array([0.3, 0.6]), np.array([3.0, -2.0])
    else:
        c, x0 = np.array([1.5, -0.5]), np.array([0.2, 0.7])
    p = pb.quadratic_problem(np.eye(2), c, make_box_indicator(lo, hi))
    xs = np.clip(c, lo, hi)
    return p.with_fstar(p.F(xs), "closed-form", xstar=xs), x0


DEMOS = {
    d.name: d for d in [
        Demo("lasso", "LASSO, 20x40 Gaussian design, 4-sparse truth", lasso_demo),
        Demo("scalar-lasso", "1/2 (x-1)^2 + 0.5 |x|", scalar_lasso_demo),
        Demo("quadratic", "1/2 ||x||^2, g = 0", quadratic_demo),
        Demo("quadratic-l1", "strongly convex quadratic + l1", quadratic_l1_demo),
        Demo("matrix-recovery", "5x5 nuclear-norm recovery from 10 measurements",
             matrix_recovery_demo),
        Demo("matrix-factorization", "X W1 W2 fit, n=6 m=4 h=2, nuclear penalties",
             matrix_factorization_demo),
        Demo("mlp-slice", "two free first-layer weights of a tanh MLP on two-moons",
             mlp_slice_demo),
        Demo("box", "quadratic over the unit box, started outside", box_demo),
        Demo("box-inside", "quadratic over the unit box, started inside",
             lambda seed=0: box_demo(seed, start="inside")),
    ]
}

#: the five problems the monotonicity and convergence checks sweep over
CORE_DEMOS = ("lasso", "quadratic-l1", "matrix-recovery", "matrix-factorization", "mlp-slice")


def get_demo(name):
    try:
        return DEMOS[name]
    except KeyError:
        raise KeyError(f"unknown demo {name!r}; choose from {sorted(DEMOS)}") from None


#: tracking demos as raw config fragments, scalar LASSO with target ``u(t)``
TRACK_DEMOS = {
    "tv-sin": ("u(t) = 1 + 0.1 sin t",
               {"type": "lasso-tv", "A": [[1.0]], "lam": 0.5, "radius": 1.0, "x0": [0.0]},
               {"type": "sinusoidal", "base": [1.0], "amplitude": [0.1], "omega": 1.0}),
    "tv-stop": ("u moves from 1 to 1.5 over [0, 5], then stops",
                {"type": "lasso-tv", "A": [[1.0]], "lam": 0.5, "radius": 1.0, "x0": [0.0]},
                {"type": "smooth-stop", "start": [1.0], "end": [1.5], "stop_time": 5.0}),
    "tv-const": ("u(t) = 1",
                 {"type": "lasso-tv", "A": [[1.0]], "lam": 0.5, "radius": 1.0, "x0": [0.0]},
                 {"type": "constant", "theta": [1.0]}),
    "tv-rest": ("u(t) = 1, started at the optimum",
                {"type": "lasso-tv", "A": [[1.0]], "lam": 0.5, "radius": 1.0,
                 "x0": "optimum"},
                {"type": "constant", "theta": [1.0]}),
}
