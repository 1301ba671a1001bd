"""
Composite problems ``F = f + g``: LASSO, matrix recovery, matrix
factorization, a small tanh MLP on two-moons, and PSD quadratics.

Also hosts the discrete ISTA iteration used as the reference solver for
optimal values of convex instances.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .numerics import NumericalError, as_mat, as_vec, ext_real, largest_eigenvalue_psd
from .prox_ops import L1, ProxOperator, Zero, make_blockwise, make_l1, make_nuclear, soft_threshold


@dataclass(frozen=True)
class SmoothTerm:
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    lipschitz_estimate: Optional[float] = None


@dataclass(frozen=True)
class CompositeProblem:
    """``F(x) = f(x) + g(x)`` over flat vectors of length ``dim``.

    ``fstar`` is an optimal value when one is known; ``fstar_source`` records
    where it came from (``"closed-form"`` or ``"ista-oracle"``).
    """

    f: SmoothTerm
    g: ProxOperator
    dim: int
    name: str
    fstar: Optional[float] = None
    fstar_source: Optional[str] = None
    convex: bool = True
    data: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if self.g.dim is not None and self.g.dim != self.dim:
            raise ValueError(f"g expects {self.g.dim} entries, problem has {self.dim}")
        if (self.fstar is None) != (self.fstar_source is None):
            raise ValueError("fstar and fstar_source must be given together")

    def F(self, x) -> float:
        gx = self.g.value(x)
        if gx == np.inf:
            return np.inf
        return ext_real(self.f.value(x) + gx)

    def with_fstar(self, fstar, source, **data):
        return dataclasses.replace(self, fstar=float(fstar), fstar_source=source,
                                   data={**self.data, **data})


@dataclass(frozen=True)
class LabeledDataset:
    inputs: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.inputs.shape[0] != self.labels.shape[0]:
            raise ValueError("inputs and labels must have the same number of rows")


# ---------------------------------------------------------------------------
# LASSO
# ---------------------------------------------------------------------------

def lasso_problem(A, u, lam, lipschitz=None):
    """``1/2 ||Ax - u||^2 + lam ||x||_1``.

    ``lipschitz`` skips the power iteration when the top eigenvalue of
    ``A^T A`` is already known.
    """
    A = as_mat(A, "A")
    u = as_vec(u, "u")
    if A.shape[0] != u.size:
        raise ValueError(f"A has {A.shape[0]} rows but u has {u.size} entries")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    AtA = A.T @ A
    Atu = A.T @ u

    def value(x):
        r = A @ x - u
        return 0.5 * float(r @ r)

    def gradient(x):
        return AtA @ x - Atu

    L = largest_eigenvalue_psd(AtA) if lipschitz is None else float(lipschitz)
    f = SmoothTerm(value, gradient, L)
    return CompositeProblem(f, make_l1(lam), A.shape[1], "lasso",
                            data={"A": A, "u": u, "lam": float(lam)})


def lasso_flow_closed_form(A, u, lam, alpha, x):
    """Right-hand side ``-x + soft_{alpha lam}((I - alpha A^T A) x + alpha A^T u)``."""
    A = as_mat(A, "A")
    x = np.asarray(x, dtype=float)
    n = A.shape[1]
    pre = (np.eye(n) - alpha * A.T @ A) @ x + alpha * A.T @ np.asarray(u, dtype=float)
    return -x + soft_threshold(alpha * lam, pre)


def scalar_lasso_solution(a, u, lam):
    """Minimizer and optimal value of ``1/2 (a x - u)^2 + lam |x|``."""
    xs = float(soft_threshold(lam, a * u)) / (a * a)
    return xs, 0.5 * (a * xs - u) ** 2 + lam * abs(xs)


# ---------------------------------------------------------------------------
# Matrix problems
# ---------------------------------------------------------------------------

def matrix_recovery_problem(ops, y, lam):
    """``1/2 ||y - A[X]||^2 + lam ||X||_*`` with ``A[X]_i = tr(A_i^T X)``."""
    ops = [as_mat(a, "A_i") for a in ops]
    y = as_vec(y, "y")
    if not ops:
        raise ValueError("need at least one measurement operator")
    shape = ops[0].shape
    if any(a.shape != shape for a in ops):
        raise ValueError("all measurement operators must share one shape")
    if len(ops) != y.size:
        raise ValueError(f"{len(ops)} operators but {y.size} measurements")
    # row i is vec(A_i), so A[X] = M vec(X)
    M = np.stack([a.ravel() for a in ops])

    def value(x):
        r = y - M @ x
        return 0.5 * float(r @ r)

    def gradient(x):
        return M.T @ (M @ x - y)

    f = SmoothTerm(value, gradient, largest_eigenvalue_psd(M.T @ M))
    return CompositeProblem(f, make_nuclear(lam, shape), M.shape[1], "matrix-recovery",
                            data={"ops": ops, "y": y, "lam": float(lam), "shape": shape})


def matrix_factorization_problem(X, Y, h, lam):
    """
    ``1/2 ||Y - X W1 W2||_F^2 + lam ||W1||_* + lam ||W2||_*``.

    The variable is ``concat(vec(W1), vec(W2))`` with ``W1`` of shape
    ``(n, h)`` and ``W2`` of shape ``(h, m)``. Nonconvex; no optimal value
    is attached.
    """
    X = as_mat(X, "X")
    Y = as_mat(Y, "Y")
    if X.shape[0] != Y.shape[0]:
        raise ValueError("X and Y must have the same number of rows")
    if h < 1:
        raise ValueError("h must be positive")
    n, m = X.shape[1], Y.shape[1]
    s1, s2 = (n, h), (h, m)
    k = n * h

    def split(w):
        return w[:k].reshape(s1), w[k:].reshape(s2)

    def value(w):
        W1, W2 = split(w)
        r = Y - X @ W1 @ W2
        return 0.5 * float(np.sum(r * r))

    def gradient(w):
        W1, W2 = split(w)
        r = Y - X @ W1 @ W2
        g1 = -X.T @ r @ W2.T
        g2 = -W1.T @ X.T @ r
        return np.concatenate([g1.ravel(), g2.ravel()])

    g = make_blockwise([make_nuclear(lam, s1), make_nuclear(lam, s2)], [k, h * m])
    return CompositeProblem(SmoothTerm(value, gradient), g, k + h * m, "matrix-factorization",
                            convex=False,
                            data={"X": X, "Y": Y, "h": h, "lam": float(lam),
                                  "shapes": (s1, s2)})


# ---------------------------------------------------------------------------
# Two moons and the tanh MLP
# ---------------------------------------------------------------------------

def two_moons(n=200, noise=0.0, seed=0):
    """Two interleaved half circles with Gaussian noise, labels 0/1."""
    if n < 2:
        raise ValueError("n must be at least 2")
    n_out = n // 2
    n_in = n - n_out
    t_out = np.linspace(0.0, np.pi, n_out)
    t_in = np.linspace(0.0, np.pi, n_in)
    outer = np.column_stack([np.cos(t_out), np.sin(t_out)])
    inner = np.column_stack([1.0 - np.cos(t_in), 1.0 - np.sin(t_in) - 0.5])
    x = np.vstack([outer, inner])
    y = np.concatenate([np.zeros(n_out), np.ones(n_in)])
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    x, y = x[perm], y[perm]
    if noise > 0:
        x = x + noise * rng.standard_normal(x.shape)
    return LabeledDataset(x, y)


class MLPLayout:
    """Flat parameter layout ``[W1, b1, W2, b2, ...]`` with ``W_l`` of shape (in, out)."""

    def __init__(self, widths):
        widths = tuple(int(w) for w in widths)
        if len(widths) < 2 or min(widths) < 1:
            raise ValueError("widths need at least input and output sizes, all positive")
        self.widths = widths
        self.slices = []
        start = 0
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            w = slice(start, start + fan_in * fan_out)
            start = w.stop
            b = slice(start, start + fan_out)
            start = b.stop
            self.slices.append((w, b, (fan_in, fan_out)))
        self.size = start

    def unpack(self, theta):
        return [(theta[w].reshape(shape), theta[b]) for w, b, shape in self.slices]

    def init(self, seed=0, scale=None):
        rng = np.random.default_rng(seed)
        theta = np.zeros(self.size)
        for w, _, (fan_in, _) in self.slices:
            sd = scale if scale is not None else 1.0 / np.sqrt(fan_in)
            theta[w] = sd * rng.standard_normal(w.stop - w.start)
        return theta


BCE_EPS = 1e-12


def sparse_mlp_problem(widths, data, lam):
    """
    Mean binary cross-entropy of a tanh network plus ``lam ||theta||_1``.

    Every layer, the output included, uses tanh; the output ``o`` is mapped
    to a probability ``p = (o + 1) / 2`` clamped to ``[eps, 1 - eps]``.
    """
    layout = MLPLayout(widths)
    X = as_mat(data.inputs, "inputs")
    y = np.asarray(data.labels, dtype=float)
    if X.shape[1] != layout.widths[0] or layout.widths[-1] != 1:
        raise ValueError("widths must start at the input dimension and end at 1")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    N = X.shape[0]

    def forward(theta):
        acts = [X]
        for W, b in layout.unpack(theta):
            acts.append(np.tanh(acts[-1] @ W + b))
        return acts

    def value(theta):
        p = np.clip((forward(theta)[-1][:, 0] + 1.0) / 2.0, BCE_EPS, 1.0 - BCE_EPS)
        return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))

    def gradient(theta):
        acts = forward(theta)
        raw = (acts[-1][:, 0] + 1.0) / 2.0
        p = np.clip(raw, BCE_EPS, 1.0 - BCE_EPS)
        inside = (raw > BCE_EPS) & (raw < 1.0 - BCE_EPS)
        dp = np.where(inside, (p - y) / (p * (1.0 - p)) / N, 0.0)
        delta = (0.5 * dp)[:, None]
        grad = np.zeros(layout.size)
        params = layout.unpack(theta)
        for l in range(len(params) - 1, -1, -1):
            w_sl, b_sl, _ = layout.slices[l]
            out = acts[l + 1]
            dpre = delta * (1.0 - out * out)
            grad[w_sl] = (acts[l].T @ dpre).ravel()
            grad[b_sl] = dpre.sum(axis=0)
            delta = dpre @ params[l][0].T
        return grad

    return CompositeProblem(SmoothTerm(value, gradient), make_l1(lam), layout.size,
                            "sparse-mlp", convex=False,
                            data={"layout": layout, "lam": float(lam)})


def frozen_slice(problem, base, free):
    """
    Restrict an ``l1``- or zero-regularized problem to the coordinates ``free``.

    The remaining coordinates are frozen at ``base``; their regularizer value
    is folded into ``f`` so that costs match the full problem.
    """
    if not isinstance(problem.g, (L1, Zero)):
        raise TypeError("frozen_slice needs a coordinate-separable l1 or zero regularizer")
    base = as_vec(base, "base").copy()
    free = np.asarray(free, dtype=int)
    mask = np.ones(base.size, dtype=bool)
    mask[free] = False
    frozen_g = problem.g.value(np.where(mask, base, 0.0))

    def embed(w):
        theta = base.copy()
        theta[free] = w
        return theta

    def value(w):
        return problem.f.value(embed(w)) + frozen_g

    def gradient(w):
        return problem.f.gradient(embed(w))[free]

    g = make_l1(problem.g.lam) if isinstance(problem.g, L1) else Zero()
    return CompositeProblem(SmoothTerm(value, gradient), g, free.size,
                            f"{problem.name}-slice", convex=problem.convex,
                            data={**problem.data, "base": base, "free": free, "embed": embed})


# ---------------------------------------------------------------------------
# Quadratics
# ---------------------------------------------------------------------------

def quadratic_problem(Q, b, g):
    """``1/2 x^T Q x - b^T x + g(x)`` for symmetric PSD ``Q``."""
    Q = as_mat(Q, "Q")
    b = as_vec(b, "b")
    n = Q.shape[0]
    if Q.shape != (n, n) or b.size != n:
        raise ValueError("Q must be square and match b")
    if not np.allclose(Q, Q.T, rtol=0, atol=1e-12 * max(1.0, np.abs(Q).max())):
        raise ValueError("Q must be symmetric")
    eig = np.linalg.eigvalsh(Q)
    if eig[0] < -1e-10 * max(1.0, eig[-1]):
        raise ValueError("Q must be positive semidefinite")

    def value(x):
        return 0.5 * float(x @ Q @ x) - float(b @ x)

    def gradient(x):
        return Q @ x - b

    p = CompositeProblem(SmoothTerm(value, gradient, float(eig[-1])), g, n, "quadratic",
                         data={"Q": Q, "b": b})
    if isinstance(g, Zero) and eig[0] > 0:
        xs = np.linalg.solve(Q, b)
        p = p.with_fstar(value(xs), "closed-form", xstar=xs)
    return p


# ---------------------------------------------------------------------------
# ISTA reference solver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IstaResult:
    x: np.ndarray
    value: float
    residual: float
    iterations: int


def ista(problem, x0=None, step=None, tol=1e-12, max_iter=2_000_000):
    """
    Discrete proximal gradient iteration ``x <- prox_{step g}(x - step grad f(x))``.

    Runs until ``||x - x_next|| <= tol``, or exactly ``max_iter`` iterations
    when ``tol`` is None. ``step`` defaults to ``1/L`` from the smooth term's
    Lipschitz estimate.

    Raises
    ------
    NumericalError
        If ``max_iter`` is exhausted before reaching ``tol``.
    """
    if step is None:
        L = problem.f.lipschitz_estimate
        if not L:
            raise ValueError(f"{problem.name}: no Lipschitz estimate, pass step explicitly")
        step = 1.0 / L
    x = np.zeros(problem.dim) if x0 is None else as_vec(x0).copy()
    x = problem.g.prox(step, x)
    grad, prox = problem.f.gradient, problem.g.prox
    res = np.inf
    for k in range(1, max_iter + 1):
        x_next = prox(step, x - step * grad(x))
        res = float(np.linalg.norm(x_next - x))
        x = x_next
        if tol is not None and res <= tol:
            return IstaResult(x, problem.F(x), res, k)
    if tol is None:
        return IstaResult(x, problem.F(x), res, max_iter)
    raise NumericalError(f"ISTA did not reach {tol:g} in {max_iter} iterations",
                         residual=res, state=x)


def attach_ista_fstar(problem, x0=None, tol=1e-12, max_iter=2_000_000):
    """Return ``problem`` with ``fstar`` set from the ISTA oracle."""
    if not problem.convex:
        raise ValueError(f"{problem.name} is nonconvex; no optimal value can be certified")
    res = ista(problem, x0=x0, tol=tol, max_iter=max_iter)
    return problem.with_fstar(res.value, "ista-oracle", xstar=res.x, ista_iterations=res.iterations)
