"""
Closed convex proper regularizers and their proximal maps.

Every operator acts on flat vectors. Matrix-valued regularizers keep the
matrix shape as metadata and reshape internally, so the flow engine only ever
sees 1-D arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .numerics import INF, as_vec, svd


def soft_threshold(kappa, x):
    """
    Elementwise soft thresholding.

    ``x_i - kappa * sign(x_i)`` where ``|x_i| > kappa`` and ``0`` elsewhere.

    >>> soft_threshold(1.0, np.array([2.0, 0.5, -3.0]))
    array([ 1.,  0., -2.])
    """
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) > kappa, x - kappa * np.sign(x), 0.0)


@dataclass(frozen=True)
class MinNormSubgradResult:
    s: np.ndarray
    norm: float


@dataclass(frozen=True)
class ProxOperator:
    """Base class for an evaluable CCP function ``g``.

    Subclasses implement ``value``, ``prox`` and ``min_norm_subgradient``.
    ``is_subgradient`` returns ``None`` when no exact membership rule exists,
    in which case callers fall back to sampled convexity inequalities.
    """

    name: str = "g"

    #: number of entries the operator expects, or None if any length works
    dim: Optional[int] = field(default=None, init=False)
    finite_valued: bool = field(default=True, init=False)

    def value(self, x) -> float:
        raise NotImplementedError

    def prox(self, alpha, v) -> np.ndarray:
        raise NotImplementedError

    def min_norm_subgradient(self, x) -> Optional[np.ndarray]:
        raise NotImplementedError

    def domain_test(self, x) -> bool:
        return True

    def is_subgradient(self, x, s, tol) -> Optional[bool]:
        return None

    def sample_domain(self, rng, center, n, scale=1.0):
        """Draw ``n`` points in ``dom g`` scattered around ``center``."""
        center = np.asarray(center, dtype=float)
        return center + scale * rng.standard_normal((n, center.size))


@dataclass(frozen=True)
class Zero(ProxOperator):
    name: str = "zero"

    def value(self, x):
        return 0.0

    def prox(self, alpha, v):
        _check_alpha(alpha)
        return np.array(v, dtype=float)

    def min_norm_subgradient(self, x):
        return np.zeros(np.size(x))

    def is_subgradient(self, x, s, tol):
        return bool(np.all(np.abs(s) <= tol))


@dataclass(frozen=True)
class L1(ProxOperator):
    lam: float = 1.0
    name: str = "l1"

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")

    def value(self, x):
        return self.lam * float(np.sum(np.abs(x)))

    def prox(self, alpha, v):
        _check_alpha(alpha)
        return soft_threshold(alpha * self.lam, v)

    def min_norm_subgradient(self, x):
        # at x_i = 0 the interval [-lam, lam] projects 0 onto itself
        return self.lam * np.sign(np.asarray(x, dtype=float))

    def is_subgradient(self, x, s, tol):
        x = np.asarray(x, dtype=float)
        s = np.asarray(s, dtype=float)
        nz = x != 0
        on = np.abs(s[nz] - self.lam * np.sign(x[nz])) <= tol
        off = np.abs(s[~nz]) <= self.lam + tol
        return bool(np.all(on) and np.all(off))


@dataclass(frozen=True)
class Nuclear(ProxOperator):
    """``lam * ||X||_*`` on matrices of ``shape`` stored row-major."""

    lam: float = 1.0
    shape: tuple = (1, 1)
    name: str = "nuclear"
    svd_method: str = "lapack"

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        rows, cols = self.shape
        if rows < 1 or cols < 1:
            raise ValueError("shape must be positive")
        object.__setattr__(self, "shape", (int(rows), int(cols)))
        object.__setattr__(self, "dim", int(rows) * int(cols))

    def _mat(self, x):
        x = np.asarray(x, dtype=float)
        if x.size != self.dim:
            raise ValueError(f"expected {self.dim} entries for shape {self.shape}, got {x.size}")
        return x.reshape(self.shape)

    def value(self, x):
        return self.lam * float(np.sum(svd(self._mat(x), self.svd_method)[1]))

    def prox(self, alpha, v):
        _check_alpha(alpha)
        u, s, w = svd(self._mat(v), self.svd_method)
        s = np.maximum(s - alpha * self.lam, 0.0)
        return ((u * s) @ w.T).ravel()

    def min_norm_subgradient(self, x):
        u, s, w = svd(self._mat(x), self.svd_method)
        rank = int(np.sum(s > 1e-12 * max(1.0, s[0])))
        return (self.lam * u[:, :rank] @ w[:, :rank].T).ravel()


@dataclass(frozen=True)
class Box(ProxOperator):
    """Indicator of ``{x : lo <= x <= hi}``."""

    lo: np.ndarray = None
    hi: np.ndarray = None
    name: str = "box"

    def __post_init__(self):
        lo = as_vec(self.lo, "lo")
        hi = as_vec(self.hi, "hi")
        if lo.shape != hi.shape:
            raise ValueError("lo and hi must have the same length")
        if np.any(lo > hi):
            raise ValueError("box requires lo <= hi")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "dim", lo.size)
        object.__setattr__(self, "finite_valued", False)

    def domain_test(self, x):
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo) and np.all(x <= self.hi))

    def value(self, x):
        return 0.0 if self.domain_test(x) else INF

    def prox(self, alpha, v):
        _check_alpha(alpha)
        return np.clip(np.asarray(v, dtype=float), self.lo, self.hi)

    def min_norm_subgradient(self, x):
        x = np.asarray(x, dtype=float)
        if np.all(x > self.lo) and np.all(x < self.hi):
            return np.zeros(x.size)
        return None

    def is_subgradient(self, x, s, tol):
        # normal cone of the box, componentwise
        x = np.asarray(x, dtype=float)
        s = np.asarray(s, dtype=float)
        if not self.domain_test(x):
            return False
        at_lo = x == self.lo
        at_hi = x == self.hi
        free = at_lo & at_hi
        ok = np.where(free, True,
                      np.where(at_lo, s <= tol,
                               np.where(at_hi, s >= -tol, np.abs(s) <= tol)))
        return bool(np.all(ok))

    def sample_domain(self, rng, center, n, scale=1.0):
        pts = super().sample_domain(rng, center, n, scale)
        return np.clip(pts, self.lo, self.hi)


@dataclass(frozen=True)
class Blockwise(ProxOperator):
    """Separable sum ``g(x) = sum_i g_i(x_i)`` over consecutive blocks."""

    parts: tuple = ()
    sizes: tuple = ()
    name: str = "blockwise"

    def __post_init__(self):
        if len(self.parts) != len(self.sizes) or not self.parts:
            raise ValueError("parts and sizes must be non-empty and aligned")
        for g, n in zip(self.parts, self.sizes):
            if g.dim is not None and g.dim != n:
                raise ValueError(f"block {g.name} has dim {g.dim}, size given {n}")
        object.__setattr__(self, "parts", tuple(self.parts))
        object.__setattr__(self, "sizes", tuple(int(n) for n in self.sizes))
        object.__setattr__(self, "dim", sum(self.sizes))
        object.__setattr__(self, "finite_valued", all(g.finite_valued for g in self.parts))

    def _split(self, x):
        x = np.asarray(x, dtype=float)
        if x.size != self.dim:
            raise ValueError(f"expected {self.dim} entries, got {x.size}")
        return np.split(x, np.cumsum(self.sizes)[:-1])

    def value(self, x):
        return float(sum(g.value(b) for g, b in zip(self.parts, self._split(x))))

    def prox(self, alpha, v):
        _check_alpha(alpha)
        return np.concatenate([g.prox(alpha, b) for g, b in zip(self.parts, self._split(v))])

    def min_norm_subgradient(self, x):
        out = []
        for g, b in zip(self.parts, self._split(x)):
            s = g.min_norm_subgradient(b)
            if s is None:
                return None
            out.append(s)
        return np.concatenate(out)

    def domain_test(self, x):
        return all(g.domain_test(b) for g, b in zip(self.parts, self._split(x)))

    def is_subgradient(self, x, s, tol):
        verdicts = [g.is_subgradient(b, sb, tol)
                    for g, b, sb in zip(self.parts, self._split(x), self._split(s))]
        if any(v is None for v in verdicts):
            return None
        return all(verdicts)

    def sample_domain(self, rng, center, n, scale=1.0):
        blocks = [g.sample_domain(rng, c, n, scale)
                  for g, c in zip(self.parts, self._split(center))]
        return np.hstack(blocks)


def _check_alpha(alpha):
    if not alpha > 0:
        raise ValueError("alpha must be positive")


def make_zero():
    return Zero()


def make_l1(lam):
    return L1(lam=float(lam))


def make_nuclear(lam, shape, svd_method="lapack"):
    return Nuclear(lam=float(lam), shape=tuple(shape), svd_method=svd_method)


def make_box_indicator(lo, hi):
    return Box(lo=lo, hi=hi)


def make_blockwise(parts, sizes):
    return Blockwise(parts=tuple(parts), sizes=tuple(sizes))


# ---------------------------------------------------------------------------
# Proximal optimality condition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProxOptimalityResult:
    passed: bool
    z: np.ndarray
    s: np.ndarray
    worst_violation: float
    witness: Optional[np.ndarray]
    exact_membership: Optional[bool]

    def __bool__(self):
        return self.passed


def check_prox_optimality(g, alpha, v, tol, n_samples=200, seed=0):
    """
    Check that ``(v - z) / alpha`` is a subgradient of ``g`` at ``z = prox(alpha, v)``.

    The subgradient inequality ``g(u) >= g(z) + s^T (u - z) - tol`` is tested
    at ``n_samples`` seeded points ``u`` of ``dom g`` at several distances
    from ``z``. Operators with an exact membership rule are also checked with
    that rule. A failed check is a result, not an exception.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    v = as_vec(v, "v")
    z = g.prox(alpha, v)
    s = (v - z) / alpha
    gz = g.value(z)

    rng = np.random.default_rng(seed)
    scales = np.array([1e-3, 1e-2, 1e-1, 1.0, 10.0]) * (1.0 + np.linalg.norm(z))
    per = -(-n_samples // len(scales))
    pts = np.vstack([g.sample_domain(rng, z, per, sc) for sc in scales])[:n_samples]

    worst = -INF
    witness = None
    for u in pts:
        gu = g.value(u)
        if gu == INF:
            continue
        viol = gz + s @ (u - z) - gu
        if viol > worst:
            worst, witness = float(viol), u
    exact = g.is_subgradient(z, s, tol)
    passed = worst <= tol and exact is not False
    if not passed and exact is False and worst <= tol:
        witness = z
    return ProxOptimalityResult(passed, z, s, worst, witness, exact)
