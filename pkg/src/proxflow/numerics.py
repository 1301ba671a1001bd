"""
Dense linear-algebra primitives and extended-real scalars.

Vectors and matrices are plain ``numpy`` float arrays; the helpers here only
validate them. Extended reals are Python floats where ``+inf`` is allowed and
``-inf``/``nan`` are rejected.
"""

from __future__ import annotations

import math

import numpy as np

INF = math.inf


class NumericalError(ArithmeticError):
    """A numerical routine failed (non-convergence, NaN, blow-up).

    Parameters
    ----------
    message : str
    residual : float, optional
        Last residual observed by the failing routine.
    state : ndarray, optional
        Last state reached before the failure.
    """

    def __init__(self, message, residual=None, state=None):
        super().__init__(message)
        self.residual = residual
        self.state = state


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


def ext_real(value) -> float:
    """Coerce ``value`` to an extended real in ``(-inf, +inf]``."""
    v = float(value)
    if math.isnan(v):
        raise NumericalError("NaN where an extended real was expected")
    if v == -INF:
        raise ValueError("-inf is not a valid value for a proper function")
    return v


def as_vec(x, name="x") -> np.ndarray:
    """Return ``x`` as a finite 1-D float array of length >= 1."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericalError(f"{name} has non-finite entries")
    return arr


def as_mat(m, name="M") -> np.ndarray:
    arr = np.asarray(m, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericalError(f"{name} has non-finite entries")
    return arr


# ---------------------------------------------------------------------------
# SVD
# ---------------------------------------------------------------------------

def svd(m, method="lapack"):
    """
    Thin singular value decomposition ``M = U diag(sigma) V^T``.

    Parameters
    ----------
    m : array_like, shape (rows, cols)
    method : {"lapack", "jacobi"}
        ``"lapack"`` calls ``numpy.linalg.svd``; ``"jacobi"`` runs the
        one-sided Jacobi iteration in :func:`jacobi_svd`.

    Returns
    -------
    u : ndarray, shape (rows, k)
    sigma : ndarray, shape (k,)
        Nonincreasing, nonnegative.
    v : ndarray, shape (cols, k)
        ``k = min(rows, cols)``.

    Raises
    ------
    NumericalError
        If the factorization does not converge.
    """
    a = as_mat(m)
    if method == "jacobi":
        return jacobi_svd(a)
    if method != "lapack":
        raise ValueError(f"unknown svd method {method!r}")
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"LAPACK svd failed: {exc}", residual=INF) from exc
    return u, s, vt.T


def jacobi_svd(m, tol=1e-15, max_sweeps=80):
    """One-sided (Hestenes) Jacobi SVD.

    Columns of a working copy are rotated pairwise until mutually orthogonal;
    the column norms are then the singular values.
    """
    a = as_mat(m)
    transpose = a.shape[0] < a.shape[1]
    if transpose:
        a = a.T
    rows, cols = a.shape
    w = a.copy()
    v = np.eye(cols)
    # inner products below this are roundoff, whatever the column norms
    floor = (np.finfo(float).eps * np.linalg.norm(a)) ** 2

    for _ in range(max_sweeps):
        rotated = False
        for p in range(cols - 1):
            for q in range(p + 1, cols):
                wp, wq = w[:, p], w[:, q]
                alpha = wp @ wp
                beta = wq @ wq
                gamma = wp @ wq
                if abs(gamma) <= max(floor, tol * math.sqrt(alpha * beta)):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                w[:, [p, q]] = np.column_stack((c * wp - s * wq, s * wp + c * wq))
                vp, vq = v[:, p].copy(), v[:, q]
                v[:, [p, q]] = np.column_stack((c * vp - s * vq, s * vp + c * vq))
        if not rotated:
            break
    else:
        res = _offdiag_ratio(w)
        raise NumericalError(
            f"Jacobi SVD did not converge in {max_sweeps} sweeps", residual=res)

    sigma = np.linalg.norm(w, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    w = w[:, order]
    v = v[:, order]

    scale = sigma[0] if sigma[0] > 0 else 1.0
    u = np.zeros((rows, cols))
    live = sigma > rows * np.finfo(float).eps * scale
    u[:, live] = w[:, live] / sigma[live]
    if not np.all(live):
        u = _complete_orthonormal(u, live)

    if transpose:
        return v, sigma, u
    return u, sigma, v


def _offdiag_ratio(w):
    g = w.T @ w
    d = np.sqrt(np.outer(np.diag(g), np.diag(g)))
    d[d == 0] = 1.0
    off = np.abs(g / d)
    np.fill_diagonal(off, 0.0)
    return float(off.max(initial=0.0))


def _complete_orthonormal(u, live):
    # Fill dead columns with unit vectors orthogonal to the live ones.
    u = u.copy()
    rows = u.shape[0]
    basis = [u[:, j] for j in np.flatnonzero(live)]
    candidates = iter(np.eye(rows))
    for j in np.flatnonzero(~live):
        for e in candidates:
            r = e.copy()
            for _ in range(2):
                for b in basis:
                    r -= (b @ r) * b
            nr = np.linalg.norm(r)
            if nr > 1e-8:
                u[:, j] = r / nr
                basis.append(u[:, j])
                break
    return u


# ---------------------------------------------------------------------------
# Regression and spectral helpers
# ---------------------------------------------------------------------------

def log_linear_fit(t, v):
    """
    Least-squares fit of ``ln v = intercept - rate * t``.

    Returns
    -------
    rate : float
        Negated slope, so a decaying exponential has positive rate.
    intercept : float
    r2 : float
        Coefficient of determination in [0, 1]; 1 for a constant series.
    """
    t = as_vec(t, "t")
    v = np.asarray(v, dtype=float)
    if t.shape != v.shape:
        raise ValueError("t and v must have the same length")
    if t.size < 3:
        raise ValueError("log_linear_fit needs at least 3 points")
    if not np.all(v > 0) or not np.all(np.isfinite(v)):
        raise DomainError("log_linear_fit requires strictly positive finite values")
    y = np.log(v)
    tm = t.mean()
    ym = y.mean()
    dt = t - tm
    sxx = dt @ dt
    if sxx == 0:
        raise DomainError("log_linear_fit needs at least two distinct times")
    slope = (dt @ (y - ym)) / sxx
    intercept = ym - slope * tm
    resid = y - (intercept + slope * t)
    ss_tot = float((y - ym) @ (y - ym))
    ss_res = float(resid @ resid)
    if ss_tot <= 1e-300:
        r2 = 1.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return float(-slope), float(intercept), r2


def largest_eigenvalue_psd(m, tol=1e-12, max_iter=10_000, seed=0):
    """Power iteration for the top eigenvalue of a symmetric PSD matrix."""
    a = as_mat(m)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    x = np.random.default_rng(seed).standard_normal(n)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iter):
        y = a @ x
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        lam_new = float(x @ y)
        x = y / ny
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return lam_new
        lam = lam_new
    return lam
