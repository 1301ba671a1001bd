"""
Recompute the reference optimal values frozen into ``tests/_oracles.py``.

Uses cvxpy's interior-point solver, independent of the package's ISTA
oracle. Requires ``cvxpy`` (not a package dependency).
"""

import cvxpy as cp
from proxflow.demos import get_demo

TOL = dict(tol_gap_abs=1e-14, tol_gap_rel=1e-14, tol_feas=1e-14)


def solve(objective):
    prob = cp.Problem(cp.Minimize(objective))
    prob.solve(solver=cp.CLARABEL, **TOL)
    return prob.value


def show(name, objective):
    print(f"{name} = {float(solve(objective))!r}")


def main():
    p, _ = get_demo("lasso").build(7)
    A, u, lam = p.data["A"], p.data["u"], p.data["lam"]
    x = cp.Variable(A.shape[1])
    show("LASSO_FSTAR", 0.5 * cp.sum_squares(A @ x - u) + lam * cp.norm1(x))

    p, _ = get_demo("quadratic-l1").build(7)
    Q, b = p.data["Q"], p.data["b"]
    x = cp.Variable(Q.shape[0])
    show("QUAD_L1_FSTAR", 0.5 * cp.quad_form(x, Q) - b @ x + p.g.lam * cp.norm1(x))

    p, _ = get_demo("matrix-recovery").build(7)
    ops, y, lam = p.data["ops"], p.data["y"], p.data["lam"]
    X = cp.Variable(ops[0].shape)
    r = cp.hstack([cp.sum(cp.multiply(a, X)) for a in ops]) - y
    show("MATRIX_RECOVERY_FSTAR", 0.5 * cp.sum_squares(r) + lam * cp.normNuc(X))


if __name__ == "__main__":
    main()
