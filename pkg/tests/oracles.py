"""Independent brute-force oracles used to pin expected solver outputs.

These deliberately avoid the production code paths: LPs are checked by
enumerating basic feasible points, QPs by enumerating candidate active
sets.  Both are exponential and only meant for tiny random instances.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np


def lp_vertex_oracle(cost, M_ub, g_ub, M_eq=None, g_eq=None, tol=1e-9):
    """Minimum objective over enumerated basic feasible points.

    Assumes the feasible set is nonempty, bounded and pointed, so the
    optimum is attained at some intersection of ``n`` constraint rows.
    Returns ``(best_value, best_point)``.
    """
    M_ub = np.atleast_2d(np.asarray(M_ub, float))
    g_ub = np.asarray(g_ub, float).reshape(-1)
    rows = [M_ub]
    rhs = [g_ub]
    if M_eq is not None:
        rows.append(np.atleast_2d(np.asarray(M_eq, float)))
        rhs.append(np.asarray(g_eq, float).reshape(-1))
    R = np.vstack(rows)
    r = np.concatenate(rhs)
    n = R.shape[1]
    n_eq = 0 if M_eq is None else rows[1].shape[0]

    def feasible(x):
        if np.max(M_ub @ x - g_ub, initial=0.0) > tol:
            return False
        if n_eq and np.max(np.abs(rows[1] @ x - rhs[1])) > tol:
            return False
        return True

    best_val, best_x = np.inf, None
    for comb in combinations(range(R.shape[0]), n):
        S = R[list(comb)]
        if abs(np.linalg.det(S)) < 1e-10:
            continue
        x = np.linalg.solve(S, r[list(comb)])
        if feasible(x):
            val = float(cost @ x)
            if val < best_val - 1e-13:
                best_val, best_x = val, x
    return best_val, best_x


def qp_active_set_oracle(Q, q, M_ub, g_ub, tol=1e-9):
    """Global minimum of a strictly convex QP by active-set enumeration.

    For every candidate active set ``S`` with at most ``n`` rows, solve the
    equality-constrained problem and keep the feasible candidates; the true
    minimizer appears for ``S`` equal to its own active set.  Returns
    ``(best_value, best_point)``.
    """
    Q = np.atleast_2d(np.asarray(Q, float))
    q = np.asarray(q, float).reshape(-1)
    M_ub = np.atleast_2d(np.asarray(M_ub, float))
    g_ub = np.asarray(g_ub, float).reshape(-1)
    n = Q.shape[0]
    m = M_ub.shape[0]

    best_val, best_x = np.inf, None
    for k in range(0, min(n, m) + 1):
        for comb in combinations(range(m), k):
            S = M_ub[list(comb)]
            K = np.zeros((n + k, n + k))
            K[:n, :n] = Q
            K[:n, n:] = S.T
            K[n:, :n] = S
            rhs = np.concatenate([-q, g_ub[list(comb)]])
            try:
                sol = np.linalg.solve(K, rhs)
            except np.linalg.LinAlgError:
                continue
            x = sol[:n]
            if np.max(M_ub @ x - g_ub, initial=0.0) > tol:
                continue
            val = float(0.5 * x @ Q @ x + q @ x)
            if val < best_val - 1e-13:
                best_val, best_x = val, x
    return best_val, best_x


def random_bounded_lp(rng, n_max=6, rows_max=10):
    """Random feasible + bounded LP with at most ``rows_max`` rows.

    Boundedness comes from the scaffold ``x >= lo`` plus ``sum(x) <= u``;
    extra random rows keep a known interior point feasible.
    """
    n = int(rng.integers(1, n_max + 1))
    x_feas = rng.uniform(-1.0, 1.0, size=n)
    lo = x_feas - rng.uniform(0.5, 2.0, size=n)
    u = float(np.sum(x_feas) + rng.uniform(0.5, 2.0))
    rows = [-np.eye(n), np.ones((1, n))]
    rhs = [-lo, np.array([u])]
    extra = int(rng.integers(0, rows_max - n))  # scaffold uses n + 1 rows
    extra = max(0, min(extra, rows_max - n - 1))
    if extra:
        Me = rng.normal(size=(extra, n))
        rows.append(Me)
        rhs.append(Me @ x_feas + rng.uniform(0.05, 1.0, size=extra))
    M = np.vstack(rows)
    g = np.concatenate(rhs)
    cost = rng.normal(size=n)
    return cost, M, g, x_feas


def random_spd_qp(rng, n_max=6, rows_max=10):
    """Random strictly convex QP over a box plus a few random cuts."""
    n = int(rng.integers(1, n_max + 1))
    R = rng.normal(size=(n, n))
    Q = R @ R.T + (0.2 + rng.uniform()) * np.eye(n)
    q = rng.normal(size=n)
    x_feas = rng.uniform(-1.0, 1.0, size=n)
    hi = x_feas + rng.uniform(0.3, 1.5, size=n)
    lo = x_feas - rng.uniform(0.3, 1.5, size=n)
    rows = [np.eye(n), -np.eye(n)]
    rhs = [hi, -lo]
    extra = int(rng.integers(0, max(1, rows_max - 2 * n) + 1))
    if extra:
        Me = rng.normal(size=(extra, n))
        rows.append(Me)
        rhs.append(Me @ x_feas + rng.uniform(0.05, 1.0, size=extra))
    M = np.vstack(rows)
    g = np.concatenate(rhs)
    return Q, q, M, g, x_feas
