"""Dense LP and strongly convex QP solvers over affine constraint systems.

The linear solver is a two-phase revised simplex method with Bland's
anti-cycling rule, so results are deterministic for fixed input data.  It
returns a primal vertex together with a dual basic solution read off the
final basis, which downstream code uses as a certificate (subgradients of
parametric optimal values, strong-duality checks).  The quadratic solver is
a primal active-set method for strongly convex objectives.

Everything is dense; the intended problem sizes are a few dozen variables.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InfeasiblePolyhedronError, NotSPDError, NumericalDegeneracyError

__all__ = [
    "AffineSystem",
    "LPStatus",
    "LPSolution",
    "QPStatus",
    "QPSolution",
    "solve_lp",
    "solve_qp",
    "project_polyhedron",
]

# Fixed solver tolerances: primal/dual feasibility 1e-9, pivots 1e-12.
FEAS_TOL = 1e-9
PIVOT_TOL = 1e-12
_RCOST_TOL = 1e-10
_REFACTOR_EVERY = 64
_MAX_PIVOTS = 50_000


def _as_matrix(a, name: str) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.ndim != 2:
        raise ValueError(f"{name} must be a matrix, got ndim={a.ndim}")
    return a


def _as_vector(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float).reshape(-1)
    return a


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class AffineSystem:
    """Affine constraint system ``M_ub @ x <= g_ub`` and ``M_eq @ x == g_eq``.

    Row counts must match the right-hand sides and every entry must be
    finite.  Instances are immutable (array buffers are marked read-only)
    and safe to share across concurrent solver runs.
    """

    M_ub: np.ndarray
    g_ub: np.ndarray
    M_eq: np.ndarray | None = None
    g_eq: np.ndarray | None = None

    def __post_init__(self):
        M_ub = _as_matrix(self.M_ub, "M_ub")
        g_ub = _as_vector(self.g_ub, "g_ub")
        if M_ub.shape[0] != g_ub.shape[0]:
            raise ValueError(
                f"M_ub has {M_ub.shape[0]} rows but g_ub has {g_ub.shape[0]} entries"
            )
        if not (np.isfinite(M_ub).all() and np.isfinite(g_ub).all()):
            raise ValueError("M_ub/g_ub entries must be finite")
        object.__setattr__(self, "M_ub", _frozen(M_ub))
        object.__setattr__(self, "g_ub", _frozen(g_ub))
        if self.M_eq is None:
            object.__setattr__(self, "M_eq", None)
            object.__setattr__(self, "g_eq", None)
            return
        M_eq = _as_matrix(self.M_eq, "M_eq")
        g_eq = _as_vector(self.g_eq if self.g_eq is not None else [], "g_eq")
        if M_eq.shape[0] != g_eq.shape[0]:
            raise ValueError(
                f"M_eq has {M_eq.shape[0]} rows but g_eq has {g_eq.shape[0]} entries"
            )
        if M_eq.shape[1] != M_ub.shape[1]:
            raise ValueError(
                f"M_eq has {M_eq.shape[1]} columns but M_ub has {M_ub.shape[1]}"
            )
        if not (np.isfinite(M_eq).all() and np.isfinite(g_eq).all()):
            raise ValueError("M_eq/g_eq entries must be finite")
        object.__setattr__(self, "M_eq", _frozen(M_eq))
        object.__setattr__(self, "g_eq", _frozen(g_eq))

    @property
    def n_vars(self) -> int:
        return self.M_ub.shape[1]

    @property
    def n_ub(self) -> int:
        return self.M_ub.shape[0]

    @property
    def n_eq(self) -> int:
        return 0 if self.M_eq is None else self.M_eq.shape[0]

    def violation(self, x: np.ndarray) -> float:
        """Largest constraint violation at ``x`` (0 when feasible)."""
        x = np.asarray(x, dtype=float)
        v = 0.0
        if self.n_ub:
            v = max(v, float(np.max(self.M_ub @ x - self.g_ub, initial=0.0)))
        if self.n_eq:
            v = max(v, float(np.max(np.abs(self.M_eq @ x - self.g_eq), initial=0.0)))
        return v

    def contains(self, x: np.ndarray, tol: float = FEAS_TOL) -> bool:
        return self.violation(x) <= tol


class LPStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LPSolution:
    """Outcome of :func:`solve_lp`.

    For an ``OPTIMAL`` result, ``x`` is a vertex and ``dual_ub``/``dual_eq``
    is a basic dual solution satisfying

    ``cost + M_ub.T @ dual_ub + M_eq.T @ dual_eq == 0``, ``dual_ub >= 0``,

    with complementary slackness and ``objective == -g_ub @ dual_ub
    - g_eq @ dual_eq`` (strong duality).  ``basis`` holds the basic column
    indices of the internal standard form (positive parts, negative parts,
    then slacks); it is deterministic for fixed input.
    """

    status: LPStatus
    x: np.ndarray | None = None
    objective: float = np.nan
    dual_ub: np.ndarray | None = None
    dual_eq: np.ndarray | None = None
    basis: tuple[int, ...] = ()


class QPStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class QPSolution:
    """Outcome of :func:`solve_qp`.

    ``multipliers`` spans all inequality rows (zero off the active set) and
    satisfies ``Q @ x + q + M_ub.T @ multipliers + M_eq.T @ multipliers_eq
    == 0`` within 1e-8 for an ``OPTIMAL`` result.
    """

    status: QPStatus
    x: np.ndarray | None = None
    objective: float = np.nan
    active_set: tuple[int, ...] = ()
    multipliers: np.ndarray | None = None
    multipliers_eq: np.ndarray | None = None


@dataclass
class _CoreResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None
    objective: float
    duals: np.ndarray | None  # per original row; objective == duals @ b
    basis: tuple[int, ...]


def _pivot_loop(A, b, c, basis, Binv, xB):
    """Run Bland-rule simplex pivots in place; return final status.

    ``basis`` is mutated.  Entering column: smallest index with reduced cost
    below ``-1e-10``.  Leaving row: minimum ratio, ties broken by smallest
    basic-variable index.  A column whose candidate pivots are all positive
    but below 1e-12 raises :class:`NumericalDegeneracyError` rather than
    declaring unboundedness.
    """
    since_refactor = 0
    for _ in range(_MAX_PIVOTS):
        y = Binv.T @ c[basis]
        r = c - y @ A
        r[basis] = 0.0
        neg = np.flatnonzero(r < -_RCOST_TOL)
        if neg.size == 0:
            return "optimal", Binv, xB
        j = int(neg[0])
        d = Binv @ A[:, j]
        elig = np.flatnonzero(d > PIVOT_TOL)
        if elig.size == 0:
            if np.any(d > 0.0):
                raise NumericalDegeneracyError(
                    "all candidate pivots are below 1e-12"
                )
            return "unbounded", Binv, xB
        ratios = xB[elig] / d[elig]
        rmin = float(ratios.min())
        tie = elig[ratios <= rmin + 1e-12]
        leave = int(tie[np.argmin(np.asarray(basis)[tie])])
        piv = d[leave]
        if abs(piv) < PIVOT_TOL:
            raise NumericalDegeneracyError("pivot magnitude below 1e-12")
        theta = xB[leave] / piv
        xB -= theta * d
        xB[leave] = theta
        erow = Binv[leave] / piv
        Binv = Binv - np.outer(d, erow)
        Binv[leave] = erow
        basis[leave] = j
        since_refactor += 1
        if since_refactor >= _REFACTOR_EVERY:
            Binv = np.linalg.inv(A[:, basis])
            xB = Binv @ b
            np.maximum(xB, 0.0, out=xB)
            since_refactor = 0
    raise NumericalDegeneracyError("simplex iteration cap exceeded")


def _standard_simplex(cost, A, b) -> _CoreResult:
    """Solve ``min cost @ v  s.t.  A @ v == b, v >= 0`` (two-phase simplex).

    Returns row multipliers ``duals`` with ``cost - A.T @ duals >= 0`` and
    ``objective == duals @ b`` at optimality.  Redundant equality rows found
    in phase one are dropped; their multipliers are reported as zero.
    """
    cost = np.asarray(cost, dtype=float).reshape(-1)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).reshape(-1)
    m, n = A.shape
    if m == 0:
        if np.any(cost < -_RCOST_TOL):
            return _CoreResult("unbounded", None, -np.inf, None, ())
        return _CoreResult("optimal", np.zeros(n), 0.0, np.zeros(0), ())

    sign = np.where(b < 0.0, -1.0, 1.0)
    A = A * sign[:, None]
    b = b * sign
    row_ids = np.arange(m)

    # Rows covered by a unit column start from it; the rest get artificials.
    basis = np.full(m, -1, dtype=int)
    col_nnz = (np.abs(A) > 0.0).sum(axis=0)
    for j in np.flatnonzero(col_nnz == 1):
        i = int(np.argmax(np.abs(A[:, j])))
        if basis[i] < 0 and abs(A[i, j] - 1.0) < 1e-14:
            basis[i] = j
    need_art = np.flatnonzero(basis < 0)

    if need_art.size:
        A1 = np.hstack([A, np.zeros((m, need_art.size))])
        for k, i in enumerate(need_art):
            A1[i, n + k] = 1.0
            basis[i] = n + k
        c1 = np.zeros(n + need_art.size)
        c1[n:] = 1.0
        basis = list(basis)
        Binv = np.linalg.inv(A1[:, basis])
        xB = Binv @ b
        status, Binv, xB = _pivot_loop(A1, b, c1, basis, Binv, xB)
        if status != "optimal":  # pragma: no cover - phase 1 is bounded below
            raise NumericalDegeneracyError("phase-1 terminated abnormally")
        if float(c1[basis] @ xB) > FEAS_TOL * max(1.0, float(np.abs(b).max())):
            return _CoreResult("infeasible", None, np.nan, None, ())
        # Drive leftover artificials out of the basis or drop redundant rows.
        while True:
            art_rows = [i for i in range(len(basis)) if basis[i] >= n]
            if not art_rows:
                break
            i = art_rows[0]
            dr = Binv[i] @ A
            in_basis = set(basis)
            cand = [
                j for j in np.flatnonzero(np.abs(dr) > 1e-9) if j not in in_basis
            ]
            if cand:
                j = int(cand[0])
                d = Binv @ A[:, j]
                piv = d[i]
                theta = xB[i] / piv
                xB -= theta * d
                xB[i] = theta
                erow = Binv[i] / piv
                Binv = Binv - np.outer(d, erow)
                Binv[i] = erow
                basis[i] = j
            else:
                A = np.delete(A, i, axis=0)
                A1 = np.delete(A1, i, axis=0)
                b = np.delete(b, i)
                sign = np.delete(sign, i)
                row_ids = np.delete(row_ids, i)
                basis = [bv for k, bv in enumerate(basis) if k != i]
                Binv = np.linalg.inv(A[:, basis])
                xB = Binv @ b
        basis = list(basis)
    else:
        basis = list(basis)
        Binv = np.linalg.inv(A[:, basis])
        xB = Binv @ b

    status, Binv, xB = _pivot_loop(A, b, cost, basis, Binv, xB)
    if status == "unbounded":
        return _CoreResult("unbounded", None, -np.inf, None, ())

    x = np.zeros(n)
    x[basis] = np.maximum(xB, 0.0)
    y = Binv.T @ cost[basis]
    duals = np.zeros(m)
    duals[row_ids] = sign * y
    objective = float(cost @ x)
    return _CoreResult("optimal", x, objective, duals, tuple(int(j) for j in basis))


def _solve_nonneg_lp(cost, A_eq, b_eq) -> _CoreResult:
    """``min cost @ v  s.t.  A_eq @ v == b_eq, v >= 0`` via the simplex core."""
    return _standard_simplex(cost, A_eq, b_eq)


def solve_lp(cost: np.ndarray, sys: AffineSystem) -> LPSolution:
    """Minimize ``cost @ x`` over an :class:`AffineSystem` with free variables.

    Parameters
    ----------
    cost : array, shape (n,)
    sys : AffineSystem
        ``M_ub @ x <= g_ub`` and optionally ``M_eq @ x == g_eq``.

    Returns
    -------
    LPSolution
        ``status`` is ``INFEASIBLE``/``UNBOUNDED`` for those outcomes (they
        are results, not errors); at ``OPTIMAL`` both a primal vertex and a
        basic dual solution are populated.

    Raises
    ------
    NumericalDegeneracyError
        If a pivot falls below 1e-12 after the Bland fallback.
    """
    cost = _as_vector(cost, "cost")
    nv = sys.n_vars
    if cost.shape[0] != nv:
        raise ValueError(f"cost has {cost.shape[0]} entries, expected {nv}")
    mu, me = sys.n_ub, sys.n_eq

    # Standard form: x = xp - xn with xp, xn >= 0 and slacks on <= rows.
    blocks = [np.hstack([sys.M_ub, -sys.M_ub, np.eye(mu)])]
    rhs = [sys.g_ub]
    if me:
        blocks.append(np.hstack([sys.M_eq, -sys.M_eq, np.zeros((me, mu))]))
        rhs.append(sys.g_eq)
    A = np.vstack(blocks) if blocks else np.zeros((0, 2 * nv + mu))
    b = np.concatenate(rhs) if rhs else np.zeros(0)
    c = np.concatenate([cost, -cost, np.zeros(mu)])

    res = _standard_simplex(c, A, b)
    if res.status == "infeasible":
        return LPSolution(LPStatus.INFEASIBLE)
    if res.status == "unbounded":
        return LPSolution(LPStatus.UNBOUNDED)

    x = res.x[:nv] - res.x[nv : 2 * nv]
    dual_ub = np.maximum(-res.duals[:mu], 0.0)
    dual_eq = -res.duals[mu:]
    return LPSolution(
        LPStatus.OPTIMAL,
        x=x,
        objective=float(cost @ x),
        dual_ub=dual_ub,
        dual_eq=dual_eq,
        basis=res.basis,
    )


def _spd_check(Q: np.ndarray) -> None:
    if not np.allclose(Q, Q.T, atol=1e-10, rtol=0.0):
        raise NotSPDError("quadratic form is not symmetric")
    lam_min = float(np.linalg.eigvalsh(Q)[0])
    if lam_min <= 1e-10:
        raise NotSPDError(f"smallest eigenvalue estimate {lam_min:.3e} <= 1e-10")


def solve_qp(
    Q: np.ndarray,
    q: np.ndarray,
    sys: AffineSystem,
    x0: np.ndarray | None = None,
) -> QPSolution:
    """Minimize ``0.5 x@Q@x + q@x`` over an :class:`AffineSystem`.

    Primal active-set method for symmetric positive definite ``Q``.  A
    feasible start is found by a zero-cost LP when ``x0`` is absent or
    infeasible; passing a known-feasible ``x0`` skips that solve.  The
    unique minimizer is returned with KKT residual at most 1e-8.

    Raises
    ------
    NotSPDError
        If ``Q`` fails the positive-definiteness check.
    """
    Q = _as_matrix(Q, "Q")
    q = _as_vector(q, "q")
    n = sys.n_vars
    if Q.shape != (n, n) or q.shape[0] != n:
        raise ValueError("Q/q dimensions do not match the constraint system")
    _spd_check(Q)

    if x0 is None or not sys.contains(np.asarray(x0, dtype=float)):
        feas = solve_lp(np.zeros(n), sys)
        if feas.status is not LPStatus.OPTIMAL:
            return QPSolution(QPStatus.INFEASIBLE)
        x = feas.x.copy()
    else:
        x = np.array(x0, dtype=float)

    M, g = sys.M_ub, sys.g_ub
    me = sys.n_eq
    working: list[int] = []  # active inequality rows; equalities always active
    lam_w = np.zeros(0)
    cap = 100 * (sys.n_ub + me + n) + 1000
    for _ in range(cap):
        row_blocks = []
        rhs_blocks = []
        if me:
            row_blocks.append(sys.M_eq)
            rhs_blocks.append(sys.g_eq)
        if working:
            row_blocks.append(M[working])
            rhs_blocks.append(g[working])
        MW = np.vstack(row_blocks) if row_blocks else np.zeros((0, n))
        gW = np.concatenate(rhs_blocks) if rhs_blocks else np.zeros(0)
        k = MW.shape[0]
        K = np.zeros((n + k, n + k))
        K[:n, :n] = Q
        K[:n, n:] = MW.T
        K[n:, :n] = MW
        rhs = np.concatenate([-(Q @ x + q), gW - MW @ x])
        try:
            sol = np.linalg.solve(K, rhs)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - guarded adds
            raise NumericalDegeneracyError(f"singular KKT system: {exc}")
        p = sol[:n]
        lam_w = sol[n:]

        if float(np.max(np.abs(p), initial=0.0)) <= 1e-11:
            lam_ineq = lam_w[me:]
            if lam_ineq.size == 0 or float(lam_ineq.min()) >= -1e-9:
                x = x + p
                mult = np.zeros(sys.n_ub)
                if working:
                    mult[working] = np.maximum(lam_ineq, 0.0)
                obj = float(0.5 * x @ Q @ x + q @ x)
                return QPSolution(
                    QPStatus.OPTIMAL,
                    x=x,
                    objective=obj,
                    active_set=tuple(sorted(working)),
                    multipliers=mult,
                    multipliers_eq=lam_w[:me] if me else np.zeros(0),
                )
            drop = int(np.argmin(lam_ineq))
            working.pop(drop)
            continue

        # Ratio test against rows not in the working set.
        alpha = 1.0
        block = -1
        if sys.n_ub:
            mask = np.ones(sys.n_ub, dtype=bool)
            mask[working] = False
            Mp = M[mask] @ p
            slack = g[mask] - M[mask] @ x
            idx = np.flatnonzero(mask)
            for loc in np.flatnonzero(Mp > PIVOT_TOL):
                ratio = max(slack[loc], 0.0) / Mp[loc]
                if ratio < alpha - 1e-14:
                    alpha = ratio
                    block = int(idx[loc])
        x = x + alpha * p
        if block >= 0:
            working.append(block)
            working.sort()
    raise NumericalDegeneracyError("active-set iteration cap exceeded")


def project_polyhedron(w0: np.ndarray, sys: AffineSystem) -> np.ndarray:
    """Euclidean projection of ``w0`` onto a nonempty :class:`AffineSystem`.

    Solved as the strongly convex QP ``min 0.5||x||^2 - w0 @ x``; idempotent
    up to solver tolerance.

    Raises
    ------
    InfeasiblePolyhedronError
        If the polyhedron is empty.
    """
    w0 = _as_vector(w0, "w0")
    start = w0 if sys.contains(w0) else None
    sol = solve_qp(np.eye(sys.n_vars), -w0, sys, x0=start)
    if sol.status is not QPStatus.OPTIMAL:
        raise InfeasiblePolyhedronError("projection target polyhedron is empty")
    return sol.x
