"""Outer penalty loop in three flavors: PBDC, PDC, and PDG.

All three drive the weight of the duality-gap penalty ``sigma * (c @ y -
theta(x))`` up geometrically and stop once the current iterate is lower-level
optimal up to tolerance.  PBDC and PDC solve each penalized subproblem with
the boosted respectively classical DC inner loop; PDG instead works on the
explicit bilinear reformulation whose extra variable ``u`` is a lower-level
dual vector, solved here by deterministic alternating convex search.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .dc import DCState, dc_split, solve_dc
from .errors import DualInfeasibleError, InfeasibleStartError
from .stationarity import StationarityCertificate, stationarity_residual
from .subsolvers import AffineSystem, QPStatus, solve_qp, _solve_nonneg_lp
from .value_function import duality_gap, eval_value, lower_level_solve

__all__ = [
    "Method",
    "PenaltyParams",
    "RunReport",
    "PdgStep",
    "init_dual",
    "pdg_subproblem",
    "run_penalty",
]


class Method(str, Enum):
    PBDC = "pbdc"  # penalty + boosted DC inner solver
    PDC = "pdc"  # penalty + classical DC inner solver
    PDG = "pdg"  # penalty on the explicit duality-gap reformulation

    @classmethod
    def parse(cls, value) -> "Method":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


@dataclass(frozen=True)
class PenaltyParams:
    """Outer/inner loop controls; defaults follow the benchmark setup."""

    sigma0: float = 1.0
    gamma: float = 1.2
    outer_tol: float = 1e-7  # on |c @ (y - y_s)|
    outer_cap: int = 200
    inner_cap: int = 100
    inner_tol: float = 1e-4  # on ||z - w||

    def __post_init__(self):
        if self.sigma0 <= 0.0:
            raise ValueError("sigma0 must be positive")
        if self.gamma <= 1.0:
            raise ValueError("gamma must exceed 1")


@dataclass
class RunReport:
    """Per-run record of a penalty solve."""

    method: Method
    start: np.ndarray
    final_x: np.ndarray | None
    final_y: np.ndarray | None
    final_value: float
    outer_iters: int
    total_inner_iters: int
    final_gap: float
    stationarity_residual: float
    terminated: bool
    sigma_final: float
    wall_time: float  # seconds
    certificate: StationarityCertificate | None = None
    inner_traces: list[DCState] = field(default_factory=list, repr=False)

    @property
    def final_point(self) -> np.ndarray | None:
        if self.final_x is None:
            return None
        return np.concatenate([self.final_x, self.final_y])


def init_dual(instance) -> np.ndarray:
    """Dual-feasible start ``argmin { 1 @ u : B.T u = -c, u >= 0 }``."""
    res = _solve_nonneg_lp(np.ones(instance.p), instance.B.T, -instance.c)
    if res.status != "optimal":
        raise DualInfeasibleError(
            "lower-level dual polyhedron {u : B.T u = -c, u >= 0} is empty"
        )
    return res.x


@dataclass(frozen=True)
class PdgStep:
    """One outer PDG subproblem solve: new primal/dual point and counters."""

    x: np.ndarray
    y: np.ndarray
    u: np.ndarray
    alternations: int
    objective: float


def pdg_subproblem(instance, sigma: float, warm) -> PdgStep:
    """Approximate stationary point of the bilinear penalty subproblem.

    Alternates (i) a strongly convex QP in ``(x, y)`` over the coupled
    polyhedron (objective plus ``sigma * (c @ y - (Ax - b) @ u)`` and a
    proximal ``0.5 ||w - w_prev||^2`` term that keeps fixed points fixed)
    with (ii) the LP in ``u`` maximizing ``(Ax - b) @ u`` over the dual
    polyhedron, until the true objective changes by at most 1e-8 or 50
    alternations.  Each half-step is an exact convex minimization, so the
    objective is nonincreasing across alternations.
    """
    x, y, u = (np.asarray(v, float).copy() for v in warm)
    dual_resid = float(np.max(np.abs(instance.B.T @ u + instance.c)))
    if dual_resid > 1e-6 or float(u.min(initial=0.0)) < -1e-9:
        raise ValueError(f"warm u is not dual feasible (residual {dual_resid:.3e})")
    sys = instance.coupled_system()
    obj = instance.upper_objective
    n = instance.n
    w = np.concatenate([x, y])

    lam_min = float(np.linalg.eigvalsh(obj.Q)[0])
    prox = max(1.0, 1.0 - lam_min)
    Q_step = obj.Q + prox * np.eye(obj.dim)

    def true_objective(w, u):
        ax_b = instance.A @ w[:n] - instance.b
        return obj.value(w) + sigma * (float(instance.c @ w[n:]) - float(ax_b @ u))

    f_prev = true_objective(w, u)
    alts = 0
    for _ in range(50):
        # (i) primal block: QP in (x, y) with u frozen.
        lin_u = np.concatenate([-sigma * (instance.A.T @ u), np.zeros(instance.m)])
        q_step = obj.q + sigma * instance.c_padded + lin_u - prox * w
        sol = solve_qp(Q_step, q_step, sys, x0=w)
        if sol.status is not QPStatus.OPTIMAL:  # pragma: no cover - sys nonempty
            raise InfeasibleStartError("coupled polyhedron unexpectedly empty")
        w = sol.x
        # (ii) dual block: the lower-level dual LP at the new x.
        ev = eval_value(instance.lower_level, w[:n])
        u = ev.dual
        alts += 1
        f_now = true_objective(w, u)
        if abs(f_prev - f_now) <= 1e-8:
            f_prev = f_now
            break
        f_prev = f_now
    return PdgStep(w[:n], w[n:], u, alts, f_prev)


def run_penalty(instance, start, method, params: PenaltyParams | None = None) -> RunReport:
    """Drive the outer penalty loop from a feasible start.

    Each outer iteration solves the penalized subproblem warm-started at the
    previous iterate, tests lower-level optimality through an independent
    lower-level solve, and grows ``sigma`` geometrically otherwise.  The
    report carries the final point, counters, the recomputed duality gap and
    a stationarity certificate.  ``terminated`` is False only when the outer
    cap was exhausted.
    """
    params = params or PenaltyParams()
    method = Method.parse(method)
    start = np.asarray(start, float).reshape(-1)
    sys = instance.coupled_system()
    if start.shape[0] != instance.n + instance.m:
        raise ValueError(
            f"start has {start.shape[0]} entries, expected {instance.n + instance.m}"
        )
    if not sys.contains(start, 1e-9):
        raise InfeasibleStartError(
            f"start violates the coupled polyhedron by {sys.violation(start):.3e}"
        )

    t0 = time.perf_counter()
    ll = instance.lower_level
    n = instance.n
    w = start.copy()
    u = init_dual(instance) if method is Method.PDG else None
    base = None if method is Method.PDG else dc_split(instance.upper_objective)

    traces: list[DCState] = []
    inner_total = 0
    outer = 0
    sigma = params.sigma0
    terminated = False
    for k in range(params.outer_cap):
        sigma = params.sigma0 * params.gamma**k
        if method is Method.PDG:
            step = pdg_subproblem(instance, sigma, (w[:n], w[n:], u))
            w = np.concatenate([step.x, step.y])
            u = step.u
            inner_total += step.alternations
        else:
            dec = base.with_penalty(sigma, instance.c_padded)
            variant = "boosted" if method is Method.PBDC else "classical"
            state = solve_dc(
                instance,
                dec,
                w,
                variant=variant,
                inner_tol=params.inner_tol,
                max_iterations=params.inner_cap,
            )
            w = state.w
            traces.append(state)
            inner_total += state.iterations
        outer = k + 1
        y_s = lower_level_solve(ll, w[:n])
        if abs(float(ll.c @ (w[n:] - y_s))) <= params.outer_tol:
            if method is not Method.PDG:
                # Refine to a near-exact DC fixed point at the final weight;
                # the inner tolerance 1e-4 alone leaves a gradient residual
                # of the same order, too coarse for certification.
                dec = base.with_penalty(sigma, instance.c_padded)
                state = solve_dc(
                    instance, dec, w, variant="classical",
                    inner_tol=1e-10, max_iterations=50,
                )
                w = state.w
                traces.append(state)
                inner_total += state.iterations
                y_s = lower_level_solve(ll, w[:n])
                if abs(float(ll.c @ (w[n:] - y_s))) > params.outer_tol:
                    continue
            terminated = True
            break

    gap = abs(duality_gap(ll, w[:n], w[n:]))
    cert = stationarity_residual(instance, w[:n], w[n:])
    return RunReport(
        method=method,
        start=start,
        final_x=w[:n],
        final_y=w[n:],
        final_value=instance.upper_objective.value(w),
        outer_iters=outer,
        total_inner_iters=inner_total,
        final_gap=gap,
        stationarity_residual=cert.residual,
        terminated=terminated,
        sigma_final=sigma,
        wall_time=time.perf_counter() - t0,
        certificate=cert,
        inner_traces=traces,
    )
