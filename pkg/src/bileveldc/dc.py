"""Difference-of-convex machinery for the penalized bilevel objective.

The penalized objective ``f(x, y) + sigma * (c @ y - theta(x))`` splits as
``g - h`` with

``g(w) = 0.5 w @ (Q + rho I) @ w + (q + sigma c_pad) @ w``
``h(w) = 0.5 rho ||w||^2 + sigma * theta(x)``,

where ``rho = max(0, -lambda_min(Q)) + 1`` makes both parts strongly convex
and ``c_pad`` pads the lower-level cost with zeros on the ``x`` block.  Each
inner iteration linearizes ``h`` at the current iterate ``w`` through the
subgradient ``rho w + sigma (A.T lam, 0)`` and solves one strongly convex QP
over the coupled polyhedron.  The boosted variant then extrapolates along
``z - w`` with a backtracking line search, which must keep the trial points
inside the polyhedron since the search direction leaves the segment between
the iterates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasiblePolyhedronError, InfeasibleStartError
from .subsolvers import AffineSystem, QPStatus, solve_qp
from .value_function import ValueEval, eval_value

__all__ = [
    "QuadObjective",
    "DCDecomposition",
    "TraceEntry",
    "DCState",
    "dc_split",
    "dc_subproblem",
    "boosted_line_search",
    "solve_dc",
]

LINE_SEARCH_STEP0 = 1.0
LINE_SEARCH_DECREASE = 1e-2
LINE_SEARCH_BACKTRACK = 1e-1
LINE_SEARCH_TRIALS = 10


@dataclass(frozen=True)
class QuadObjective:
    """Quadratic ``0.5 w @ Q @ w + q @ w + const`` over the joint variables."""

    Q: np.ndarray
    q: np.ndarray
    const: float = 0.0

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, float))
        q = np.asarray(self.q, float).reshape(-1)
        if Q.shape != (q.shape[0], q.shape[0]):
            raise ValueError(f"Q shape {Q.shape} does not match q length {q.shape[0]}")
        if float(np.max(np.abs(Q - Q.T), initial=0.0)) > 1e-12:
            raise ValueError("Q must be symmetric within 1e-12")
        Q.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "q", q)

    @property
    def dim(self) -> int:
        return self.q.shape[0]

    def value(self, w: np.ndarray) -> float:
        w = np.asarray(w, float)
        return float(0.5 * w @ self.Q @ w + self.q @ w + self.const)

    def gradient(self, w: np.ndarray) -> np.ndarray:
        return self.Q @ np.asarray(w, float) + self.q


@dataclass(frozen=True)
class DCDecomposition:
    """Convex-part data of the split; ``rho`` is the spectral shift.

    ``Q_g``/``q_g`` define the smooth strongly convex part ``g``; at
    ``sigma > 0`` the linear term already contains the ``sigma * c @ y``
    penalty.  Use :meth:`with_penalty` on the ``sigma == 0`` base to attach
    a penalty weight.
    """

    Q_g: np.ndarray
    q_g: np.ndarray
    rho: float
    sigma: float = 0.0

    def with_penalty(self, sigma: float, c_pad: np.ndarray) -> "DCDecomposition":
        """Return the decomposition of the objective penalized with ``sigma``."""
        if self.sigma != 0.0:
            raise ValueError("with_penalty must be called on the sigma == 0 base")
        if sigma < 0.0:
            raise ValueError("penalty weight must be nonnegative")
        return DCDecomposition(self.Q_g, self.q_g + sigma * c_pad, self.rho, sigma)

    def g_value(self, w: np.ndarray) -> float:
        w = np.asarray(w, float)
        return float(0.5 * w @ self.Q_g @ w + self.q_g @ w)


@dataclass(frozen=True)
class TraceEntry:
    """One inner iteration: accepted iterate, objective, and step data."""

    w: np.ndarray
    objective: float
    step: float
    z: np.ndarray
    phi_z: float
    d_norm: float


@dataclass(frozen=True)
class DCState:
    """Result of one inner DC solve at a fixed penalty weight."""

    w: np.ndarray
    trace: list[TraceEntry] = field(default_factory=list)
    iterations: int = 0
    sigma: float = 0.0


def dc_split(obj: QuadObjective) -> DCDecomposition:
    """Split a quadratic into strongly convex parts by a spectral shift.

    ``rho = max(0, -lambda_min(Q)) + 1`` (symmetric eigensolve), so both
    ``Q + rho I`` and ``rho I`` have smallest eigenvalue at least one.
    """
    lam_min = float(np.linalg.eigvalsh(obj.Q)[0]) if obj.dim else 0.0
    rho = max(0.0, -lam_min) + 1.0
    Q_g = obj.Q + rho * np.eye(obj.dim)
    return DCDecomposition(Q_g, obj.q.copy(), rho)


def dc_subproblem(
    dec: DCDecomposition,
    xi: np.ndarray,
    sys: AffineSystem,
    x0: np.ndarray | None = None,
) -> np.ndarray:
    """Minimizer of ``g(w) - xi @ w`` over the polyhedron.

    ``xi`` is the subgradient of the concave part at the current iterate,
    ``rho w + sigma (A.T lam, 0)``.  The minimizer is unique because ``g``
    is strongly convex.
    """
    sol = solve_qp(dec.Q_g, dec.q_g - np.asarray(xi, float), sys, x0=x0)
    if sol.status is not QPStatus.OPTIMAL:
        raise InfeasiblePolyhedronError("DC subproblem polyhedron is empty")
    return sol.x


def boosted_line_search(
    phi,
    z: np.ndarray,
    d: np.ndarray,
    sys: AffineSystem,
    *,
    step0: float = LINE_SEARCH_STEP0,
    decrease: float = LINE_SEARCH_DECREASE,
    backtrack: float = LINE_SEARCH_BACKTRACK,
    max_trials: int = LINE_SEARCH_TRIALS,
    phi_at_z: float | None = None,
) -> float:
    """Backtracking search along ``d`` from ``z``; returns the accepted step.

    The largest step in ``{step0 * backtrack**j}`` whose trial point stays
    inside the polyhedron and satisfies the sufficient decrease

    ``phi(z + step d) <= phi(z) - decrease * step**2 * ||d||**2``

    is returned, or ``0.0`` after ``max_trials`` rejections or for a
    negligible direction (step ``0`` reduces to the classical update).
    Every trial costs one value-function LP through ``phi``.
    """
    d = np.asarray(d, float)
    dn2 = float(d @ d)
    if dn2 <= 1e-24:
        return 0.0
    if phi_at_z is None:
        phi_at_z = phi(z)
    step = step0
    for _ in range(max_trials):
        trial = z + step * d
        if sys.contains(trial) and phi(trial) <= phi_at_z - decrease * step * step * dn2:
            return step
        step *= backtrack
    return 0.0


def solve_dc(
    instance,
    dec: DCDecomposition,
    start: np.ndarray,
    variant: str = "classical",
    *,
    inner_tol: float = 1e-4,
    max_iterations: int = 100,
) -> DCState:
    """Inner DC loop for the penalized objective at ``dec.sigma``.

    Iterates ``z = argmin { g(w) - xi @ w }`` from the feasible ``start``
    until ``||z - w|| <= inner_tol`` or the iteration cap; the ``boosted``
    variant additionally extrapolates along ``z - w``.  The classical
    variant has a nonincreasing objective trace; every iterate is feasible
    for the coupled polyhedron.
    """
    if variant not in ("classical", "boosted"):
        raise ValueError(f"unknown variant {variant!r}")
    sys = instance.coupled_system()
    ll = instance.lower_level
    obj = instance.upper_objective
    n = instance.n
    w = np.asarray(start, float).copy()
    if not sys.contains(w, 1e-9):
        raise InfeasibleStartError(
            f"inner start violates the polyhedron by {sys.violation(w):.3e}"
        )

    cache: dict[bytes, ValueEval] = {}

    def value_at(x: np.ndarray) -> ValueEval:
        key = x.tobytes()
        ev = cache.get(key)
        if ev is None:
            ev = eval_value(ll, x)
            cache[key] = ev
        return ev

    def phi(point: np.ndarray) -> float:
        # Line-search trials may extrapolate a hair past the domain of the
        # value function; such trials read as +inf and get rejected.
        ev = value_at(point[:n])
        if not ev.finite:
            return np.inf
        return obj.value(point) + dec.sigma * (float(ll.c @ point[n:]) - ev.value)

    trace: list[TraceEntry] = []
    zeros_y = np.zeros(instance.m)
    for _ in range(max_iterations):
        ev = value_at(w[:n])
        if not ev.finite:
            raise InfeasibleStartError(
                "iterate left the domain of the value function"
            )
        xi = dec.rho * w + dec.sigma * np.concatenate([ll.A.T @ ev.dual, zeros_y])
        z = dc_subproblem(dec, xi, sys, x0=w)
        d = z - w
        d_norm = float(np.linalg.norm(d))
        phi_z = phi(z)
        if d_norm <= inner_tol:
            trace.append(TraceEntry(z, phi_z, 0.0, z, phi_z, d_norm))
            w = z
            break
        if variant == "boosted":
            step = boosted_line_search(phi, z, d, sys, phi_at_z=phi_z)
        else:
            step = 0.0
        w = z + step * d if step > 0.0 else z
        trace.append(
            TraceEntry(w, phi(w) if step > 0.0 else phi_z, step, z, phi_z, d_norm)
        )
    return DCState(w=w, trace=trace, iterations=len(trace), sigma=dec.sigma)
