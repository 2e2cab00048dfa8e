"""Oracle for the optimal value function of a parametric lower-level LP.

For ``theta(x) = min_y { c @ y : A @ x + B @ y <= b }`` the function is
convex and piecewise affine in ``x``, and any optimal dual vector ``lam``
(a solution of ``max { (A @ x - b) @ lam : B.T @ lam = -c, lam >= 0 }``)
yields the subgradient ``A.T @ lam``.  The oracle therefore solves the dual
LP directly: its variables are natively sign-constrained, which keeps the
simplex standard form small, and an optimal primal ``y`` falls out of the
dual solution's row multipliers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DomainError,
    InfeasiblePointError,
    LowerLevelInfeasibleError,
    LowerLevelUnboundedError,
)
from .subsolvers import AffineSystem, LPStatus, _solve_nonneg_lp, solve_lp

__all__ = [
    "LowerLevel",
    "ValueEval",
    "eval_value",
    "value_subgradient",
    "lower_level_solve",
    "duality_gap",
]


@dataclass(frozen=True)
class LowerLevel:
    """Data ``(A, B, b, c)`` of the lower-level LP ``min c@y, Ax + By <= b``."""

    A: np.ndarray
    B: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, float))
        B = np.atleast_2d(np.asarray(self.B, float))
        b = np.asarray(self.b, float).reshape(-1)
        c = np.asarray(self.c, float).reshape(-1)
        if A.shape[0] != B.shape[0] or A.shape[0] != b.shape[0]:
            raise ValueError(
                f"row mismatch: A {A.shape}, B {B.shape}, b {b.shape}"
            )
        if B.shape[1] != c.shape[0]:
            raise ValueError(f"B has {B.shape[1]} columns but c has {c.shape[0]}")
        for name, arr in (("A", A), ("B", B), ("b", b), ("c", c)):
            if not np.isfinite(arr).all():
                raise ValueError(f"{name} entries must be finite")
            arr.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def n_params(self) -> int:
        return self.A.shape[1]

    @property
    def n_vars(self) -> int:
        return self.B.shape[1]

    @property
    def n_rows(self) -> int:
        return self.b.shape[0]

    def system_at(self, x: np.ndarray) -> AffineSystem:
        """Feasible set in ``y`` for fixed parameter ``x``."""
        return AffineSystem(self.B, self.b - self.A @ np.asarray(x, float))


@dataclass(frozen=True)
class ValueEval:
    """Value-function evaluation at one parameter.

    ``finite`` is the authoritative flag for ``+inf`` (the value is never a
    floating sentinel).  When finite, ``dual`` is a dual vertex with
    ``B.T @ dual == -c``, ``dual >= 0``, and
    ``value == c @ y_opt == (A @ x - b) @ dual`` within 1e-8.
    """

    finite: bool
    value: float | None = None
    dual: np.ndarray | None = None
    y_opt: np.ndarray | None = None


def eval_value(ll: LowerLevel, x: np.ndarray) -> ValueEval:
    """Evaluate the lower-level optimal value at parameter ``x``.

    Returns an infinite :class:`ValueEval` exactly when the lower level is
    infeasible at ``x``.

    Raises
    ------
    LowerLevelUnboundedError
        If the lower level is unbounded below at ``x`` (the coupled
        feasible region fails the compactness assumption).
    """
    x = np.asarray(x, float).reshape(-1)
    if x.shape[0] != ll.n_params:
        raise ValueError(f"x has {x.shape[0]} entries, expected {ll.n_params}")
    # Dual LP: min (b - A x) @ lam  s.t.  B.T lam = -c, lam >= 0.
    res = _solve_nonneg_lp(ll.b - ll.A @ x, ll.B.T, -ll.c)
    if res.status == "optimal":
        lam = res.x
        y = res.duals
        return ValueEval(True, value=-res.objective, dual=lam, y_opt=y)
    if res.status == "unbounded":
        # Unbounded dual == infeasible primal.
        return ValueEval(False)
    # Empty dual polyhedron: the primal is unbounded wherever it is feasible.
    primal = solve_lp(ll.c, ll.system_at(x))
    if primal.status is LPStatus.INFEASIBLE:
        return ValueEval(False)
    raise LowerLevelUnboundedError(
        "lower level is unbounded below at the given parameter"
    )


def value_subgradient(ll: LowerLevel, x: np.ndarray) -> np.ndarray:
    """One subgradient ``A.T @ dual`` of the value function at ``x``.

    The value function is convex, so any optimal dual vector certifies a
    subgradient; the returned one corresponds to the deterministic vertex
    produced by the simplex pivot order.  Raises :class:`DomainError` when
    the value is ``+inf`` at ``x``.
    """
    ev = eval_value(ll, x)
    if not ev.finite:
        raise DomainError("value function is +inf at the given parameter")
    return ll.A.T @ ev.dual


def lower_level_solve(ll: LowerLevel, x: np.ndarray) -> np.ndarray:
    """Some lower-level optimal solution ``y`` at parameter ``x``."""
    ev = eval_value(ll, x)
    if not ev.finite:
        raise LowerLevelInfeasibleError(
            "lower level is infeasible at the given parameter"
        )
    return ev.y_opt


def duality_gap(ll: LowerLevel, x: np.ndarray, y: np.ndarray) -> float:
    """Gap ``c @ y - theta(x)`` for a lower-level feasible pair.

    Nonnegative up to 1e-9 by weak duality; zero exactly on lower-level
    optimal solutions.

    Raises
    ------
    InfeasiblePointError
        If ``(x, y)`` violates ``Ax + By <= b`` by more than 1e-9.
    """
    x = np.asarray(x, float).reshape(-1)
    y = np.asarray(y, float).reshape(-1)
    viol = float(np.max(ll.A @ x + ll.B @ y - ll.b, initial=0.0))
    if viol > 1e-9:
        raise InfeasiblePointError(
            f"(x, y) violates the lower-level constraints by {viol:.3e}"
        )
    ev = eval_value(ll, x)
    if not ev.finite:  # pragma: no cover - impossible given feasibility above
        raise DomainError("value function is +inf at a feasible parameter")
    return float(ll.c @ y - ev.value)
