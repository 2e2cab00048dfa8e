"""Stationarity certification and complementarity-constraint calculus.

``stationarity_residual`` certifies a KKT-type system for the value-function
reformulation of the bilevel program: at a feasible point ``(x, y)`` it
seeks multipliers ``lambda, mu >= 0`` on the active rows, a penalty weight
``sigma >= 0`` and a lower-level dual surrogate ``nu = sigma * lambda'``
(the substitution linearizes the bilinear unknown exactly) with

``grad_x f + A.T (lambda - nu) + C.T mu = 0``
``grad_y f + B.T (lambda - nu) + D.T mu = 0``
``B.T nu + sigma c = 0``,

and reports the minimal l1-norm of the two gradient equations, found by a
single LP.  The remaining helpers implement the exact subdifferential case
formulas for two-piece minimum functions and checks for asymptotic
stationarity of complementarity-constrained programs reformulated through
``min(G_i, H_i) = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InfeasibleComplementarityError, InfeasiblePointError
from .subsolvers import _solve_nonneg_lp

__all__ = [
    "SIGMA_CAP",
    "StationarityCertificate",
    "stationarity_residual",
    "SubdiffDescription",
    "min_subdifferential",
    "MpccIndexSets",
    "mpcc_index_sets",
    "MpccSample",
    "MpccAstatVerdict",
    "check_mpcc_astat",
]

SIGMA_CAP = 1e6


@dataclass(frozen=True)
class StationarityCertificate:
    """Multipliers attaining the minimal stationarity residual.

    ``lam``/``nu`` live on the lower-level rows (supported on
    ``active_ll``), ``mu`` on the upper-level rows (supported on
    ``active_ul``); ``nu`` stands for ``sigma * lambda'`` so that
    ``B.T @ nu + sigma * c == 0``.  ``degenerate`` flags the inconclusive
    case ``sigma == 0`` with ``nu != 0`` (nontrivial dual recession
    direction), which is reported rather than silently accepted.
    """

    residual: float
    lam: np.ndarray
    nu: np.ndarray
    mu: np.ndarray
    sigma: float
    active_ll: tuple[int, ...]
    active_ul: tuple[int, ...]
    degenerate: bool = False

    @property
    def lambda_prime(self) -> np.ndarray | None:
        """Recovered lower-level dual ``nu / sigma`` (None when sigma == 0)."""
        if self.sigma <= 0.0:
            return None
        return self.nu / self.sigma


def stationarity_residual(
    instance, x: np.ndarray, y: np.ndarray, tol_active: float = 1e-6
) -> StationarityCertificate:
    """Minimal l1 gradient residual of the stationarity system at ``(x, y)``.

    Active rows are those with slack at most ``tol_active`` (the default
    1e-6 is deliberately looser than the subsolver tolerances, since the
    certified points carry inner-solver slack).  A residual below 1e-5
    certifies stationarity; the LP is positively homogeneous in the
    objective gradient, so scaling the objective scales the residual.

    Raises
    ------
    InfeasiblePointError
        If ``(x, y)`` violates the coupled polyhedron by more than
        ``tol_active``.
    """
    x = np.asarray(x, float).reshape(-1)
    y = np.asarray(y, float).reshape(-1)
    n, m = instance.n, instance.m
    w = np.concatenate([x, y])
    slack_ll = instance.b - instance.A @ x - instance.B @ y
    slack_ul = instance.d - instance.C @ x - instance.D @ y
    worst = -min(float(slack_ll.min(initial=0.0)), float(slack_ul.min(initial=0.0)))
    if worst > tol_active:
        raise InfeasiblePointError(
            f"(x, y) violates the coupled polyhedron by {worst:.3e}"
        )
    act_ll = np.flatnonzero(slack_ll <= tol_active)
    act_ul = np.flatnonzero(slack_ul <= tol_active)
    na, nu_rows = act_ll.size, act_ul.size

    grad = instance.upper_objective.gradient(w)
    gx, gy = grad[:n], grad[n:]
    A_act = instance.A[act_ll]
    B_act = instance.B[act_ll]
    C_act = instance.C[act_ul]
    D_act = instance.D[act_ul]

    # Columns: lam (na), nu (na), mu (nu_rows), sigma, cap slack, rx+-, ry+-.
    n_cols = 2 * na + nu_rows + 2 + 2 * n + 2 * m
    off_nu = na
    off_mu = 2 * na
    off_sigma = 2 * na + nu_rows
    off_rx = off_sigma + 2
    off_ry = off_rx + 2 * n

    rows = np.zeros((n + 2 * m + 1, n_cols))
    rhs = np.zeros(n + 2 * m + 1)
    # grad_x block.
    rows[:n, :na] = A_act.T
    rows[:n, off_nu : off_nu + na] = -A_act.T
    rows[:n, off_mu : off_mu + nu_rows] = C_act.T
    rows[:n, off_rx : off_rx + n] = -np.eye(n)
    rows[:n, off_rx + n : off_rx + 2 * n] = np.eye(n)
    rhs[:n] = -gx
    # grad_y block.
    rows[n : n + m, :na] = B_act.T
    rows[n : n + m, off_nu : off_nu + na] = -B_act.T
    rows[n : n + m, off_mu : off_mu + nu_rows] = D_act.T
    rows[n : n + m, off_ry : off_ry + m] = -np.eye(m)
    rows[n : n + m, off_ry + m : off_ry + 2 * m] = np.eye(m)
    rhs[n : n + m] = -gy
    # nu-side condition B.T nu + sigma c = 0.
    rows[n + m : n + 2 * m, off_nu : off_nu + na] = B_act.T
    rows[n + m : n + 2 * m, off_sigma] = instance.c
    # sigma cap.
    rows[-1, off_sigma] = 1.0
    rows[-1, off_sigma + 1] = 1.0
    rhs[-1] = SIGMA_CAP

    cost = np.zeros(n_cols)
    cost[off_rx:] = 1.0

    res = _solve_nonneg_lp(cost, rows, rhs)
    if res.status != "optimal":  # pragma: no cover - LP is always feasible
        raise RuntimeError(f"stationarity residual LP ended with {res.status}")

    v = res.x
    lam = np.zeros(instance.p)
    lam[act_ll] = v[:na]
    nu = np.zeros(instance.p)
    nu[act_ll] = v[off_nu : off_nu + na]
    mu = np.zeros(instance.q)
    mu[act_ul] = v[off_mu : off_mu + nu_rows]
    sigma = float(v[off_sigma])
    degenerate = sigma <= 1e-10 and float(np.max(np.abs(nu), initial=0.0)) > 1e-8
    return StationarityCertificate(
        residual=float(res.objective),
        lam=lam,
        nu=nu,
        mu=mu,
        sigma=sigma,
        active_ll=tuple(int(i) for i in act_ll),
        active_ul=tuple(int(i) for i in act_ul),
        degenerate=degenerate,
    )


@dataclass(frozen=True)
class SubdiffDescription:
    """Subdifferential of a two-piece minimum at one point.

    ``singleton`` and ``pair`` are discrete sets of one or two gradients;
    ``segment`` is the convex hull of its two stored endpoints.
    """

    kind: str  # "singleton" | "pair" | "segment"
    points: tuple[np.ndarray, ...]

    def __post_init__(self):
        if self.kind not in ("singleton", "pair", "segment"):
            raise ValueError(f"unknown kind {self.kind!r}")
        want = 1 if self.kind == "singleton" else 2
        if len(self.points) != want:
            raise ValueError(f"{self.kind} must store {want} point(s)")


def min_subdifferential(
    grad1: np.ndarray,
    grad2: np.ndarray,
    val1: float,
    val2: float,
    which: str = "partial",
) -> SubdiffDescription:
    """Exact subdifferential of ``min(f1, f2)`` from values and gradients.

    ``which`` selects the construction: ``"partial"`` (limiting), which at
    the kink is the unordered pair of gradients; ``"clarke"``, whose kink
    case is the segment between them; ``"partial_of_negative"``, the
    limiting (= Clarke) subdifferential of ``-min(f1, f2)``, the segment
    between the negated gradients.  Off the kink all three are the
    singleton gradient of the active branch.
    """
    if which not in ("partial", "clarke", "partial_of_negative"):
        raise ValueError(f"unknown subdifferential kind {which!r}")
    g1 = np.asarray(grad1, float).reshape(-1)
    g2 = np.asarray(grad2, float).reshape(-1)
    neg = which == "partial_of_negative"
    if val1 < val2:
        return SubdiffDescription("singleton", ((-g1 if neg else g1),))
    if val1 > val2:
        return SubdiffDescription("singleton", ((-g2 if neg else g2),))
    if np.array_equal(g1, g2):
        return SubdiffDescription("singleton", ((-g1 if neg else g1),))
    if which == "partial":
        return SubdiffDescription("pair", (g1, g2))
    if which == "clarke":
        return SubdiffDescription("segment", (g1, g2))
    return SubdiffDescription("segment", (-g1, -g2))


@dataclass(frozen=True)
class MpccIndexSets:
    """Partition of complementarity indices by which side is active."""

    i_plus0: frozenset[int]  # G > 0, H = 0
    i_0plus: frozenset[int]  # G = 0, H > 0
    i_00: frozenset[int]  # G = H = 0


def mpcc_index_sets(
    G_vals: np.ndarray, H_vals: np.ndarray, tol: float = 1e-8
) -> MpccIndexSets:
    """Classify complementarity pairs ``0 <= G_i  perp  H_i >= 0``.

    Values within ``tol`` of zero count as zero.  Raises
    :class:`InfeasibleComplementarityError` when some pair has
    ``min(G_i, H_i)`` outside ``[-tol, tol]`` or a negative component.
    """
    G = np.asarray(G_vals, float).reshape(-1)
    H = np.asarray(H_vals, float).reshape(-1)
    if G.shape != H.shape:
        raise ValueError("G_vals and H_vals must have equal length")
    if float(min(G.min(initial=0.0), H.min(initial=0.0))) < -tol:
        raise InfeasibleComplementarityError("negative component beyond tolerance")
    mins = np.minimum(G, H)
    if float(np.max(np.abs(mins), initial=0.0)) > tol:
        raise InfeasibleComplementarityError(
            "min(G_i, H_i) != 0 beyond tolerance: complementarity violated"
        )
    zero_g = G <= tol
    zero_h = H <= tol
    return MpccIndexSets(
        i_plus0=frozenset(np.flatnonzero(~zero_g & zero_h).tolist()),
        i_0plus=frozenset(np.flatnonzero(zero_g & ~zero_h).tolist()),
        i_00=frozenset(np.flatnonzero(zero_g & zero_h).tolist()),
    )


@dataclass(frozen=True)
class MpccSample:
    """One iterate of an asymptotically stationary sequence.

    ``epsilon`` is the Lagrangian gradient residual vector (or its norm);
    ``grad_residual`` may carry an independently recomputed norm and is
    informational.
    """

    point: np.ndarray
    lam_g: np.ndarray
    lam_h: np.ndarray
    lam_G: np.ndarray
    lam_H: np.ndarray
    epsilon: np.ndarray | float
    grad_residual: float = np.nan

    @property
    def epsilon_norm(self) -> float:
        eps = np.asarray(self.epsilon, float)
        return float(np.linalg.norm(eps.reshape(-1)))


@dataclass(frozen=True)
class MpccAstatVerdict:
    per_sample: tuple[bool, ...]
    limit: bool


def check_mpcc_astat(
    samples: Sequence[MpccSample],
    index_sets: MpccIndexSets,
    mode: str = "clarke",
    *,
    g_at_limit: np.ndarray | None = None,
    tol: float = 1e-8,
    tol_limit: float = 1e-6,
) -> MpccAstatVerdict:
    """Check asymptotic-stationarity sign conditions along a sample sequence.

    Per sample (ordered by iteration) the verdict requires
    ``|min(lam_g_i, -g_i(limit))| <= tol`` for every standard inequality,
    ``lam_G_i = 0`` on ``i_plus0``, ``lam_H_i = 0`` on ``i_0plus``, and on
    the biactive set ``i_00`` the mode-specific sign condition:
    ``lam_G_i * lam_H_i >= 0`` in ``"clarke"`` mode, and
    ``both negative or product zero`` in ``"limiting"`` mode.

    The limit verdict is True iff every sample passes and the epsilon norms
    are nonincreasing over the tail (last half) with final value at most
    ``tol_limit``.
    """
    if mode not in ("clarke", "limiting"):
        raise ValueError(f"unknown mode {mode!r}")
    verdicts = []
    for s in samples:
        ok = True
        lam_g = np.asarray(s.lam_g, float).reshape(-1)
        if g_at_limit is None:
            g_lim = np.zeros(lam_g.shape[0])
        else:
            g_lim = np.asarray(g_at_limit, float).reshape(-1)
        for i in range(lam_g.shape[0]):
            if abs(min(lam_g[i], -g_lim[i])) > tol:
                ok = False
        lam_G = np.asarray(s.lam_G, float).reshape(-1)
        lam_H = np.asarray(s.lam_H, float).reshape(-1)
        for i in index_sets.i_plus0:
            if abs(lam_G[i]) > tol:
                ok = False
        for i in index_sets.i_0plus:
            if abs(lam_H[i]) > tol:
                ok = False
        for i in index_sets.i_00:
            prod = lam_G[i] * lam_H[i]
            if mode == "clarke":
                if prod < -tol:
                    ok = False
            else:
                both_negative = lam_G[i] < 0.0 and lam_H[i] < 0.0
                if not (both_negative or abs(prod) <= tol):
                    ok = False
        verdicts.append(ok)

    limit = bool(verdicts) and all(verdicts)
    if limit:
        eps = [s.epsilon_norm for s in samples]
        tail = eps[len(eps) // 2 :]
        if any(b > a + 1e-12 for a, b in zip(tail, tail[1:])):
            limit = False
        if tail[-1] > tol_limit:
            limit = False
    return MpccAstatVerdict(per_sample=tuple(verdicts), limit=limit)
