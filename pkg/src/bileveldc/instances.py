"""Bilevel problem instances: built-ins, JSON loading, random starts.

An instance bundles all affine data of the optimistic bilevel program

``min f(x, y)  s.t.  C x + D y <= d,  y in argmin { c @ y : A x + B y <= b }``

with a quadratic upper-level objective over the joint variables ``(x, y)``.
Three built-ins are provided:

* ``ex1`` -- the fully linear problem of Bard and Falk (optimal value
  -3.25),
* ``ex2`` -- a quadratic upper level over a one-dimensional parameter
  (optimal value 0.5),
* ``ex3`` -- an inverse transportation problem recovering the warehouse
  offer from a noisy plan (5 warehouses, 7 consumers).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dc import QuadObjective
from .errors import InfeasibleInstanceError, ParseError
from .subsolvers import AffineSystem, LPStatus, project_polyhedron, solve_lp
from .value_function import LowerLevel

__all__ = ["BilevelInstance", "BUILTIN_NAMES", "load_instance", "random_starts"]


@dataclass(frozen=True)
class BilevelInstance:
    """Immutable container for one bilevel problem; single source of truth."""

    name: str
    A: np.ndarray
    B: np.ndarray
    b: np.ndarray
    C: np.ndarray
    D: np.ndarray
    d: np.ndarray
    c: np.ndarray
    upper_objective: QuadObjective
    start_box: np.ndarray  # (n + m, 2) per-coordinate sampling intervals
    f_star: float | None = None

    def __post_init__(self):
        arrays = {}
        for field_name in ("A", "B", "C", "D"):
            arrays[field_name] = np.atleast_2d(np.asarray(getattr(self, field_name), float))
        for field_name in ("b", "d", "c"):
            arrays[field_name] = np.asarray(getattr(self, field_name), float).reshape(-1)
        A, B, C, D = arrays["A"], arrays["B"], arrays["C"], arrays["D"]
        b, d, c = arrays["b"], arrays["d"], arrays["c"]
        n, m = A.shape[1], B.shape[1]
        if B.shape[0] != A.shape[0] or b.shape[0] != A.shape[0]:
            raise ParseError(f"{self.name}: lower-level row counts disagree (A/B/b)")
        if C.shape[1] != n:
            raise ParseError(f"{self.name}: C has {C.shape[1]} columns, expected {n}")
        if D.shape[1] != m:
            raise ParseError(f"{self.name}: D has {D.shape[1]} columns, expected {m}")
        if D.shape[0] != C.shape[0] or d.shape[0] != C.shape[0]:
            raise ParseError(f"{self.name}: upper-level row counts disagree (C/D/d)")
        if c.shape[0] != m:
            raise ParseError(f"{self.name}: c has {c.shape[0]} entries, expected {m}")
        if self.upper_objective.dim != n + m:
            raise ParseError(
                f"{self.name}: objective dimension {self.upper_objective.dim}"
                f" != n + m = {n + m}"
            )
        box = np.asarray(self.start_box, float)
        if box.shape != (n + m, 2):
            raise ParseError(
                f"{self.name}: start_box shape {box.shape}, expected {(n + m, 2)}"
            )
        if np.any(box[:, 0] > box[:, 1]):
            raise ParseError(f"{self.name}: start_box has an empty interval")
        for field_name, arr in arrays.items():
            if not np.isfinite(arr).all():
                raise ParseError(f"{self.name}: field {field_name} has nonfinite entries")
            arr.setflags(write=False)
            object.__setattr__(self, field_name, arr)
        box.setflags(write=False)
        object.__setattr__(self, "start_box", box)
        # Nonempty coupled polyhedron, certified by one LP feasibility solve.
        feas = solve_lp(np.zeros(n + m), self.coupled_system())
        if feas.status is not LPStatus.OPTIMAL:
            raise InfeasibleInstanceError(
                f"{self.name}: coupled polyhedron is empty"
            )

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.A.shape[0]

    @property
    def q(self) -> int:
        return self.C.shape[0]

    @property
    def lower_level(self) -> LowerLevel:
        return LowerLevel(self.A, self.B, self.b, self.c)

    @property
    def c_padded(self) -> np.ndarray:
        """Lower-level cost lifted to the joint variables (zeros on x)."""
        return np.concatenate([np.zeros(self.n), self.c])

    def coupled_system(self) -> AffineSystem:
        """Both constraint blocks stacked over the joint variables."""
        M = np.vstack(
            [np.hstack([self.A, self.B]), np.hstack([self.C, self.D])]
        )
        return AffineSystem(M, np.concatenate([self.b, self.d]))

    def upper_system(self) -> AffineSystem:
        return AffineSystem(np.hstack([self.C, self.D]), self.d)

    def split(self, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        w = np.asarray(w, float)
        return w[: self.n], w[self.n :]


def _ex1() -> BilevelInstance:
    # Bard-Falk linear test problem; lower level
    #   min -4 y1 + y2  s.t.  2 x1 - y1 + y2 >= 2.5, x1 + x2 <= 2,
    #                         x1 - 3 x2 + y2 <= 2, y >= 0,
    # upper level  min -2 x1 + x2 + 0.5 y1  s.t.  x >= 0.
    A = np.array([[-2.0, 0.0], [1.0, 1.0], [1.0, -3.0], [0.0, 0.0], [0.0, 0.0]])
    B = np.array([[1.0, -1.0], [0.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    b = np.array([-2.5, 2.0, 2.0, 0.0, 0.0])
    c = np.array([-4.0, 1.0])
    C = -np.eye(2)
    D = np.zeros((2, 2))
    d = np.zeros(2)
    obj = QuadObjective(np.zeros((4, 4)), np.array([-2.0, 1.0, 0.5, 0.0]))
    box = np.tile([0.0, 2.0], (4, 1))
    return BilevelInstance("ex1", A, B, b, C, D, d, c, obj, box, f_star=-3.25)


def _ex2() -> BilevelInstance:
    # Quadratic upper level min x^2 + (y1 + y2)^2 s.t. x >= 0.5; lower level
    #   min y1  s.t.  x + y1 + y2 >= 1, y >= 0.
    A = np.array([[-1.0], [0.0], [0.0]])
    B = np.array([[-1.0, -1.0], [-1.0, 0.0], [0.0, -1.0]])
    b = np.array([-1.0, 0.0, 0.0])
    c = np.array([1.0, 0.0])
    C = np.array([[-1.0]])
    D = np.zeros((1, 2))
    d = np.array([-0.5])
    Q = np.array([[2.0, 0.0, 0.0], [0.0, 2.0, 2.0], [0.0, 2.0, 2.0]])
    obj = QuadObjective(Q, np.zeros(3))
    box = np.tile([0.0, 2.0], (3, 1))
    return BilevelInstance("ex2", A, B, b, C, D, d, c, obj, box, f_star=0.5)


# Inverse transportation data: per-route costs, consumer demands, and the
# noisy observed plan the offer has to be reconstructed from.  Entries
# (3, 5) and (4, 5th col) of the cost table repair two typos in the source
# dataset (printed ".01336" and "0.0300"); with the printed values the
# desired plan below is not lower-level optimal at the desired offer,
# which the construction of the dataset requires.
_EX3_COST = np.array(
    [
        [0.5757, 0.8423, 0.4997, 0.4390, 0.1491, 0.0283, 0.7567],
        [0.7961, 0.2936, 0.1152, 0.3751, 0.8289, 0.8418, 0.6652],
        [0.9601, 0.9431, 0.1127, 0.6483, 0.4808, 0.0665, 0.8978],
        [0.4972, 0.7713, 0.0604, 0.2625, 0.6511, 0.1336, 0.6385],
        [0.3849, 0.7657, 0.6529, 0.3815, 0.3000, 0.3401, 0.9189],
    ]
)
_EX3_DEMAND = np.array([5.0, 5.0, 5.0, 10.0, 3.0, 9.0, 1.0])
_EX3_OBSERVED = np.array(
    [
        [-0.0032, 0.0053, -0.0031, 0.0024, 2.9991, 4.5902, 0.0020],
        [0.0020, 5.0030, 1.5969, -0.0001, 0.0040, 0.0078, 0.9911],
        [-0.0080, 0.0030, 3.2053, 0.0098, -0.0075, 4.3973, 0.0035],
        [-0.0025, 0.0073, 0.1958, 7.3927, 0.0035, -0.0059, 0.0074],
        [5.0050, -0.0016, -0.0100, 2.5930, -0.0045, 0.0074, 0.0020],
    ]
)
# Undisturbed plan used to construct the data; its offer is 7.6 per depot.
_EX3_DESIRED_PLAN = np.array(
    [
        [0.0, 0.0, 0.0, 0.0, 3.0, 4.6, 0.0],
        [0.0, 5.0, 1.6, 0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 3.2, 0.0, 0.0, 4.4, 0.0],
        [0.0, 0.0, 0.2, 7.4, 0.0, 0.0, 0.0],
        [5.0, 0.0, 0.0, 2.6, 0.0, 0.0, 0.0],
    ]
)


def _ex3() -> BilevelInstance:
    n_dep, n_con = _EX3_COST.shape
    m = n_dep * n_con
    # Lower level rows: depot capacities, consumer demands, y >= 0.
    A_sup = -np.eye(n_dep)
    B_sup = np.zeros((n_dep, m))
    for i in range(n_dep):
        B_sup[i, i * n_con : (i + 1) * n_con] = 1.0
    A_dem = np.zeros((n_con, n_dep))
    B_dem = np.zeros((n_con, m))
    for j in range(n_con):
        B_dem[j, j::n_con] = -1.0
    A = np.vstack([A_sup, A_dem, np.zeros((m, n_dep))])
    B = np.vstack([B_sup, B_dem, -np.eye(m)])
    b = np.concatenate([np.zeros(n_dep), -_EX3_DEMAND, np.zeros(m)])
    c = _EX3_COST.reshape(-1)
    # Upper level: x >= 0 and total offer at least total demand.
    C = np.vstack([-np.eye(n_dep), -np.ones((1, n_dep))])
    D = np.zeros((n_dep + 1, m))
    d = np.concatenate([np.zeros(n_dep), [-float(_EX3_DEMAND.sum())]])
    y_obs = _EX3_OBSERVED.reshape(-1)
    Q = np.zeros((n_dep + m, n_dep + m))
    Q[n_dep:, n_dep:] = np.eye(m)
    q = np.concatenate([np.zeros(n_dep), -y_obs])
    obj = QuadObjective(Q, q, const=0.5 * float(y_obs @ y_obs))
    box = np.tile([0.0, 6.0], (n_dep + m, 1))
    return BilevelInstance("ex3", A, B, b, C, D, d, c, obj, box, f_star=5.000776e-4)


_BUILTINS = {"ex1": _ex1, "ex2": _ex2, "ex3": _ex3}
BUILTIN_NAMES = tuple(sorted(_BUILTINS))

# Read-only views of the ex3 reference data for demos and verification.
EX3_DESIRED_PLAN = _EX3_DESIRED_PLAN.copy()
EX3_DESIRED_PLAN.setflags(write=False)
EX3_OBSERVED_PLAN = _EX3_OBSERVED.copy()
EX3_OBSERVED_PLAN.setflags(write=False)
EX3_DESIRED_OFFER = EX3_DESIRED_PLAN.sum(axis=1)
EX3_DESIRED_OFFER.setflags(write=False)


def _parse_field(data: dict, key: str, path: str):
    if key not in data:
        raise ParseError(f"{path}: missing field '{key}'")
    return data[key]


def load_instance(source: str | Path) -> BilevelInstance:
    """Load a built-in instance by name or a JSON instance file by path.

    The JSON document carries ``A, B, b, C, D, d, c, Q, q, const,
    start_box, f_star`` with matrices as row-major nested arrays; dimensions
    are inferred from the arrays and validated.  Raises :class:`ParseError`
    naming the offending field, or :class:`InfeasibleInstanceError` when the
    coupled polyhedron is empty.
    """
    key = str(source)
    if key in _BUILTINS:
        return _BUILTINS[key]()
    path = Path(source)
    if not path.is_file():
        raise ParseError(f"{key}: not a built-in name {BUILTIN_NAMES} and not a file")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}")
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top-level JSON value must be an object")
    name = data.get("name", path.stem)
    try:
        obj = QuadObjective(
            np.asarray(_parse_field(data, "Q", str(path)), float),
            np.asarray(_parse_field(data, "q", str(path)), float),
            float(data.get("const", 0.0)),
        )
        return BilevelInstance(
            name,
            np.asarray(_parse_field(data, "A", str(path)), float),
            np.asarray(_parse_field(data, "B", str(path)), float),
            np.asarray(_parse_field(data, "b", str(path)), float),
            np.asarray(_parse_field(data, "C", str(path)), float),
            np.asarray(_parse_field(data, "D", str(path)), float),
            np.asarray(_parse_field(data, "d", str(path)), float),
            np.asarray(_parse_field(data, "c", str(path)), float),
            obj,
            np.asarray(_parse_field(data, "start_box", str(path)), float),
            f_star=None if data.get("f_star") is None else float(data["f_star"]),
        )
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{path}: {exc}")


def random_starts(
    instance: BilevelInstance, count: int, seed: int
) -> list[np.ndarray]:
    """Seeded feasible starting points: box-uniform draws, then projection.

    Sampling uses ``numpy.random.default_rng`` (PCG64, 64-bit seedable
    stream), so the draws are reproducible across platforms.  Points
    already inside the coupled polyhedron are returned as drawn; the rest
    are replaced by their Euclidean projection.
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    rng = np.random.default_rng(seed)
    box = instance.start_box
    sys = instance.coupled_system()
    raw = rng.uniform(box[:, 0], box[:, 1], size=(count, box.shape[0]))
    starts = []
    for row in raw:
        starts.append(row if sys.contains(row) else project_polyhedron(row, sys))
    return starts
