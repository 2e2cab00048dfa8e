"""Penalty-DC toolkit for optimistic bilevel programs with affine data.

The lower level is a fully affine parametric LP whose optimal value
function is convex and piecewise affine; the bilevel program is solved
through its value-function reformulation by penalizing the duality-gap
constraint and handing each penalized subproblem to a
difference-of-convex inner solver (classical or boosted with a line
search), or to an explicit duality-gap reformulation.  The package also
ships the supporting machinery: dense LP/QP subsolvers with certificates,
stationarity certification, subdifferential calculus for two-piece minima,
complementarity-constraint diagnostics, benchmark instances, and a
performance-profile harness.
"""

from .bench import (
    BenchRow,
    BenchTable,
    METRICS,
    ProfileCurve,
    emit_reports,
    performance_profile,
    run_benchmark,
)
from .dc import (
    DCDecomposition,
    DCState,
    QuadObjective,
    TraceEntry,
    boosted_line_search,
    dc_split,
    dc_subproblem,
    solve_dc,
)
from .errors import (
    BilevelDCError,
    DomainError,
    DualInfeasibleError,
    EmptyTableError,
    InfeasibleComplementarityError,
    InfeasibleInstanceError,
    InfeasiblePointError,
    InfeasiblePolyhedronError,
    InfeasibleStartError,
    LowerLevelInfeasibleError,
    LowerLevelUnboundedError,
    NotSPDError,
    NumericalDegeneracyError,
    ParseError,
)
from .instances import BUILTIN_NAMES, BilevelInstance, load_instance, random_starts
from .penalty import (
    Method,
    PdgStep,
    PenaltyParams,
    RunReport,
    init_dual,
    pdg_subproblem,
    run_penalty,
)
from .stationarity import (
    MpccAstatVerdict,
    MpccIndexSets,
    MpccSample,
    StationarityCertificate,
    SubdiffDescription,
    check_mpcc_astat,
    min_subdifferential,
    mpcc_index_sets,
    stationarity_residual,
)
from .subsolvers import (
    AffineSystem,
    LPSolution,
    LPStatus,
    QPSolution,
    QPStatus,
    project_polyhedron,
    solve_lp,
    solve_qp,
)
from .value_function import (
    LowerLevel,
    ValueEval,
    duality_gap,
    eval_value,
    lower_level_solve,
    value_subgradient,
)

__version__ = "0.1.0"

__all__ = [
    "AffineSystem",
    "BUILTIN_NAMES",
    "BenchRow",
    "BenchTable",
    "BilevelDCError",
    "BilevelInstance",
    "DCDecomposition",
    "DCState",
    "DomainError",
    "DualInfeasibleError",
    "EmptyTableError",
    "InfeasibleComplementarityError",
    "InfeasibleInstanceError",
    "InfeasiblePointError",
    "InfeasiblePolyhedronError",
    "InfeasibleStartError",
    "LPSolution",
    "LPStatus",
    "LowerLevel",
    "LowerLevelInfeasibleError",
    "LowerLevelUnboundedError",
    "METRICS",
    "Method",
    "MpccAstatVerdict",
    "MpccIndexSets",
    "MpccSample",
    "NotSPDError",
    "NumericalDegeneracyError",
    "ParseError",
    "PdgStep",
    "PenaltyParams",
    "ProfileCurve",
    "QPSolution",
    "QPStatus",
    "QuadObjective",
    "RunReport",
    "StationarityCertificate",
    "SubdiffDescription",
    "TraceEntry",
    "ValueEval",
    "boosted_line_search",
    "check_mpcc_astat",
    "dc_split",
    "dc_subproblem",
    "duality_gap",
    "emit_reports",
    "eval_value",
    "init_dual",
    "load_instance",
    "lower_level_solve",
    "min_subdifferential",
    "mpcc_index_sets",
    "pdg_subproblem",
    "performance_profile",
    "project_polyhedron",
    "random_starts",
    "run_benchmark",
    "run_penalty",
    "solve_dc",
    "solve_lp",
    "solve_qp",
    "stationarity_residual",
    "value_subgradient",
]
