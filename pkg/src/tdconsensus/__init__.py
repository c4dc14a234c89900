"""Performance analysis and topology design for noisy consensus networks
with a uniform time delay.

The package computes the exact steady-state output variance of
dx(t) = -L x(t - tau) dt + dW, its closed-form fit, delay-induced
performance floors, and greedy growing / sparsification / reweighting
routines built on rank-one cache updates, plus a Monte Carlo simulator
and a file-based CLI.
"""

from .errors import (
    ConfigError,
    ConvergenceFailure,
    DisconnectedGraph,
    DomainError,
    EdgeNotInGraph,
    IndexOutOfRange,
    InvalidOutputMatrix,
    NoFeasibleCandidate,
    ParseError,
    SingularUpdate,
    ToolError,
    UnstableNetwork,
)
from .graphs import (
    BRIDGE_TOLERANCE,
    EdgeFormCaches,
    QuadraticFormCache,
    SpectralCache,
    WeightedGraph,
    centering_matrix,
    delay_shift_matrix,
    edge_quadratic_form,
    eigendecompose,
    is_bridge,
    pseudo_inverse,
    sherman_morrison_update,
)
from .performance import (
    FIT_OFFSET,
    FIT_SLOPE,
    CrossoverResult,
    HardLimit,
    OutputKind,
    OutputSpec,
    PerformanceReport,
    StabilityResult,
    check_stability,
    cosine_fixed_point,
    crossover_delay,
    hard_limit,
    make_output_spec,
    mode_variance,
    mode_variance_fit,
    mode_variance_quadrature,
    monotonicity_threshold,
    performance_report,
    rho_approx,
    rho_approx_from_caches,
    rho_exact,
    sensitivity,
)
from .design import (
    AUDIT_NODE_LIMIT,
    EPS_STABILITY,
    CandidateSet,
    DesignState,
    DesignTrace,
    ReweightResult,
    TraceEntry,
    contribution_upper_bound,
    edge_contribution,
    edge_stability_bound,
    golden_section_min,
    grow_by_sensitivity,
    grow_random,
    grow_simple,
    reweight_scale,
    sparsify,
)
from .fileio import (
    csv_cell,
    file_digest,
    format_graph,
    load_candidates,
    load_graph,
    load_matrix,
    parse_candidates_text,
    parse_graph_text,
    parse_report_json,
    report_json,
    to_jsonable,
)
from .simulate import SimulationConfig, SimulationEstimate, simulate

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "ToolError",
    "ConvergenceFailure",
    "IndexOutOfRange",
    "EdgeNotInGraph",
    "SingularUpdate",
    "DisconnectedGraph",
    "UnstableNetwork",
    "DomainError",
    "InvalidOutputMatrix",
    "NoFeasibleCandidate",
    "ConfigError",
    "ParseError",
    # graphs
    "WeightedGraph",
    "SpectralCache",
    "QuadraticFormCache",
    "EdgeFormCaches",
    "eigendecompose",
    "pseudo_inverse",
    "edge_quadratic_form",
    "is_bridge",
    "sherman_morrison_update",
    "centering_matrix",
    "delay_shift_matrix",
    "BRIDGE_TOLERANCE",
    # performance
    "OutputSpec",
    "OutputKind",
    "make_output_spec",
    "StabilityResult",
    "check_stability",
    "mode_variance",
    "mode_variance_fit",
    "mode_variance_quadrature",
    "rho_exact",
    "rho_approx",
    "rho_approx_from_caches",
    "hard_limit",
    "HardLimit",
    "sensitivity",
    "monotonicity_threshold",
    "crossover_delay",
    "CrossoverResult",
    "cosine_fixed_point",
    "performance_report",
    "PerformanceReport",
    "FIT_OFFSET",
    "FIT_SLOPE",
    # design
    "CandidateSet",
    "DesignState",
    "DesignTrace",
    "TraceEntry",
    "ReweightResult",
    "edge_contribution",
    "edge_stability_bound",
    "contribution_upper_bound",
    "grow_simple",
    "grow_random",
    "sparsify",
    "grow_by_sensitivity",
    "reweight_scale",
    "golden_section_min",
    "EPS_STABILITY",
    "AUDIT_NODE_LIMIT",
    # file formats and reports
    "parse_graph_text",
    "format_graph",
    "load_graph",
    "parse_candidates_text",
    "load_candidates",
    "load_matrix",
    "file_digest",
    "to_jsonable",
    "report_json",
    "parse_report_json",
    "csv_cell",
    # simulate
    "SimulationConfig",
    "SimulationEstimate",
    "simulate",
]
