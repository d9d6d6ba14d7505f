"""gbdist: verifier and bounded-search toolkit for global bisimulation
distances between finitary processes."""

from .costs import Alpha, Cost, INFINITE_COST, ZERO_COST, format_cost, parse_cost
from .domains import ActionDomain, DomainError, MetricViolation, usual_metric, validate_domain
from .trees import (
    EMPTY_TREE,
    FiniteTree,
    InfiniteTreeError,
    RegularTree,
    TreeFamily,
    format_tree,
    tree_equal,
    tree_sum,
)
from .steps import (
    BadPosition,
    CostTooLow,
    EndpointMismatch,
    IdemMismatch,
    Replay,
    Step,
    StepError,
    StepSequence,
    UnknownAction,
    apply_step,
    compose,
    lift_at_summand,
    normalize_steps,
    project_sequence,
    replay,
    reverse,
    validate_sequence,
)
from .certificates import (
    BudgetExceeded,
    CandidateMismatch,
    CcdCertificate,
    CcdReport,
    CertificateError,
    CoStep,
    DistanceTriple,
    NotTelescopic,
    SubtreeMismatch,
    TelescopicFamily,
    TelescopicReport,
    TripleVerdict,
    assemble_limit,
    check_telescopic,
    compose_certificates,
    fold_sequence,
    project_ccd,
    unfold_certificate,
    verify_ccd,
)
from .stagegraph import (
    Arc,
    Diabolo,
    MultiStageGraph,
    NotDepthOne,
    NotDiabolo,
    NotFirstLevel,
    NotTbwc,
    NotTsc,
    StageGraphError,
    arc_kind,
    build_graph,
    compact_by_paths,
    decompose,
    extract_sequence,
    is_tbwc,
    is_tsc,
    prune_to_tbwc,
    reduce_to_diabolos,
    to_dot,
    total_cost,
)
from .formats import (
    FormatError,
    format_ccd,
    format_lts,
    format_metric,
    format_sequence,
    format_telescopic,
    parse_ccd,
    parse_lts,
    parse_metric,
    parse_sequence,
    parse_telescopic,
    parse_tree,
)

__version__ = "0.1.0"
