"""Spread decompositions of regular bipartite graphs and desk-scale threshold experiments."""
from .decompose import (
    Decomposition,
    ParamSchedule,
    check_admissible,
    check_nice,
    condition_labeling,
    decompose_once,
    recurse,
    schedule,
)
from .designs import (
    ExactCoverInstance,
    latin_square_exists,
    list_coloring_bipartite,
    list_coloring_complete,
    solve_exact_cover,
    sts_exists,
    verify_witness,
)
from .errors import (
    BudgetExhausted,
    CompletionInfeasible,
    DegenerateInstance,
    InvalidInput,
    InvalidRange,
    ParametersTooSmall,
)
from .flow import DegreePrescription, check_hall_all, complete_within, degree_prescribed_subgraph
from .graph import BipartiteGraph, EdgeSubset, ListAssignment, TripleSystem, complete_bipartite
from .prob import Event, EventSystem, ProductSpace, rejection_sample, verify_lll_comparison
from .spread import SpreadReport, estimate_spread, exact_matching_spread, p_small_weight
from .threshold import ThresholdExperiment, bisect_threshold, scaling_fit, success_prob

__version__ = "0.1.0"
