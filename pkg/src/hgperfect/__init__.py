"""Perfect sampling of hypergraph independent sets by coupling from the past."""

from .cftp import (
    CFTPSampler,
    Regime,
    RegimeError,
    RoundCapExceeded,
    RunReport,
    check_asymmetric,
    check_linear,
    check_symmetric,
    choose_L,
    estimate_round_distribution,
    sample,
    select_regime,
    suggest_x,
)
from .hypergraph import (
    Hypergraph,
    HypergraphError,
    ParseError,
    dist2_neighborhood,
    generate_random_regular,
    is_independent,
    neighborhood,
    parse_hypergraph,
    read_hypergraph,
)
from .scan import run_all_starts, run_monotone_upper, run_scan, scan_vertex, transition, upd_time
from .witness import detect, is_open, open_component_census, witness_vertex

__all__ = [
    "CFTPSampler", "Regime", "RegimeError", "RoundCapExceeded", "RunReport", "check_asymmetric",
    "check_linear", "check_symmetric", "choose_L", "estimate_round_distribution", "sample",
    "select_regime", "suggest_x", "Hypergraph", "HypergraphError", "ParseError", "dist2_neighborhood",
    "generate_random_regular", "is_independent", "neighborhood", "parse_hypergraph", "read_hypergraph",
    "run_all_starts", "run_monotone_upper", "run_scan", "scan_vertex", "transition", "upd_time",
    "detect", "is_open", "open_component_census", "witness_vertex",
]
