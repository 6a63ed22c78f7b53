"""Dynamic data-race detectors over execution traces, plus worst-case trace
generators built from orthogonal-vectors and hitting-set instances."""

from .gadgets import (
    HsInstance,
    OvInstance,
    gen_hs_to_lockset,
    gen_ov3_to_syncp,
    gen_ov_to_hb,
    gen_ov_to_lockcover,
    gen_random_hs_instance,
    gen_random_ov_instance,
    gen_random_trace,
    parse_instance,
    solve_hs_bruteforce,
    solve_ov2_bruteforce,
    solve_ov3_bruteforce,
    write_instance,
)
from .hb import (
    detect_hb_race_auto,
    detect_hb_race_djit,
    detect_hb_race_graph,
    detect_hb_race_lockstamp,
)
from .lockcover import detect_lockcover_race, export_singlevar_to_ov
from .lockset import (
    Certificate,
    detect_lockset_race,
    emit_certificate,
    lockset_of_variable,
    verify_certificate,
)
from .report import RaceReport
from .syncp import (
    BudgetExceeded,
    Reordering,
    construct_ov3_witness,
    detect_syncp_race_oracle,
    verify_witness,
)
from .trace import (
    Event,
    ParseError,
    Trace,
    TraceBuilder,
    WellFormednessError,
    build_index,
    parse_trace,
    validate,
    write_trace,
)

__version__ = "0.1.0"

__all__ = [
    "BudgetExceeded",
    "Certificate",
    "Event",
    "HsInstance",
    "OvInstance",
    "ParseError",
    "RaceReport",
    "Reordering",
    "Trace",
    "TraceBuilder",
    "WellFormednessError",
    "build_index",
    "construct_ov3_witness",
    "detect_hb_race_auto",
    "detect_hb_race_djit",
    "detect_hb_race_graph",
    "detect_hb_race_lockstamp",
    "detect_lockcover_race",
    "detect_lockset_race",
    "detect_syncp_race_oracle",
    "emit_certificate",
    "export_singlevar_to_ov",
    "gen_hs_to_lockset",
    "gen_ov3_to_syncp",
    "gen_ov_to_hb",
    "gen_ov_to_lockcover",
    "gen_random_hs_instance",
    "gen_random_ov_instance",
    "gen_random_trace",
    "lockset_of_variable",
    "parse_instance",
    "parse_trace",
    "solve_hs_bruteforce",
    "solve_ov2_bruteforce",
    "solve_ov3_bruteforce",
    "validate",
    "verify_certificate",
    "verify_witness",
    "write_instance",
    "write_trace",
]
