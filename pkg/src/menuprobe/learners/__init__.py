"""Elicitation algorithms and the assumption validators they depend on."""

from .assumptions import (
    AssumptionReport,
    Violation,
    check_all,
    check_assumption_breakpoints,
    check_assumption_no_dominant,
    check_assumption_nonparallel,
)
from .finite import (
    BallDesign,
    LearnerResult,
    LinePlan,
    design_ball_menu,
    learn_via_menu,
    learn_via_single_strategy,
    plan_line_game,
    single_round_identify,
)
from .infinite import (
    OracleStrategies,
    ReconstructedType,
    behaviorally_equivalent,
    learn_infinite_type,
    normalize_type,
)

__all__ = [
    "AssumptionReport",
    "BallDesign",
    "LearnerResult",
    "LinePlan",
    "OracleStrategies",
    "ReconstructedType",
    "Violation",
    "behaviorally_equivalent",
    "check_all",
    "check_assumption_breakpoints",
    "check_assumption_no_dominant",
    "check_assumption_nonparallel",
    "design_ball_menu",
    "learn_infinite_type",
    "learn_via_menu",
    "learn_via_single_strategy",
    "normalize_type",
    "plan_line_game",
    "single_round_identify",
]
