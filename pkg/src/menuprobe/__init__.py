"""Learning a principal-agent game's private agent type from revealed preferences."""

from .core import (
    TAU,
    AgentType,
    BallMenu,
    Dialogue,
    FiniteMenu,
    GameInstance,
    SimulatedAgent,
    StrategySpace,
    TieBreakRule,
    Transcript,
    best_response,
    choose_from_ball_menu,
    choose_from_finite_menu,
)
from .errors import (
    AmbiguousMatchError,
    AssumptionViolation,
    GateError,
    InfeasibleError,
    MenuProbeError,
    NoMatchError,
)

__version__ = "0.1.0"

__all__ = [
    "TAU",
    "AgentType",
    "AmbiguousMatchError",
    "AssumptionViolation",
    "BallMenu",
    "Dialogue",
    "FiniteMenu",
    "GameInstance",
    "GateError",
    "InfeasibleError",
    "MenuProbeError",
    "NoMatchError",
    "SimulatedAgent",
    "StrategySpace",
    "TieBreakRule",
    "Transcript",
    "best_response",
    "choose_from_ball_menu",
    "choose_from_finite_menu",
]
