"""Game model, exact agent simulator and interaction transcripts.

Strategies are plain ``numpy`` vectors in ambient coordinates ``x`` (length
``m``).  Every strategy space carries an affine chart ``x = A t + b`` onto
effective coordinates ``t`` (length ``d``); ball menus and all geometry live in
effective coordinates, which is how the probability simplex (``d = m - 1``) and
the one-dimensional slices are handled uniformly.

Actions are indexed from 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Mapping, Sequence, Union

import numpy as np

from .errors import InfeasibleError, MenuProbeError, NoMatchError

TAU = 1e-9
"""Default indifference tolerance on utilities."""

GAME_CLASSES = ("stackelberg", "security", "contract", "info_acq", "generic")


def _as_float_array(value, ndim: int, name: str) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# Strategy spaces


@dataclass(frozen=True, eq=False)
class StrategySpace:
    """Feasible principal strategies, parametrised by effective coordinates.

    ``t`` is feasible iff ``lower <= t <= upper`` and ``G t <= h``; the ambient
    strategy is ``A t + b``.
    """

    chart_matrix: np.ndarray
    chart_offset: np.ndarray
    constraint_matrix: np.ndarray = None
    constraint_bounds: np.ndarray = None
    lower: np.ndarray = None
    upper: np.ndarray = None

    def __post_init__(self):
        A = _as_float_array(self.chart_matrix, 2, "chart_matrix")
        m, d = A.shape
        b = _as_float_array(self.chart_offset, 1, "chart_offset")
        if b.shape != (m,):
            raise ValueError("chart_offset length must equal the ambient dimension")
        G = np.zeros((0, d)) if self.constraint_matrix is None else self.constraint_matrix
        G = _as_float_array(np.reshape(G, (-1, d)), 2, "constraint_matrix")
        h = np.zeros(0) if self.constraint_bounds is None else self.constraint_bounds
        h = _as_float_array(np.reshape(h, -1), 1, "constraint_bounds")
        if G.shape[0] != h.shape[0]:
            raise ValueError("constraint_matrix and constraint_bounds disagree in length")
        lo = np.full(d, -np.inf) if self.lower is None else np.broadcast_to(self.lower, (d,))
        hi = np.full(d, np.inf) if self.upper is None else np.broadcast_to(self.upper, (d,))
        lo = _as_float_array(lo, 1, "lower")
        hi = _as_float_array(hi, 1, "upper")
        if np.any(lo > hi):
            raise ValueError("lower bound exceeds upper bound")
        if d > m:
            raise ValueError("effective dimension cannot exceed ambient dimension")
        if np.linalg.svd(A, compute_uv=False).min() <= 1e-9:
            raise ValueError("chart_matrix must have full column rank")
        for name, val in zip(
            ("chart_matrix", "chart_offset", "constraint_matrix", "constraint_bounds", "lower", "upper"),
            (A, b, G, h, lo, hi),
        ):
            object.__setattr__(self, name, val)

    # -- constructors ------------------------------------------------------

    @classmethod
    def box(cls, m: int, low: float = 0.0, high: float = 1.0) -> "StrategySpace":
        """The box ``[low, high]^m`` with the identity chart."""
        return cls(np.eye(m), np.zeros(m), lower=np.full(m, low), upper=np.full(m, high))

    @classmethod
    def simplex(cls, m: int) -> "StrategySpace":
        """Probability simplex in ``R^m``; the last coordinate is eliminated."""
        if m < 2:
            raise ValueError("simplex needs m >= 2")
        A = np.vstack([np.eye(m - 1), -np.ones((1, m - 1))])
        b = np.zeros(m)
        b[-1] = 1.0
        return cls(A, b, np.ones((1, m - 1)), np.ones(1), np.zeros(m - 1), np.ones(m - 1))

    @classmethod
    def budget_box(cls, m: int, budget: float) -> "StrategySpace":
        """Coverage vectors ``x in [0, 1]^m`` with ``sum(x) <= budget``."""
        return cls(np.eye(m), np.zeros(m), np.ones((1, m)), [float(budget)], np.zeros(m), np.ones(m))

    @classmethod
    def segment(cls, start, end) -> "StrategySpace":
        """The segment ``start + t (end - start)``, ``t in [0, 1]``."""
        start = np.asarray(start, dtype=float)
        direction = np.asarray(end, dtype=float) - start
        return cls(direction[:, None], start, lower=[0.0], upper=[1.0])

    # -- basic properties --------------------------------------------------

    @property
    def ambient_dim(self) -> int:
        return self.chart_matrix.shape[0]

    @property
    def effective_dim(self) -> int:
        return self.chart_matrix.shape[1]

    @property
    def is_identity_chart(self) -> bool:
        m, d = self.chart_matrix.shape
        return m == d and np.array_equal(self.chart_matrix, np.eye(m)) and not self.chart_offset.any()

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        """Finite box enclosing the feasible effective coordinates."""
        lo, hi = self.lower.copy(), self.upper.copy()
        if np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)):
            return lo, hi
        from scipy.optimize import linprog

        d = self.effective_dim
        bounds = [(None if np.isinf(a) else a, None if np.isinf(b) else b) for a, b in zip(self.lower, self.upper)]
        for i in range(d):
            for sign, target in ((1.0, lo), (-1.0, hi)):
                c = np.zeros(d)
                c[i] = sign
                res = linprog(c, A_ub=self.constraint_matrix if len(self.constraint_bounds) else None,
                              b_ub=self.constraint_bounds if len(self.constraint_bounds) else None,
                              bounds=bounds, method="highs")
                if res.status != 0:
                    raise ValueError("strategy space is unbounded or empty")
                target[i] = res.x[i]
        return lo, hi

    def interval(self) -> tuple[float, float]:
        """Feasible range of ``t`` for a one-dimensional space."""
        if self.effective_dim != 1:
            raise ValueError("interval() needs effective dimension 1")
        lo, hi = float(self.lower[0]), float(self.upper[0])
        for g, h in zip(self.constraint_matrix[:, 0], self.constraint_bounds):
            if g > 0:
                hi = min(hi, h / g)
            elif g < 0:
                lo = max(lo, h / g)
            elif h < 0:
                raise ValueError("strategy space is empty")
        return lo, hi

    def diameter(self) -> float:
        """Diameter of the bounding box in effective coordinates."""
        lo, hi = self.bounding_box()
        return float(np.linalg.norm(hi - lo))

    # -- coordinates and feasibility --------------------------------------

    def embed(self, t) -> np.ndarray:
        """Map effective coordinates (shape ``(..., d)``) to ambient strategies."""
        t = np.asarray(t, dtype=float)
        return t @ self.chart_matrix.T + self.chart_offset

    def to_effective(self, x) -> np.ndarray:
        """Least-squares inverse of :meth:`embed`."""
        x = np.asarray(x, dtype=float)
        sol, *_ = np.linalg.lstsq(self.chart_matrix, (x - self.chart_offset).T, rcond=None)
        return sol.T

    def slack(self, t) -> np.ndarray:
        """Euclidean distance from ``t`` to the nearest face (negative if infeasible)."""
        t = np.asarray(t, dtype=float)
        parts = [t - self.lower, self.upper - t]
        if len(self.constraint_bounds):
            norms = np.linalg.norm(self.constraint_matrix, axis=1)
            parts.append((self.constraint_bounds - t @ self.constraint_matrix.T) / norms)
        return np.min(np.concatenate(parts, axis=-1), axis=-1)

    def is_feasible(self, t, tol: float = TAU):
        return self.slack(t) >= -tol

    def contains_ball(self, center, radius: float, tol: float = TAU) -> bool:
        return bool(self.slack(center) >= radius - tol)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Uniform samples of feasible effective coordinates, by rejection."""
        lo, hi = self.bounding_box()
        out = np.empty((0, self.effective_dim))
        batch = max(64, 2 * size)
        for _ in range(10_000):
            cand = rng.uniform(lo, hi, size=(batch, self.effective_dim))
            out = np.vstack([out, cand[self.slack(cand) >= 0]])
            if len(out) >= size:
                return out[:size]
        raise ValueError("rejection sampling failed; is the space nearly empty?")

    # -- serialisation ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "ambient_dim": self.ambient_dim,
            "effective_dim": self.effective_dim,
            "chart_matrix": self.chart_matrix.tolist(),
            "chart_offset": self.chart_offset.tolist(),
            "param_constraints": [
                {"g": g.tolist(), "h": float(h)} for g, h in zip(self.constraint_matrix, self.constraint_bounds)
            ],
            "bounds": {"lower": _finite_or_none(self.lower), "upper": _finite_or_none(self.upper)},
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "StrategySpace":
        d = int(data["effective_dim"])
        cons = data.get("param_constraints", [])
        bounds = data.get("bounds", {})
        space = cls(
            np.reshape(data["chart_matrix"], (int(data["ambient_dim"]), d)),
            data["chart_offset"],
            np.reshape([c["g"] for c in cons], (-1, d)),
            [c["h"] for c in cons],
            _none_to_inf(bounds.get("lower"), d, -np.inf),
            _none_to_inf(bounds.get("upper"), d, np.inf),
        )
        return space


def _finite_or_none(arr: np.ndarray) -> list:
    return [float(v) if np.isfinite(v) else None for v in arr]


def _none_to_inf(values, d: int, fill: float) -> np.ndarray:
    if values is None:
        return np.full(d, fill)
    return np.array([fill if v is None else v for v in values], dtype=float)


# ---------------------------------------------------------------------------
# Agents and games


@dataclass(frozen=True, eq=False)
class AgentType:
    """Linear utilities ``V(x, j) = <v_j, x> + c_j`` of one private type.

    ``directions`` has shape ``(n, m)``: row ``j`` is ``v_j``.
    """

    directions: np.ndarray
    intercepts: np.ndarray
    type_id: Hashable = 0

    def __post_init__(self):
        V = _as_float_array(self.directions, 2, "directions")
        c = _as_float_array(self.intercepts, 1, "intercepts")
        if V.shape[0] != c.shape[0]:
            raise ValueError("directions and intercepts disagree on the action count")
        if V.shape[0] < 2:
            raise ValueError("an agent type needs at least two actions")
        if not (np.all(np.isfinite(V)) and np.all(np.isfinite(c))):
            raise ValueError("utility parameters must be finite")
        object.__setattr__(self, "directions", V)
        object.__setattr__(self, "intercepts", c)

    @property
    def n_actions(self) -> int:
        return self.directions.shape[0]

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    def utilities(self, x) -> np.ndarray:
        """Utilities of every action at ``x`` (shape ``(..., m)`` -> ``(..., n)``).

        Evaluated as an elementwise product and sum rather than a matrix
        product, so a strategy gets bit-identical values alone or in a batch.
        """
        x = np.asarray(x, dtype=float)
        return (x[..., None, :] * self.directions).sum(axis=-1) + self.intercepts

    def effective(self, space: StrategySpace) -> tuple[np.ndarray, np.ndarray]:
        """Gradients ``A^T v_j`` and intercepts ``<v_j, b> + c_j`` in chart coordinates."""
        W = self.directions @ space.chart_matrix
        c = self.directions @ space.chart_offset + self.intercepts
        return W, c

    def to_dict(self) -> dict:
        return {"id": self.type_id, "directions": self.directions.tolist(), "intercepts": self.intercepts.tolist()}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "AgentType":
        return cls(data["directions"], data["intercepts"], data["id"])


@dataclass(frozen=True, eq=False)
class GameInstance:
    """A strategy space together with the finite set of candidate agent types."""

    space: StrategySpace
    types: tuple
    game_class: str = "generic"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        types = tuple(self.types)
        if not types:
            raise ValueError("a game needs at least one agent type")
        n, m = types[0].n_actions, types[0].dim
        if any(t.n_actions != n or t.dim != m for t in types):
            raise ValueError("all types must share the action count and dimension")
        if m != self.space.ambient_dim:
            raise ValueError("type dimension does not match the strategy space")
        ids = [t.type_id for t in types]
        if len(set(ids)) != len(ids):
            raise ValueError("type ids must be distinct")
        if self.game_class not in GAME_CLASSES:
            raise ValueError(f"unknown game class {self.game_class!r}")
        object.__setattr__(self, "types", types)

    @property
    def n_actions(self) -> int:
        return self.types[0].n_actions

    @property
    def n_types(self) -> int:
        return len(self.types)

    def type_by_id(self, type_id) -> AgentType:
        for t in self.types:
            if t.type_id == type_id:
                return t
        raise KeyError(type_id)

    def with_space(self, space: StrategySpace) -> "GameInstance":
        """Same types re-expressed on another chart (e.g. a 1-D slice)."""
        return GameInstance(space, self.types, self.game_class, dict(self.metadata))

    def to_dict(self) -> dict:
        out = self.space.to_dict()
        out["types"] = [t.to_dict() for t in self.types]
        out["class"] = self.game_class
        out["metadata"] = _jsonable(self.metadata)
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "GameInstance":
        space = StrategySpace.from_dict(data)
        types = tuple(AgentType.from_dict(t) for t in data["types"])
        return cls(space, types, data.get("class", "generic"), dict(data.get("metadata", {})))

    @classmethod
    def from_json(cls, text: str) -> "GameInstance":
        return cls.from_dict(json.loads(text))


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Mapping):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


# ---------------------------------------------------------------------------
# Tie-breaking and best responses


@dataclass(frozen=True)
class TieBreakRule:
    """How an indifferent agent picks among its utility-maximal actions.

    ``preferences`` maps a type id to an ordered tuple of actions; the first
    listed action inside the maximal set wins.  Types without an entry (or
    whose listed actions are all non-maximal) take the lowest index.
    """

    preferences: Mapping[Hashable, tuple] = field(default_factory=dict)
    tau: float = TAU

    def select(self, type_id, maximal: Sequence[int]) -> int:
        for a in self.preferences.get(type_id, ()):
            if a in maximal:
                return int(a)
        return int(min(maximal))


DEFAULT_RULE = TieBreakRule()


def utility(agent_type: AgentType, x, j: int) -> float:
    """``<v_j, x> + c_j``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (agent_type.dim,):
        raise ValueError(f"strategy must have length {agent_type.dim}")
    if not 0 <= j < agent_type.n_actions:
        raise IndexError(f"action {j} out of range")
    return float(agent_type.utilities(x)[j])


def maximal_actions(values: np.ndarray, tau: float = TAU) -> list[int]:
    return np.flatnonzero(values >= values.max() - tau).tolist()


def best_response(agent_type: AgentType, x, rule: TieBreakRule | None = None) -> int:
    rule = rule or DEFAULT_RULE
    x = np.asarray(x, dtype=float)
    if x.shape != (agent_type.dim,):
        raise ValueError(f"strategy must have length {agent_type.dim}")
    return rule.select(agent_type.type_id, maximal_actions(agent_type.utilities(x), rule.tau))


# ---------------------------------------------------------------------------
# Menus


@dataclass(frozen=True, eq=False)
class FiniteMenu:
    """A finite list of ambient strategies (a single item is a plain query)."""

    items: np.ndarray
    tie_break: TieBreakRule | None = None

    def __post_init__(self):
        items = np.atleast_2d(np.asarray(self.items, dtype=float))
        if items.shape[0] == 0 or items.size == 0:
            raise ValueError("menu must contain at least one strategy")
        items.setflags(write=False)
        object.__setattr__(self, "items", items)

    def __len__(self):
        return self.items.shape[0]

    def index_of(self, x, tol: float = TAU) -> int:
        hits = np.flatnonzero(np.all(np.abs(self.items - np.asarray(x)) <= tol, axis=1))
        return int(hits[0]) if len(hits) else -1

    def to_dict(self) -> dict:
        return {"kind": "finite", "items": self.items.tolist()}


@dataclass(frozen=True, eq=False)
class BallMenu:
    """All strategies within Euclidean ``radius`` of ``center`` (effective coordinates)."""

    center: np.ndarray
    radius: float
    tie_break: TieBreakRule | None = None

    def __post_init__(self):
        object.__setattr__(self, "center", _as_float_array(self.center, 1, "center"))
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")
        object.__setattr__(self, "radius", float(self.radius))

    def to_dict(self) -> dict:
        return {"kind": "ball", "center": self.center.tolist(), "radius": self.radius}


Menu = Union[FiniteMenu, BallMenu]


def menu_from_dict(data: Mapping[str, Any]) -> Menu:
    if data["kind"] == "finite":
        return FiniteMenu(data["items"])
    return BallMenu(data["center"], data["radius"])


def _finite_choice(agent_type: AgentType, items: np.ndarray, rule: TieBreakRule) -> tuple[int, int]:
    values = agent_type.utilities(items).max(axis=1)
    k = int(np.argmax(values))
    return k, best_response(agent_type, items[k], rule)


def choose_from_finite_menu(agent_type: AgentType, menu: FiniteMenu, rule: TieBreakRule | None = None):
    """The agent's favourite ``(strategy, action)`` pair on a finite menu.

    Items are compared by their best achievable utility; equal items go to the
    lowest menu index, and the action is then chosen by ``rule``.
    """
    if not isinstance(menu, FiniteMenu):
        menu = FiniteMenu(menu)
    rule = rule or menu.tie_break or DEFAULT_RULE
    k, j = _finite_choice(agent_type, menu.items, rule)
    return menu.items[k].copy(), j


def ball_choices(W: np.ndarray, c: np.ndarray, center: np.ndarray, radius: float):
    """Vectorised ball-menu choice for stacked effective parameters.

    ``W`` has shape ``(..., n, d)`` and ``c`` shape ``(..., n)``.  Returns the
    per-action scores ``<w_j, t> + c_j + radius |w_j|`` and the maximising
    point for every action.
    """
    norms = np.linalg.norm(W, axis=-1)
    scores = W @ center + c + radius * norms
    safe = np.where(norms < 1e-12, 1.0, norms)
    step = np.where((norms < 1e-12)[..., None], 0.0, W / safe[..., None])
    points = center + radius * step
    return scores, points


def choose_from_ball_menu(agent_type: AgentType, space: StrategySpace, center, radius: float,
                          rule: TieBreakRule | None = None):
    """The agent's favourite ``(strategy, action)`` pair on a ball menu.

    For each action the best point of the ball lies at ``center + radius *
    w_j / |w_j|``; the agent then takes the action with the highest such value.
    Returns the ambient strategy.
    """
    rule = rule or DEFAULT_RULE
    center = np.asarray(center, dtype=float)
    if center.shape != (space.effective_dim,):
        raise ValueError("ball center must be in effective coordinates")
    if not space.contains_ball(center, radius):
        raise InfeasibleError("ball menu is not contained in the strategy space")
    W, c = agent_type.effective(space)
    scores, points = ball_choices(W, c, center, radius)
    j = rule.select(agent_type.type_id, maximal_actions(scores, rule.tau))
    return space.embed(points[j]), j


# ---------------------------------------------------------------------------
# Agents and transcripts


class SimulatedAgent:
    """A myopic agent of known type that answers menus exactly.

    A menu may carry its own :class:`TieBreakRule`, modelling a principal who
    specifies how indifferences are resolved.
    """

    def __init__(self, agent_type: AgentType, space: StrategySpace, tie_break: TieBreakRule | None = None):
        self.agent_type = agent_type
        self.space = space
        self.tie_break = tie_break or DEFAULT_RULE
        self.queries = 0

    def respond(self, menu: Menu) -> tuple[np.ndarray, int]:
        self.queries += 1
        rule = menu.tie_break or self.tie_break
        if isinstance(menu, BallMenu):
            return choose_from_ball_menu(self.agent_type, self.space, menu.center, menu.radius, rule)
        return choose_from_finite_menu(self.agent_type, menu, rule)

    def best_response(self, x) -> int:
        """Single-strategy oracle (also counted as a query)."""
        return self.respond(FiniteMenu([x]))[1]


@dataclass(frozen=True, eq=False)
class Round:
    menu: Menu
    chosen: np.ndarray
    action: int

    def to_dict(self) -> dict:
        return {"menu": self.menu.to_dict(), "chosen": np.asarray(self.chosen).tolist(), "action": int(self.action)}


@dataclass(eq=False)
class Transcript:
    rounds: list = field(default_factory=list)

    @property
    def round_count(self) -> int:
        return len(self.rounds)

    def to_list(self) -> list:
        return [r.to_dict() for r in self.rounds]

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_list(), **kwargs)

    @classmethod
    def from_list(cls, data: Sequence[Mapping[str, Any]]) -> "Transcript":
        return cls([Round(menu_from_dict(r["menu"]), np.asarray(r["chosen"], dtype=float), int(r["action"]))
                    for r in data])

    @classmethod
    def from_json(cls, text: str) -> "Transcript":
        return cls.from_list(json.loads(text))


class Dialogue:
    """A principal's side of the interaction: posts menus and logs every round.

    Observations are checked for membership in the posted menu; an agent that
    picks something it was not offered raises :class:`NoMatchError`.
    """

    def __init__(self, agent, space: StrategySpace, transcript: Transcript | None = None):
        self.agent = agent
        self.space = space
        self.transcript = transcript if transcript is not None else Transcript()

    def post(self, menu: Menu) -> tuple[np.ndarray, int]:
        if isinstance(menu, BallMenu) and not self.space.contains_ball(menu.center, menu.radius):
            raise InfeasibleError("ball menu is not contained in the strategy space")
        chosen, action = self.agent.respond(menu)
        chosen = np.asarray(chosen, dtype=float)
        if isinstance(menu, BallMenu):
            t = self.space.to_effective(chosen)
            if np.linalg.norm(t - menu.center) > menu.radius + TAU:
                raise NoMatchError("agent chose a strategy outside the posted ball")
        elif menu.index_of(chosen) < 0:
            raise NoMatchError("agent chose a strategy that was not on the menu")
        self.transcript.rounds.append(Round(menu, chosen, int(action)))
        return chosen, int(action)

    def probe(self, x, tie_break: TieBreakRule | None = None) -> int:
        """Post a single strategy and return the agent's response."""
        return self.post(FiniteMenu([x], tie_break))[1]

    @property
    def rounds(self) -> int:
        return self.transcript.round_count


def check_transcript(transcript: Transcript, space: StrategySpace) -> None:
    """Raise if any recorded choice lies outside its posted menu."""
    for i, r in enumerate(transcript.rounds):
        if isinstance(r.menu, BallMenu):
            t = space.to_effective(r.chosen)
            ok = np.linalg.norm(t - r.menu.center) <= r.menu.radius + TAU
        else:
            ok = r.menu.index_of(r.chosen) >= 0
        if not ok:
            raise MenuProbeError(f"round {i}: chosen strategy not in the posted menu")


OracleFn = Callable[[np.ndarray], int]
