"""Best-response geometry: 1-D upper envelopes, region probes, interior
points, hyperplane bisection and the hyperplane link solve."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import TAU, AgentType, GameInstance, StrategySpace, best_response
from .errors import (
    DegenerateInstanceError,
    DegenerateSpreadError,
    GateError,
    InfeasibleError,
    NonPositiveScaleError,
    SameResponseError,
)

_CROSS_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Envelope1D:
    """Upper envelope ``max_j (slope_j t + intercept_j)`` on ``[0, 1]``.

    Segment ``s`` spans ``[breakpoints[s], breakpoints[s + 1]]`` and is
    attained by ``actions[s]``.
    """

    breakpoints: np.ndarray
    actions: np.ndarray
    slopes: np.ndarray
    intercepts: np.ndarray

    @property
    def n_segments(self) -> int:
        return len(self.actions)

    def segment_index(self, t) -> np.ndarray:
        inner = self.breakpoints[1:-1]
        return np.searchsorted(inner, t, side="right")

    def value(self, t):
        s = self.segment_index(t)
        return self.slopes[s] * t + self.intercepts[s]

    def action_at(self, t):
        return self.actions[self.segment_index(t)]

    def transitions(self) -> list[tuple[float, int, int]]:
        """Interior breakpoints as ``(t, incoming action, outgoing action)``."""
        return [(float(self.breakpoints[s + 1]), int(self.actions[s]), int(self.actions[s + 1]))
                for s in range(self.n_segments - 1)]


def upper_envelope(slopes, intercepts, lo: float = 0.0, hi: float = 1.0) -> Envelope1D:
    """Exact upper envelope of lines on ``[lo, hi]``.

    Walks left to right; at every crossing the steepest line takes over.
    Identical lines collapse onto the lowest index.
    """
    s = np.asarray(slopes, dtype=float)
    c = np.asarray(intercepts, dtype=float)
    start = c + s * lo
    top = start.max()
    tied = np.flatnonzero(start >= top - _CROSS_TOL * max(1.0, abs(top)))
    cur = int(tied[np.lexsort((tied, -s[tied]))[0]])
    breaks, acts = [lo], [cur]
    t0 = lo
    while True:
        steeper = np.flatnonzero(s > s[cur])
        if len(steeper) == 0:
            break
        cross = (c[cur] - c[steeper]) / (s[steeper] - s[cur])
        cross = np.maximum(cross, t0)
        first = cross.min()
        if first >= hi:
            break
        near = steeper[cross <= first + _CROSS_TOL]
        cur = int(near[np.lexsort((near, -s[near]))[0]])
        breaks.append(float(first))
        acts.append(cur)
        t0 = first
    breaks.append(hi)
    acts = np.array(acts, dtype=int)
    return Envelope1D(np.array(breaks), acts, s[acts].copy(), c[acts].copy())


def _require_unit_interval(space: StrategySpace) -> None:
    if space.effective_dim != 1:
        raise GateError(f"needs a one-dimensional strategy space, got d={space.effective_dim}")
    lo, hi = space.interval()
    if abs(lo) > TAU or abs(hi - 1.0) > TAU:
        raise GateError(f"effective interval must be [0, 1], got [{lo}, {hi}]")


def build_envelope(agent_type: AgentType, space: StrategySpace) -> Envelope1D:
    """Upper envelope of a type's utility over a one-dimensional space."""
    _require_unit_interval(space)
    W, c = agent_type.effective(space)
    return upper_envelope(W[:, 0], c)


def envelope_minimizer(env: Envelope1D) -> float:
    """Leftmost minimiser of a convex envelope."""
    rising = np.flatnonzero(env.slopes >= 0)
    if len(rising) == 0:
        return float(env.breakpoints[-1])
    return float(env.breakpoints[rising[0]])


# ---------------------------------------------------------------------------
# Region probes and interior points


@dataclass(frozen=True, eq=False)
class RegionProbe:
    point: np.ndarray
    actions: tuple
    margins: np.ndarray


def _top_two_gap(values: np.ndarray) -> np.ndarray:
    part = np.partition(values, -2, axis=-1)
    return part[..., -1] - part[..., -2]


def probe_regions(game: GameInstance, t) -> RegionProbe:
    """Every type's best action and top-two utility gap at ``t``."""
    t = np.asarray(t, dtype=float)
    if not game.space.is_feasible(t):
        raise InfeasibleError("probe point is infeasible")
    x = game.space.embed(t)
    actions = tuple(best_response(ty, x) for ty in game.types)
    margins = np.array([_top_two_gap(ty.utilities(x)) for ty in game.types])
    return RegionProbe(t, actions, margins)


def _stacked_effective(game: GameInstance) -> tuple[np.ndarray, np.ndarray]:
    pairs = [ty.effective(game.space) for ty in game.types]
    return np.stack([p[0] for p in pairs]), np.stack([p[1] for p in pairs])


def certified_radius(game: GameInstance, points: np.ndarray) -> np.ndarray:
    """Radius around each point within which no type's best response changes.

    Uses the smallest top-two gap over types divided by twice the largest
    effective gradient norm, capped by the distance to the space boundary.
    Non-positive where some type is (near) indifferent or the point is infeasible.
    """
    W, c = _stacked_effective(game)                       # (K, n, d), (K, n)
    values = np.einsum("knd,pd->pkn", W, points) + c      # (p, K, n)
    margin = _top_two_gap(values).min(axis=1)
    lip = 2.0 * np.linalg.norm(W, axis=-1).max()
    radius = np.full(len(points), np.inf) if lip == 0 else margin / lip
    radius = np.where(margin > TAU, radius, 0.0)
    return np.minimum(radius, game.space.slack(points))


def find_interior_point(game: GameInstance, attempts: int = 512, seed: int = 0) -> tuple[np.ndarray, float]:
    """A strictly feasible point with a certified fixed-response radius.

    Samples ``attempts`` feasible points and keeps the one with the largest
    certified radius.
    """
    rng = np.random.default_rng(seed)
    pts = game.space.sample(rng, attempts)
    radius = certified_radius(game, pts)
    best = int(np.argmax(radius))
    if not radius[best] > 0:
        raise DegenerateInstanceError(f"no point with strictly fixed responses in {attempts} attempts")
    return pts[best], float(radius[best])


# ---------------------------------------------------------------------------
# Hyperplane search


@dataclass(frozen=True, eq=False)
class HyperplanePoint:
    point: np.ndarray
    side_actions: tuple
    bracket: tuple
    queries: int


def bisect_hyperplane(oracle: Callable[[np.ndarray], int], x_a, x_b, precision_bits: int, *,
                      actions: Sequence[int] | None = None,
                      side: Callable[[int], bool] | None = None) -> HyperplanePoint:
    """Binary search for a point where the best response switches.

    ``oracle(x)`` returns the agent's action at ``x``.  Each of the
    ``precision_bits`` steps halves the bracket, so the final bracket is
    ``|x_b - x_a| * 2**-precision_bits`` long.  A midpoint action counts as
    the ``a`` side when ``side(action)`` holds (default: it equals the action
    at ``x_a``); any other action, including a third one, replaces the ``b``
    end.  Endpoint actions are queried unless supplied in ``actions``.
    """
    a = np.asarray(x_a, dtype=float)
    b = np.asarray(x_b, dtype=float)
    queries = 0
    if actions is None:
        ja, jb = oracle(a), oracle(b)
        queries += 2
    else:
        ja, jb = actions
    if ja == jb:
        raise SameResponseError(f"both endpoints elicit action {ja}")
    on_a = side if side is not None else (lambda j, ja0=ja: j == ja0)
    if not on_a(ja) or on_a(jb):
        raise ValueError("endpoint actions are not on opposite sides")
    for _ in range(precision_bits):
        mid = 0.5 * (a + b)
        j = oracle(mid)
        queries += 1
        if on_a(j):
            a, ja = mid, j
        else:
            b, jb = mid, j
    return HyperplanePoint(0.5 * (a + b), (int(ja), int(jb)), (a, b), queries)


def solve_link(known: tuple[float, float], dir_known, dir_unknown, points) -> tuple[float, float]:
    """Scale and intercept of a neighbouring action from points on the shared hyperplane.

    On the hyperplane ``lam_k <u_k, x> + c_k = lam_u <u_u, x> + c_u``; with the
    left side known this is a least-squares line fit for ``(lam_u, c_u)``.
    """
    lam_k, c_k = known
    if not lam_k > 0:
        raise NonPositiveScaleError("known scale must be positive")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if len(pts) < 2:
        raise DegenerateSpreadError("need at least two hyperplane points")
    proj = pts @ np.asarray(dir_unknown, dtype=float)
    if np.ptp(proj) <= 1e-6:
        raise DegenerateSpreadError(f"projection spread {np.ptp(proj):.3g} too small")
    lhs = lam_k * (pts @ np.asarray(dir_known, dtype=float)) + c_k
    design = np.column_stack([proj, np.ones(len(pts))])
    (lam_u, c_u), *_ = np.linalg.lstsq(design, lhs, rcond=None)
    if not lam_u > 0:
        raise NonPositiveScaleError(f"solved scale {lam_u:.3g} is not positive")
    return float(lam_u), float(c_u)
