"""Reconstructing an arbitrary linear-utility agent from ball menus and
single-strategy queries.

Utilities are only identifiable up to a common positive scale and a common
additive shift, so reconstructions are expressed in a fixed gauge: the
reference action (action 0) gets scale 1 and intercept 0.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..core import AgentType, BallMenu, Dialogue, StrategySpace
from ..errors import (
    DegenerateInstanceError,
    DegenerateSpreadError,
    GateError,
    NonPositiveScaleError,
    SameResponseError,
    ShrinkExhaustedError,
)
from ..geometry import _top_two_gap, bisect_hyperplane, solve_link
from .finite import LearnerResult

MAX_HALVINGS = 64
POINTS_PER_HYPERPLANE = 4


@dataclass(frozen=True, eq=False)
class ReconstructedType:
    """Unit gradient directions, scales and intercepts of every action.

    Actions listed in ``unresolved`` could not be linked to the reference
    action; their scale and intercept are NaN.
    """

    directions: np.ndarray
    scales: np.ndarray
    intercepts: np.ndarray
    reference_action: int = 0
    precision_bits: int = 40
    unresolved: tuple = ()

    @property
    def n_actions(self) -> int:
        return self.directions.shape[0]

    @property
    def complete(self) -> bool:
        return not self.unresolved

    def utilities(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        grads = self.scales[:, None] * self.directions
        vals = x @ np.nan_to_num(grads).T + np.nan_to_num(self.intercepts)
        return np.where(np.isnan(self.scales), -np.inf, vals)

    def to_agent_type(self, type_id="reconstructed") -> AgentType:
        if self.unresolved:
            raise ValueError(f"actions {self.unresolved} are unresolved")
        return AgentType(self.scales[:, None] * self.directions, self.intercepts, type_id)

    def max_abs_difference(self, other: "ReconstructedType") -> float:
        return float(max(np.abs(self.directions - other.directions).max(),
                         np.abs(self.scales - other.scales).max(),
                         np.abs(self.intercepts - other.intercepts).max()))

    def to_dict(self) -> dict:
        def clean(arr):
            return [None if np.isnan(v) else float(v) for v in arr]

        return {
            "directions": self.directions.tolist(),
            "scales": clean(self.scales),
            "intercepts": clean(self.intercepts),
            "normalization": {"reference_action": self.reference_action, "scale": 1.0, "intercept": 0.0},
            "precision_bits": self.precision_bits,
            "unresolved": list(self.unresolved),
        }

    @classmethod
    def from_dict(cls, data) -> "ReconstructedType":
        def arr(values):
            return np.array([np.nan if v is None else v for v in values], dtype=float)

        return cls(np.array(data["directions"], dtype=float), arr(data["scales"]), arr(data["intercepts"]),
                   data["normalization"]["reference_action"], data["precision_bits"], tuple(data["unresolved"]))


def normalize_type(agent_type: AgentType, reference: int = 0, precision_bits: int = 0) -> ReconstructedType:
    """Express a known type in the reconstruction gauge (for comparisons)."""
    V, c = agent_type.directions, agent_type.intercepts
    norms = np.linalg.norm(V, axis=1)
    if norms[reference] == 0:
        raise ValueError("reference action has a zero gradient")
    return ReconstructedType(V / norms[:, None], norms / norms[reference], (c - c[reference]) / norms[reference],
                             reference, precision_bits)


@dataclass(frozen=True, eq=False)
class OracleStrategies:
    """One strategy per action at which the agent is known to play that action."""

    points: Mapping[int, np.ndarray]

    def __post_init__(self):
        object.__setattr__(self, "points", {int(j): np.asarray(x, dtype=float) for j, x in dict(self.points).items()})

    def __len__(self):
        return len(self.points)

    def as_array(self) -> np.ndarray:
        n = len(self.points)
        if sorted(self.points) != list(range(n)):
            raise ValueError("oracle strategies must cover actions 0..n-1")
        return np.stack([self.points[j] for j in range(n)])

    def validate(self, probe) -> None:
        for j, x in self.points.items():
            got = probe(x)
            if got != j:
                raise GateError(f"oracle strategy for action {j} elicits action {got}")


def _hyperplane_points(dialogue: Dialogue, space: StrategySpace, first, p: int, q: int, bits: int,
                       rng: np.random.Generator, count: int = POINTS_PER_HYPERPLANE) -> list:
    """Points on the ``p``/``q`` boundary near an already located one.

    Short segments parallel to the original crossing, shifted sideways by a
    random offset, are bisected; each needs both ends to respond ``p`` and
    ``q`` and is discarded otherwise.
    """
    a, b = first.bracket
    normal = a - b
    normal /= np.linalg.norm(normal)
    z = first.point
    pts = [z]
    base = 0.02 * space.diameter()
    for attempt in range(30):
        if len(pts) >= count:
            break
        shift = base * 0.5 ** (attempt // 3)
        reach = shift * (2, 8, 32)[attempt % 3]
        u = rng.normal(size=z.shape)
        u -= (u @ normal) * normal
        if np.linalg.norm(u) < 1e-12:
            continue
        u /= np.linalg.norm(u)
        xa = z + shift * u + reach * normal
        xb = z + shift * u - reach * normal
        if not (space.is_feasible(xa) and space.is_feasible(xb)):
            continue
        if dialogue.probe(xa) != p or dialogue.probe(xb) != q:
            continue
        hit = bisect_hyperplane(dialogue.probe, xa, xb, bits, actions=(p, q))
        if hit.side_actions == (p, q):
            pts.append(hit.point)
    return pts


def learn_infinite_type(agent, oracle_strats: OracleStrategies, space: StrategySpace, precision_bits: int = 40,
                        seed: int = 0) -> LearnerResult:
    """Recover an agent's utilities up to scale and shift.

    1. Around each oracle strategy, a ball menu whose radius is halved until
       the agent answers with the promised action; the chosen point's offset
       from the centre is the unit gradient of that action.
    2. Starting from action 0, repeatedly bisect between a known region and an
       unknown one, sample points on the boundary found, and solve the
       utility-equality condition there for the unknown scale and intercept.
    """
    if space.effective_dim < 2 or not space.is_identity_chart:
        raise GateError("the infinite-type learner needs an identity chart with dimension >= 2")
    anchors = oracle_strats.as_array()
    n, m = anchors.shape
    if m != space.ambient_dim:
        raise GateError("oracle strategies do not match the strategy space")
    rng = np.random.default_rng(seed)
    dialogue = Dialogue(agent, space)
    oracle_strats.validate(dialogue.probe)

    directions = np.empty((n, m))
    radii = np.empty(n)
    diam = space.diameter()
    for j in range(n):
        rho = min(0.1 * diam, float(space.slack(anchors[j])))
        if not rho > 0:
            raise ShrinkExhaustedError(f"oracle strategy for action {j} is on the boundary")
        for _ in range(MAX_HALVINGS + 1):
            chosen, r = dialogue.post(BallMenu(anchors[j], rho))
            if r == j:
                break
            rho /= 2
        else:
            raise ShrinkExhaustedError(f"action {j} never chosen after {MAX_HALVINGS} halvings")
        step = (chosen - anchors[j]) / rho
        if np.linalg.norm(step) < 1e-9:
            raise DegenerateInstanceError(f"action {j} has a zero utility gradient")
        directions[j] = step / np.linalg.norm(step)
        radii[j] = rho

    reference = 0
    scales = np.full(n, np.nan)
    intercepts = np.full(n, np.nan)
    scales[reference], intercepts[reference] = 1.0, 0.0
    known = {reference}
    links = []
    tried = set()
    progress = True
    while len(known) < n and progress:
        progress = False
        for target in range(n):
            if target in known:
                continue
            for k in sorted(known):
                snapshot = frozenset(known)
                if (k, target, snapshot) in tried:
                    continue
                tried.add((k, target, snapshot))
                try:
                    first = bisect_hyperplane(dialogue.probe, anchors[k], anchors[target], precision_bits,
                                              actions=(k, target), side=snapshot.__contains__)
                except SameResponseError:
                    continue
                p, q = first.side_actions
                pts = _hyperplane_points(dialogue, space, first, p, q, precision_bits, rng)
                try:
                    lam, c = solve_link((scales[p], intercepts[p]), directions[p], directions[q], pts)
                except (DegenerateSpreadError, NonPositiveScaleError):
                    continue
                scales[q], intercepts[q] = lam, c
                known.add(q)
                links.append((p, q, len(pts)))
                progress = True
                break

    unresolved = tuple(j for j in range(n) if j not in known)
    if unresolved:
        warnings.warn(f"could not link actions {unresolved} to the reference action", RuntimeWarning)
    recon = ReconstructedType(directions, scales, intercepts, reference, precision_bits, unresolved)
    return LearnerResult("infinite", dialogue.transcript, reconstruction=recon,
                         diagnostics={"links": links, "radii": radii, "queries": dialogue.rounds})


def behaviorally_equivalent(a, b: AgentType, space: StrategySpace, probes: int = 10_000,
                            margin_floor: float = 1e-6, seed: int = 0) -> tuple[bool, float]:
    """Compare best responses of ``a`` and ``b`` at uniform random strategies.

    Probes where ``b`` is within ``margin_floor`` of indifference are skipped.
    Returns whether no disagreement occurred and the disagreement rate.
    """
    rng = np.random.default_rng(seed)
    xs = space.embed(space.sample(rng, probes))
    ub = b.utilities(xs)
    keep = _top_two_gap(ub) >= margin_floor
    ua = a.utilities(xs)[keep]
    disagree = int(np.count_nonzero(np.argmax(ua, axis=1) != np.argmax(ub[keep], axis=1)))
    return disagree == 0, disagree / max(int(keep.sum()), 1)
