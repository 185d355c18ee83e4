"""Identification of the agent's type out of a known finite set."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..core import (
    TAU,
    BallMenu,
    Dialogue,
    FiniteMenu,
    GameInstance,
    TieBreakRule,
    Transcript,
    ball_choices,
    best_response,
    maximal_actions,
)
from ..errors import (
    AmbiguousMatchError,
    AssumptionViolation,
    GateError,
    IndistinguishableTypesError,
    NoMatchError,
)
from ..geometry import _stacked_effective, build_envelope, envelope_minimizer, find_interior_point
from .assumptions import (
    AssumptionReport,
    check_assumption_breakpoints,
    check_assumption_no_dominant,
    check_assumption_nonparallel,
)

MATCH_TOL = 10 * TAU
MINIMIZER_TOL = 1e-9


@dataclass(eq=False)
class LearnerResult:
    algorithm: str
    transcript: Transcript
    identified_type: Any = None
    reconstruction: Any = None
    assumption_report: AssumptionReport | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def rounds(self) -> int:
        return self.transcript.round_count

    def to_dict(self) -> dict:
        out = {"algorithm": self.algorithm}
        if self.reconstruction is not None:
            out["reconstruction"] = self.reconstruction.to_dict()
        else:
            out["identified_type"] = self.identified_type
        out["rounds"] = self.rounds
        out["transcript"] = self.transcript.to_list()
        out["assumption_report"] = None if self.assumption_report is None else self.assumption_report.to_dict()
        return out


# ---------------------------------------------------------------------------
# Single round with a ball menu


@dataclass(frozen=True, eq=False)
class BallDesign:
    """A ball menu together with every type's predicted choice on it."""

    menu: BallMenu
    predicted_points: np.ndarray    # (K, m) ambient
    predicted_actions: np.ndarray   # (K,)
    center_actions: np.ndarray      # (K,) best response at the centre
    report: AssumptionReport


def design_ball_menu(game: GameInstance, seed: int = 0, attempts: int = 512) -> BallDesign:
    """Pick a ball with fixed responses and predict each type's choice on it.

    The radius is half the certified radius of the best sampled interior point.
    Raises :class:`AssumptionViolation` if two types have parallel gradients.
    """
    if game.space.effective_dim < 2:
        raise GateError("single-round identification needs effective dimension >= 2")
    report = check_assumption_nonparallel(game)
    if not report.nonparallel_ok:
        raise AssumptionViolation("parallel gradients: " + report.violations[0].message, report)
    center, rho_max = find_interior_point(game, attempts, seed)
    radius = rho_max / 2
    W, c = _stacked_effective(game)
    scores, points = ball_choices(W, c, center, radius)
    actions = np.array([maximal_actions(s)[0] for s in scores])
    chosen = points[np.arange(game.n_types), actions]
    x_center = game.space.embed(center)
    at_center = np.array([best_response(ty, x_center) for ty in game.types])
    return BallDesign(BallMenu(center, radius), game.space.embed(chosen), actions, at_center, report)


def single_round_identify(game: GameInstance, agent, seed: int = 0, *, attempts: int = 512,
                          design: BallDesign | None = None) -> LearnerResult:
    """Identify the agent with one ball menu around an interior point.

    Types whose best response at the centre differs from the observed action
    are discarded; the rest are matched on the closed-form choice point.
    """
    design = design or design_ball_menu(game, seed, attempts)
    dialogue = Dialogue(agent, game.space)
    x_obs, j = dialogue.post(design.menu)
    cands = np.flatnonzero(design.center_actions == j)
    dist = np.linalg.norm(design.predicted_points[cands] - x_obs, axis=1)
    hits = cands[dist <= MATCH_TOL]
    if len(hits) == 0:
        raise NoMatchError("observed ball choice matches no candidate type")
    if len(hits) > 1:
        ids = [game.types[k].type_id for k in hits]
        raise AmbiguousMatchError(f"types {ids} predict the same choice")
    return LearnerResult("single-round", dialogue.transcript, game.types[hits[0]].type_id,
                         assumption_report=design.report,
                         diagnostics={"center": design.menu.center, "radius": design.menu.radius})


# ---------------------------------------------------------------------------
# One-dimensional spaces


@dataclass(frozen=True, eq=False)
class LinePlan:
    """Per-game precomputation shared by the one-dimensional learners.

    ``points`` holds ``t = 0`` followed by the midpoints of the merged
    breakpoint grid of all types; ``responses[k, p]`` is type ``k``'s best
    response at ``points[p]``.  ``clusters`` groups type indices by minimiser
    (ascending) and ``probes[i]`` is a separating ``(strategy, rule)`` for
    every multi-type cluster ``i`` (``None`` if there is none).
    """

    envelopes: tuple
    minimizers: np.ndarray
    grid: np.ndarray
    points: np.ndarray
    responses: np.ndarray
    report: AssumptionReport
    clusters: tuple = ()
    probes: dict = field(default_factory=dict)


def plan_line_game(game: GameInstance) -> LinePlan:
    envelopes = tuple(build_envelope(ty, game.space) for ty in game.types)
    minimizers = np.array([envelope_minimizer(e) for e in envelopes])
    grid = np.unique(np.concatenate([[0.0, 1.0]] + [e.breakpoints for e in envelopes]))
    points = np.concatenate([[0.0], 0.5 * (grid[1:] + grid[:-1])])
    xs = game.space.embed(points[:, None])
    responses = np.empty((game.n_types, len(points)), dtype=int)
    for k, ty in enumerate(game.types):
        values = ty.utilities(xs)
        responses[k] = np.argmax(values >= values.max(axis=1, keepdims=True) - TAU, axis=1)
    report = check_assumption_no_dominant(game).merge(check_assumption_breakpoints(game))
    clusters: list[tuple[float, list[int]]] = []
    for k in np.argsort(minimizers, kind="stable"):
        if clusters and minimizers[k] - clusters[-1][0] <= MINIMIZER_TOL:
            clusters[-1][1].append(int(k))
        else:
            clusters.append((float(minimizers[k]), [int(k)]))
    candidates = np.concatenate([grid, points[1:]])
    probes = {i: _separating_probe(game, ks, t, candidates)
              for i, (t, ks) in enumerate(clusters) if len(ks) > 1}
    return LinePlan(envelopes, minimizers, grid, points, responses, report,
                    tuple((t, tuple(ks)) for t, ks in clusters), probes)


def _injective_rule(game: GameInstance, members, allowed: np.ndarray) -> TieBreakRule | None:
    """Tie-break preferences giving each member a distinct allowed action, if possible.

    ``allowed[r, j]`` marks action ``j`` as maximal for ``members[r]``.
    """
    if len(members) > game.n_actions:
        return None
    rows, cols = linear_sum_assignment(np.where(allowed, 0.0, 1.0))
    if not np.all(allowed[rows, cols]):
        return None
    return TieBreakRule({game.types[members[r]].type_id: (int(c),) for r, c in zip(rows, cols)})


def _separating_probe(game: GameInstance, members, shared: float, candidates: np.ndarray):
    """A strategy and tie-break rule under which ``members`` all respond differently.

    The shared minimiser is tried first, then the other candidate points.
    Returns ``None`` if no such point exists.
    """
    if len(members) > game.n_actions:
        return None
    ts = np.concatenate([[shared], candidates])
    xs = game.space.embed(ts[:, None])
    values = np.stack([game.types[k].utilities(xs) for k in members], axis=1)   # (P, R, n)
    allowed = values >= values.max(axis=2, keepdims=True) - TAU
    for p in range(len(ts)):
        # cheap reject: two members forced onto the same single action
        single = allowed[p].sum(axis=1) == 1
        forced = np.argmax(allowed[p][single], axis=1)
        if len(forced) != len(set(forced.tolist())):
            continue
        rule = _injective_rule(game, members, allowed[p])
        if rule is not None:
            return xs[p], rule
    return None


def _greedy_disambiguate(game: GameInstance, plan: LinePlan, dialogue: Dialogue, members: list[int]) -> int:
    """Post single strategies, each maximising the number of distinct predicted
    responses, until one member is left."""
    xs = game.space.embed(np.concatenate([plan.grid, plan.points[1:]])[:, None])
    alive = list(members)
    while len(alive) > 1:
        table = [[best_response(game.types[k], x) for k in alive] for x in xs]
        splits = [len(set(row)) for row in table]
        best = int(np.argmax(splits))
        if splits[best] == 1:
            ids = [game.types[k].type_id for k in alive]
            raise IndistinguishableTypesError(f"types {ids} respond identically everywhere")
        j = dialogue.probe(xs[best])
        alive = [k for k, r in zip(alive, table[best]) if r == j]
        if not alive:
            raise NoMatchError(f"response {j} matches no surviving type")
    return alive[0]


def learn_via_menu(game: GameInstance, agent, *, plan: LinePlan | None = None) -> LearnerResult:
    """Halve the candidate set with two-item menus on a one-dimensional space.

    Types are sorted by the minimiser of their convex best-response envelope.
    Offered two adjacent minimisers ``x1 < x2``, an agent preferring ``x1`` must
    have its minimiser to the right of ``x1``.  Types sharing a minimiser are
    split in one extra round by their responses, under tie-break preferences
    that give each a different action.

    When some group of types sharing a minimiser cannot be split that way
    (typically several types minimised at an endpoint with the same single
    best response there), menu halving cannot meet its round bound.  If the
    breakpoint condition holds the whole run is then delegated to
    single-strategy halving (one-item menus); otherwise the group is split by
    greedy single-strategy probes after the halving.  ``diagnostics["mode"]``
    records which path ran.
    """
    plan = plan or plan_line_game(game)
    if not plan.report.no_dominant_ok:
        raise AssumptionViolation("dominant action: " + plan.report.violations[0].message, plan.report)
    space = game.space
    clusters, probes = plan.clusters, plan.probes
    if any(probe is None for probe in probes.values()) and plan.report.ok:
        inner = learn_via_single_strategy(game, agent, plan=plan)
        diagnostics = dict(inner.diagnostics, mode="single-strategy", minimizers=plan.minimizers)
        return LearnerResult("menu", inner.transcript, inner.identified_type,
                             assumption_report=plan.report, diagnostics=diagnostics)

    dialogue = Dialogue(agent, space)
    survivors_log = [[game.types[k].type_id for _, ks in clusters for k in ks]]
    index = list(range(len(clusters)))
    while len(index) > 1:
        h = len(index) // 2
        x1 = space.embed([clusters[index[h - 1]][0]])
        x2 = space.embed([clusters[index[h]][0]])
        # x2 listed first: an exact tie then resolves towards the left half,
        # where the leftmost minimiser of a flat-bottomed envelope lives.
        chosen, _ = dialogue.post(FiniteMenu([x2, x1]))
        index = index[h:] if np.allclose(chosen, x1, atol=TAU, rtol=0) else index[:h]
        survivors_log.append([game.types[k].type_id for i in index for k in clusters[i][1]])

    (last,) = index
    members = clusters[last][1]
    mode = "menu"
    if len(members) == 1:
        winner = members[0]
    elif probes[last] is not None:
        x, rule = probes[last]
        predicted = {best_response(game.types[k], x, rule): k for k in members}
        j = dialogue.probe(x, rule)
        if j not in predicted:
            raise NoMatchError(f"response {j} matches no surviving type")
        winner = predicted[j]
    else:
        winner = _greedy_disambiguate(game, plan, dialogue, members)
        mode = "menu+greedy"
    if len(members) > 1:
        survivors_log.append([game.types[winner].type_id])
    return LearnerResult("menu", dialogue.transcript, game.types[winner].type_id,
                         assumption_report=plan.report,
                         diagnostics={"survivors": survivors_log, "minimizers": plan.minimizers, "mode": mode})


def learn_via_single_strategy(game: GameInstance, agent, *, plan: LinePlan | None = None) -> LearnerResult:
    """Halve the candidate set by posting one strategy per round on a 1-D space.

    If more than half the survivors share the best response ``j*`` at ``t=0``,
    post the leftmost grid cell where exactly ``floor(K/2)`` of them still play
    ``j*`` (at the cell midpoint, away from ties); otherwise post ``t=0``.
    Survivors inconsistent with the observed response are dropped.
    """
    plan = plan or plan_line_game(game)
    if not plan.report.ok:
        raise AssumptionViolation("assumption violated: " + plan.report.violations[0].message, plan.report)
    space = game.space
    dialogue = Dialogue(agent, space)
    survivors = np.arange(game.n_types)
    survivors_log = [[game.types[k].type_id for k in survivors]]
    count_changes: list[int] = []
    while len(survivors) > 1:
        half = len(survivors) // 2
        sub = plan.responses[survivors]
        if np.all(sub == sub[0]):
            ids = [game.types[k].type_id for k in survivors]
            raise IndistinguishableTypesError(f"types {ids} respond identically everywhere")
        counts = np.bincount(sub[:, 0], minlength=game.n_actions)
        j_star = int(np.argmax(counts))
        p = 0
        if counts[j_star] > half:
            profile = (sub[:, 1:] == j_star).sum(axis=0)
            steps = np.diff(profile)
            if np.any(np.abs(steps) >= 2):
                bad = int(np.flatnonzero(np.abs(steps) >= 2)[0])
                raise AssumptionViolation(
                    f"count of action {j_star} jumps by {steps[bad]} at t={plan.grid[bad + 1]:.6g}")
            count_changes.extend(int(s) for s in steps if s != 0)
            hits = np.flatnonzero(profile == half)
            if len(hits) == 0:
                raise AssumptionViolation(f"no point where exactly {half} types play action {j_star}")
            p = int(hits[0]) + 1
        x = space.embed([plan.points[p]])
        j = dialogue.probe(x)
        survivors = survivors[sub[:, p] == j]
        if len(survivors) == 0:
            raise NoMatchError(f"response {j} at t={plan.points[p]:.6g} matches no surviving type")
        survivors_log.append([game.types[k].type_id for k in survivors])
    return LearnerResult("single-strategy", dialogue.transcript, game.types[survivors[0]].type_id,
                         assumption_report=plan.report,
                         diagnostics={"survivors": survivors_log, "count_changes": count_changes})
