"""Instance generators for the standard principal-agent settings.

Every generator reduces its setting to the generic linear form
``V(x, j) = <v_j, x> + c_j`` and is a pure function of its parameters and seed.
Principal-side payoffs are stored in ``metadata`` but never used.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog

from .core import (
    AgentType,
    Dialogue,
    FiniteMenu,
    GameInstance,
    StrategySpace,
    best_response,
    choose_from_finite_menu,
    menu_from_dict,
)
from .errors import NoMatchError
from .geometry import build_envelope
from .learners.assumptions import AssumptionReport, check_assumption_breakpoints, check_assumption_no_dominant
from .learners.finite import LearnerResult
from .learners.infinite import OracleStrategies

LINE_REQUIREMENTS = (None, "no_dominant", "interior_minimum")


def _check_sizes(**sizes):
    for name, (value, low) in sizes.items():
        if int(value) != value or value < low:
            raise ValueError(f"{name} must be an integer >= {low}, got {value}")


def line_shape_ok(agent_type: AgentType, space: StrategySpace, require: str | None) -> bool:
    """Whether a type's 1-D envelope has the requested shape.

    ``no_dominant``: at least two envelope segments.  ``interior_minimum``: the
    envelope falls at ``t=0`` and rises at ``t=1``, so its minimiser is a
    strict interior breakpoint.
    """
    if require is None:
        return True
    env = build_envelope(agent_type, space)
    if require == "no_dominant":
        return env.n_segments >= 2
    if require == "interior_minimum":
        return env.slopes[0] < 0 < env.slopes[-1]
    raise ValueError(f"unknown requirement {require!r}")


# ---------------------------------------------------------------------------
# Stackelberg games


def gen_stackelberg(m: int, n: int, K: int, seed: int, *, require: str | None = None) -> GameInstance:
    """Random Stackelberg game on the leader's mixed-strategy simplex.

    Follower matrices have i.i.d. uniform[-1, 1] entries; ``v_j`` is column
    ``j``.  With ``m = 2`` the space is one-dimensional and ``require`` can ask
    for a per-type envelope shape (types are resampled until it holds).
    """
    _check_sizes(m=(m, 2), n=(n, 2), K=(K, 1))
    if require not in LINE_REQUIREMENTS:
        raise ValueError(f"unknown requirement {require!r}")
    if require is not None and m != 2:
        raise ValueError("envelope requirements only apply to m = 2")
    rng = np.random.default_rng(seed)
    space = StrategySpace.simplex(m)
    types = []
    for k in range(K):
        for _ in range(10_000):
            F = rng.uniform(-1.0, 1.0, size=(m, n))
            ty = AgentType(F.T, np.zeros(n), k)
            if line_shape_ok(ty, space, require):
                break
        else:
            raise RuntimeError("could not sample a type with the requested shape")
        types.append(ty)
    leader = rng.uniform(-1.0, 1.0, size=(m, n))
    return GameInstance(space, tuple(types), "stackelberg", {"leader_matrix": leader.tolist()})


# ---------------------------------------------------------------------------
# Security games


@dataclass(frozen=True, eq=False)
class SecurityInstance:
    game: GameInstance
    slice_game: GameInstance
    slice_report: AssumptionReport


def security_slice(game: GameInstance, direction=None) -> GameInstance:
    """The game restricted to coverage vectors ``s * direction``, ``s in [0, 1]``.

    The default direction spreads the budget uniformly, ``(r/n) * 1``.
    """
    n = game.space.ambient_dim
    r = float(game.metadata["resources"])
    end = np.full(n, r / n) if direction is None else np.asarray(direction, dtype=float)
    if not game.space.is_feasible(end) or not game.space.is_feasible(np.zeros(n)):
        raise ValueError("slice leaves the coverage polytope")
    return game.with_space(StrategySpace.segment(np.zeros(n), end))


def gen_security(n: int, r: int, K: int, seed: int, *, direction=None) -> SecurityInstance:
    """Random security game with ``n`` targets and ``r`` resources.

    Attacker rewards are uniform on (0, 1) and penalties on (-1, 0); the
    reduction is ``v_t = (P_t - R_t) e_t`` and ``c_t = R_t``.  Also returns the
    one-dimensional slice used by the single-strategy learner and its
    assumption report.
    """
    _check_sizes(n=(n, 2), r=(r, 1), K=(K, 1))
    if r >= n:
        raise ValueError("need r < n")
    rng = np.random.default_rng(seed)
    types = []
    rewards, penalties = [], []
    for k in range(K):
        R = rng.uniform(0.0, 1.0, size=n)
        P = rng.uniform(-1.0, 0.0, size=n)
        rewards.append(R.tolist())
        penalties.append(P.tolist())
        types.append(AgentType(np.diag(P - R), R, k))
    meta = {
        "resources": r,
        "attacker_rewards": rewards,
        "attacker_penalties": penalties,
        "defender_rewards": rng.uniform(0.0, 1.0, size=n).tolist(),
        "defender_penalties": rng.uniform(-1.0, 0.0, size=n).tolist(),
    }
    game = GameInstance(StrategySpace.budget_box(n, r), tuple(types), "security", meta)
    sliced = security_slice(game, direction)
    report = check_assumption_no_dominant(sliced).merge(check_assumption_breakpoints(sliced))
    return SecurityInstance(game, sliced, report)


# ---------------------------------------------------------------------------
# Contracts and information acquisition


def gen_contract(m: int, n: int, K: int, seed: int, *, pay_cap: float = 1.0) -> GameInstance:
    """Random contract game: Dirichlet(1, ..., 1) outcome laws, uniform[0, 1] costs.

    Contracts live in the box ``[0, pay_cap]^m``.
    """
    _check_sizes(m=(m, 2), n=(n, 2), K=(K, 1))
    rng = np.random.default_rng(seed)
    types = []
    for k in range(K):
        p = rng.dirichlet(np.ones(m), size=n)
        cost = rng.uniform(0.0, 1.0, size=n)
        types.append(AgentType(p, -cost, k))
    meta = {"reward": rng.uniform(0.0, 1.0, size=m).tolist(), "pay_cap": pay_cap}
    return GameInstance(StrategySpace.box(m, 0.0, pay_cap), tuple(types), "contract", meta)


def gen_info_acquisition(nw: int, no: int, n: int, K: int, seed: int) -> GameInstance:
    """Random information-acquisition game in its linearised form.

    The principal's strategy is a score for every (observation, state) pair,
    flattened at index ``o * nw + w`` with scores in ``[0, 1]``; ``v_j`` is the
    joint law ``Pr(w, o | j)`` on the same index and ``c_j = -cost_j``.
    """
    _check_sizes(nw=(nw, 2), no=(no, 2), n=(n, 2), K=(K, 1))
    rng = np.random.default_rng(seed)
    m = nw * no
    types = []
    for k in range(K):
        joint = rng.dirichlet(np.ones(m), size=n)
        cost = rng.uniform(0.0, 1.0, size=n)
        types.append(AgentType(joint, -cost, k))
    meta = {"states": nw, "observations": no, "index": "o * states + w"}
    return GameInstance(StrategySpace.box(m), tuple(types), "info_acq", meta)


# ---------------------------------------------------------------------------
# Generic agents for the infinite-type learner


def chebyshev_point(agent_type: AgentType, space: StrategySpace, action: int) -> tuple[np.ndarray, float]:
    """Centre and radius of the largest ball inside ``action``'s best-response region.

    Solved as a linear program in effective coordinates; the radius is
    non-positive when the region is empty or flat.
    """
    W, c = agent_type.effective(space)
    d = space.effective_dim
    rows, rhs = [], []
    for k in range(agent_type.n_actions):
        if k == action:
            continue
        diff = W[k] - W[action]
        norm = np.linalg.norm(diff)
        if norm == 0:
            if c[k] >= c[action]:
                return np.zeros(d), -np.inf
            continue
        rows.append(np.append(diff, norm))
        rhs.append(c[action] - c[k])
    for g, h in zip(space.constraint_matrix, space.constraint_bounds):
        rows.append(np.append(g, np.linalg.norm(g)))
        rhs.append(h)
    for i in range(d):
        e = np.zeros(d)
        e[i] = 1.0
        if np.isfinite(space.upper[i]):
            rows.append(np.append(e, 1.0))
            rhs.append(space.upper[i])
        if np.isfinite(space.lower[i]):
            rows.append(np.append(-e, 1.0))
            rhs.append(-space.lower[i])
    obj = np.zeros(d + 1)
    obj[-1] = -1.0
    res = linprog(obj, A_ub=np.array(rows), b_ub=np.array(rhs), bounds=[(None, None)] * d + [(None, 1.0)],
                  method="highs")
    if res.status != 0:
        return np.zeros(d), -np.inf
    return res.x[:d], float(res.x[-1])


def oracle_strategies(agent_type: AgentType, space: StrategySpace) -> OracleStrategies:
    """Ground-truth oracle: one deep interior point of every action's region."""
    points = {}
    for j in range(agent_type.n_actions):
        t, radius = chebyshev_point(agent_type, space, j)
        if not radius > 0:
            raise ValueError(f"action {j} has no best-response region with interior")
        points[j] = space.embed(t)
    return OracleStrategies(points)


def gen_generic_type(n: int, m: int, seed: int, *, min_margin: float = 0.02, type_id=0) -> AgentType:
    """Random agent on ``[0, 1]^m`` for which every action has a best-response region.

    Gradients are uniform on ``[-1, 1]^m``.  Random anchor points are assigned
    to actions by a maximum-weight matching (which makes the assignment
    cyclically monotone), then intercepts are chosen by a linear program so
    each action beats all others at its anchor by the largest possible margin.
    """
    _check_sizes(n=(n, 2), m=(m, 1))
    rng = np.random.default_rng(seed)
    for _ in range(1000):
        V = rng.uniform(-1.0, 1.0, size=(n, m))
        anchors = rng.uniform(0.1, 0.9, size=(n, m))
        _, cols = linear_sum_assignment(-(V @ anchors.T))
        anchors = anchors[cols]
        # variables (c_0..c_{n-1}, margin); maximise margin
        rows, rhs = [], []
        for j in range(n):
            for k in range(n):
                if j != k:
                    row = np.zeros(n + 1)
                    row[k], row[j], row[-1] = 1.0, -1.0, 1.0
                    rows.append(row)
                    rhs.append((V[j] - V[k]) @ anchors[j])
        obj = np.zeros(n + 1)
        obj[-1] = -1.0
        bounds = [(0.0, 0.0)] + [(-5.0, 5.0)] * (n - 1) + [(None, 1.0)]
        res = linprog(obj, A_ub=np.array(rows), b_ub=np.array(rhs), bounds=bounds, method="highs")
        if res.status == 0 and res.x[-1] >= min_margin:
            return AgentType(V, res.x[:n], type_id)
    raise RuntimeError("could not sample a type whose actions all have regions")


def gen_generic(n: int, m: int, K: int, seed: int) -> GameInstance:
    """``K`` generic types on the unit box (identity chart)."""
    _check_sizes(K=(K, 1))
    seeds = np.random.SeedSequence(seed).generate_state(K)
    types = tuple(gen_generic_type(n, m, int(s), type_id=k) for k, s in enumerate(seeds))
    return GameInstance(StrategySpace.box(m), types, "generic", {})


# ---------------------------------------------------------------------------
# The exponential-hardness Stackelberg family


def subset_id(subset) -> str:
    return "{" + ",".join(str(i) for i in sorted(subset)) + "}"


def build_hardness_example(m: int, N: float | None = None) -> tuple[GameInstance, FiniteMenu]:
    """Stackelberg family that needs exponentially many single-strategy rounds.

    The follower has ``m + 2`` actions: ``m`` "pattern" actions (1 on their own
    leader action, ``-2/(m-2)`` elsewhere), one uniform ``-1/N^3`` action, and
    the type-revealing action ``a* = m + 1`` whose column is ``v / N^2`` with
    ``v_i = 1`` inside the type's subset and ``-N`` outside.  Types are all
    ``m/2``-subsets of the leader's actions plus the empty set (whose ``a*``
    column is ``-N/N^2`` everywhere).

    The returned menu holds, for every non-empty type, the strategy putting
    ``2/m`` on each of its actions.  (The empty type's analogue is the zero
    vector, which is not a mixed strategy, so it is left out.)
    """
    if m < 4 or m % 2:
        raise ValueError("m must be even and at least 4")
    N = 10.0 * m if N is None else float(N)
    if N <= m:
        raise ValueError("N must exceed m")
    pattern = np.full((m, m), -2.0 / (m - 2))
    np.fill_diagonal(pattern, 1.0)
    flat = np.full(m, -1.0 / N**3)
    subsets = [()] + list(combinations(range(m), m // 2))
    types, items = [], []
    for s in subsets:
        v = np.full(m, -N)
        v[list(s)] = 1.0
        directions = np.vstack([pattern, flat, v / N**2])   # rows = follower actions
        types.append(AgentType(directions, np.zeros(m + 2), subset_id(s)))
        if s:
            x = np.zeros(m)
            x[list(s)] = 2.0 / m
            items.append(x)
    assert len(types) == comb(m, m // 2) + 1
    menu = FiniteMenu(np.array(items))
    meta = {"hardness": {"m": m, "N": N, "a_star": m + 1, "menu_types": [subset_id(s) for s in subsets[1:]],
                         "menu": menu.to_dict()}}
    game = GameInstance(StrategySpace.simplex(m), tuple(types), "stackelberg", meta)
    return game, menu


def hardness_menu(game: GameInstance) -> FiniteMenu:
    """The separating menu stored with a game from :func:`build_hardness_example`."""
    return menu_from_dict(game.metadata["hardness"]["menu"])


def identify_via_hardness_menu(game: GameInstance, menu: FiniteMenu, agent) -> LearnerResult:
    """One round: the agent's pick from the menu names its type.

    A non-empty type picks its own strategy and plays ``a*``; any other
    response identifies the empty type.
    """
    info = game.metadata["hardness"]
    a_star = int(info["a_star"])
    dialogue = Dialogue(agent, game.space)
    chosen, j = dialogue.post(menu)
    if j == a_star:
        type_id = info["menu_types"][menu.index_of(chosen)]
    else:
        type_id = subset_id(())
    expected = choose_from_finite_menu(game.type_by_id(type_id), menu)
    if expected[1] != j or not np.allclose(expected[0], chosen):
        raise NoMatchError(f"observation (item {menu.index_of(chosen)}, action {j}) matches no type")
    return LearnerResult("hardness-menu", dialogue.transcript, type_id)


def sequential_probe_baseline(game: GameInstance, menu: FiniteMenu, agent) -> LearnerResult:
    """Single-strategy baseline: post the menu's strategies one at a time.

    Stops as soon as ``a*`` is observed; if it never is, the type is empty.
    Worst case ``K - 1`` rounds.
    """
    info = game.metadata["hardness"]
    a_star = int(info["a_star"])
    dialogue = Dialogue(agent, game.space)
    for k, x in enumerate(menu.items):
        if dialogue.probe(x) == a_star:
            return LearnerResult("hardness-sequential", dialogue.transcript, info["menu_types"][k])
    return LearnerResult("hardness-sequential", dialogue.transcript, subset_id(()))


def max_single_probe_split(game: GameInstance, points) -> int:
    """Largest number of types any single strategy separates from the biggest response class."""
    worst = 0
    for x in np.atleast_2d(points):
        responses = [best_response(ty, x) for ty in game.types]
        _, counts = np.unique(responses, return_counts=True)
        worst = max(worst, game.n_types - int(counts.max()))
    return worst
