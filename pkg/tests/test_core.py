import json
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from menuprobe.core import (
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
    check_transcript,
    choose_from_ball_menu,
    choose_from_finite_menu,
    maximal_actions,
    menu_from_dict,
    utility,
)
from menuprobe.errors import InfeasibleError, MenuProbeError, NoMatchError

seeds = st.integers(0, 2**32 - 1)


def random_type(rng, n=3, m=2, type_id=0):
    return AgentType(rng.uniform(-1, 1, (n, m)), rng.uniform(-1, 1, n), type_id)


# -- utilities and best responses -------------------------------------------

def test_utility_examples():
    ty = AgentType([[1.0, 0.0], [0.0, 1.0]], [0.0, -0.5])
    assert utility(ty, [0.7, 0.3], 0) == 0.7
    assert utility(ty, [0.7, 0.3], 1) == pytest.approx(-0.2, abs=1e-15)
    np.testing.assert_array_equal(ty.utilities(np.zeros(2)), ty.intercepts)


def test_utility_rejects_bad_inputs():
    ty = AgentType([[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0])
    with pytest.raises(IndexError):
        utility(ty, [0.5, 0.5], 2)
    with pytest.raises(ValueError):
        utility(ty, [0.5, 0.5, 0.0], 0)


def test_best_response_examples():
    ty = AgentType([[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0])
    assert best_response(ty, [0.7, 0.3]) == 0
    assert best_response(ty, [0.5, 0.5]) == 0          # exact tie, lowest index
    assert best_response(ty, [0.5, 0.5], TieBreakRule({0: (1,)})) == 1


@settings(max_examples=200)
@given(seeds)
def test_best_response_is_exhaustive_argmax(seed):
    rng = np.random.default_rng(seed)
    ty = random_type(rng, n=3, m=2)
    x = rng.uniform(0, 1, 2)
    values = [float(np.dot(ty.directions[j], x) + ty.intercepts[j]) for j in range(3)]
    assert best_response(ty, x) == int(np.argmax(values))


@settings(max_examples=100)
@given(seeds, st.lists(st.integers(0, 3), min_size=0, max_size=4))
def test_tie_break_always_picks_a_maximal_action(seed, prefs):
    rng = np.random.default_rng(seed)
    values = rng.integers(0, 3, 4).astype(float)    # frequent exact ties
    maximal = maximal_actions(values)
    chosen = TieBreakRule({"a": tuple(prefs)}).select("a", maximal)
    assert chosen in maximal
    listed = [a for a in prefs if a in maximal]
    assert chosen == (listed[0] if listed else min(maximal))


# -- finite menus ------------------------------------------------------------

def test_finite_menu_never_picks_the_middle_on_a_line():
    ty = AgentType([[1.0], [-1.0]], [0.0, 1.0])     # lines t and 1 - t
    x, _ = choose_from_finite_menu(ty, FiniteMenu([[0.2], [0.5], [0.8]]))
    assert x[0] in (0.2, 0.8)


def test_singleton_menu_returns_item_and_best_response():
    ty = AgentType([[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0])
    x, j = choose_from_finite_menu(ty, FiniteMenu([[0.2, 0.9]]))
    np.testing.assert_array_equal(x, [0.2, 0.9])
    assert j == 1


@settings(max_examples=200)
@given(seeds)
def test_finite_choice_matches_pairwise_enumeration(seed):
    rng = np.random.default_rng(seed)
    ty = random_type(rng, n=3, m=2)
    items = rng.uniform(0, 1, (10, 2))
    x, j = choose_from_finite_menu(ty, FiniteMenu(items))
    best = max(utility(ty, items[i], a) for i, a in product(range(10), range(3)))
    assert utility(ty, x, j) == best


def test_equal_items_go_to_lowest_index():
    ty = AgentType([[1.0], [-1.0]], [0.0, 1.0])
    x, _ = choose_from_finite_menu(ty, FiniteMenu([[0.8], [0.2]]))
    assert x[0] == 0.8


def test_empty_menu_is_rejected():
    with pytest.raises(ValueError):
        FiniteMenu(np.zeros((0, 2)))


# -- ball menus --------------------------------------------------------------

def test_ball_choice_closed_form_example():
    space = StrategySpace.box(2)
    ty = AgentType([[3.0, 4.0], [0.0, 0.0]], [0.0, -10.0])
    x, j = choose_from_ball_menu(ty, space, [0.5, 0.5], 0.1)
    assert j == 0
    np.testing.assert_allclose(x, [0.56, 0.58], atol=1e-12)
    # brute force over a 1e-4 grid of the ball
    g = np.arange(-0.1, 0.1 + 1e-12, 1e-4)
    dx, dy = np.meshgrid(g, g)
    inside = dx**2 + dy**2 <= 0.01
    pts = np.column_stack([dx[inside] + 0.5, dy[inside] + 0.5])
    best = pts[np.argmax(pts @ [3.0, 4.0])]
    np.testing.assert_allclose(x, best, atol=1e-3)


def test_zero_gradient_returns_center():
    space = StrategySpace.box(2)
    ty = AgentType([[0.0, 0.0], [0.0, 0.0]], [1.0, 0.0])
    x, j = choose_from_ball_menu(ty, space, [0.4, 0.6], 0.1)
    np.testing.assert_array_equal(x, [0.4, 0.6])
    assert j == 0


def test_ball_outside_space_is_rejected():
    with pytest.raises(InfeasibleError):
        choose_from_ball_menu(AgentType([[1.0, 0.0], [0.0, 1.0]], [0, 0]), StrategySpace.box(2), [0.05, 0.5], 0.1)


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_ball_choice_beats_monte_carlo(seed):
    rng = np.random.default_rng(seed)
    space = StrategySpace.box(2)
    ty = random_type(rng, n=3, m=2)
    radius = rng.uniform(0.01, 0.2)
    center = rng.uniform(radius, 1 - radius, 2)
    x, j = choose_from_ball_menu(ty, space, center, radius)
    u = rng.normal(size=(10_000, 2))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    pts = center + radius * np.sqrt(rng.uniform(0, 1, (10_000, 1))) * u
    assert utility(ty, x, j) >= ty.utilities(pts).max() - 1e-9
    assert np.linalg.norm(x - center) == pytest.approx(radius, abs=1e-12)


def test_ball_choice_on_the_simplex_uses_effective_coordinates():
    space = StrategySpace.simplex(3)
    ty = AgentType([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]], [0.0, -5.0])
    x, j = choose_from_ball_menu(ty, space, [0.3, 0.3], 0.05)
    # effective gradient A^T v = (1, 0) for action 0
    np.testing.assert_allclose(x, [0.35, 0.3, 0.35], atol=1e-12)
    assert j == 0 and x.sum() == pytest.approx(1.0)


@settings(max_examples=60, deadline=None)
@given(seeds, st.floats(0.1, 10.0), st.floats(-5.0, 5.0))
def test_positive_affine_transform_preserves_behaviour(seed, scale, shift):
    rng = np.random.default_rng(seed)
    space = StrategySpace.box(2)
    ty = random_type(rng, n=3, m=2)
    tz = AgentType(scale * ty.directions, scale * ty.intercepts + shift)
    x = rng.uniform(0, 1, 2)
    items = rng.uniform(0, 1, (6, 2))
    margin = np.sort(ty.utilities(x))
    if margin[-1] - margin[-2] > 1e-6:
        assert best_response(ty, x) == best_response(tz, x)
    assert choose_from_finite_menu(ty, FiniteMenu(items))[1] == choose_from_finite_menu(tz, FiniteMenu(items))[1]
    xa, ja = choose_from_ball_menu(ty, space, [0.5, 0.5], 0.2)
    xb, jb = choose_from_ball_menu(tz, space, [0.5, 0.5], 0.2)
    assert ja == jb
    np.testing.assert_allclose(xa, xb, atol=1e-12)


def test_endpoint_property_on_a_line():
    rng = np.random.default_rng(3)
    for _ in range(500):
        ty = AgentType(rng.uniform(-1, 1, (4, 1)), rng.uniform(-1, 1, 4))
        items = rng.uniform(0, 1, (rng.integers(2, 8), 1))
        x, _ = choose_from_finite_menu(ty, FiniteMenu(items))
        assert x[0] in (items.min(), items.max())


# -- strategy spaces ---------------------------------------------------------

def test_simplex_chart_eliminates_last_coordinate():
    space = StrategySpace.simplex(3)
    assert (space.ambient_dim, space.effective_dim) == (3, 2)
    np.testing.assert_allclose(space.embed([0.2, 0.3]), [0.2, 0.3, 0.5])
    np.testing.assert_allclose(space.to_effective([0.2, 0.3, 0.5]), [0.2, 0.3])
    assert space.is_feasible([0.5, 0.5]) and not space.is_feasible([0.6, 0.6])


def test_rank_deficient_chart_is_rejected():
    with pytest.raises(ValueError):
        StrategySpace([[1.0, 2.0], [2.0, 4.0]], [0.0, 0.0])


def test_slack_and_ball_containment():
    space = StrategySpace.budget_box(3, 1.0)
    assert space.slack([0.2, 0.2, 0.2]) == pytest.approx(0.2)
    assert space.slack([0.3, 0.3, 0.3]) == pytest.approx(0.1 / np.sqrt(3))
    assert space.contains_ball([0.3, 0.3, 0.3], 0.05)
    assert not space.contains_ball([0.3, 0.3, 0.3], 0.06)


def test_sample_is_feasible_and_deterministic():
    space = StrategySpace.simplex(4)
    a = space.sample(np.random.default_rng(1), 300)
    b = space.sample(np.random.default_rng(1), 300)
    np.testing.assert_array_equal(a, b)
    assert np.all(space.is_feasible(a))


def test_game_json_has_the_documented_fields():
    space = StrategySpace.simplex(3)
    game = GameInstance(space, (AgentType(np.eye(3), np.zeros(3), "a"),), "stackelberg", {"note": 1})
    doc = json.loads(game.to_json())
    assert {"ambient_dim", "effective_dim", "chart_matrix", "chart_offset", "param_constraints",
            "types", "class", "metadata"} <= set(doc)
    assert doc["types"][0] == {"id": "a", "directions": np.eye(3).tolist(), "intercepts": [0.0, 0.0, 0.0]}
    assert doc["param_constraints"] == [{"g": [1.0, 1.0], "h": 1.0}]
    back = GameInstance.from_json(game.to_json())
    assert back.to_json() == game.to_json()


def test_game_rejects_inconsistent_types():
    space = StrategySpace.box(2)
    with pytest.raises(ValueError):
        GameInstance(space, (AgentType(np.eye(2), [0, 0], 0), AgentType(np.eye(2), [0, 0], 0)))
    with pytest.raises(ValueError):
        GameInstance(space, (AgentType(np.eye(3), [0, 0, 0], 0),))
    with pytest.raises(ValueError):
        GameInstance(space, (AgentType(np.eye(2), [0, 0], 0),), "chess")


# -- dialogue and transcripts -------------------------------------------------

def test_dialogue_logs_rounds_and_round_trips():
    space = StrategySpace.box(2)
    agent = SimulatedAgent(AgentType([[1.0, 0.0], [0.0, 1.0]], [0, 0]), space)
    dialogue = Dialogue(agent, space)
    dialogue.post(BallMenu([0.5, 0.5], 0.1))
    dialogue.probe([0.2, 0.9])
    assert dialogue.rounds == 2 == agent.queries
    text = dialogue.transcript.to_json()
    back = Transcript.from_json(text)
    assert back.to_json() == text
    check_transcript(back, space)
    assert menu_from_dict(back.rounds[0].menu.to_dict()).radius == 0.1


class _Liar:
    def respond(self, menu):
        return np.array([0.9, 0.9]), 0


def test_dialogue_rejects_choices_off_the_menu():
    space = StrategySpace.box(2)
    with pytest.raises(NoMatchError):
        Dialogue(_Liar(), space).post(BallMenu([0.5, 0.5], 0.1))
    with pytest.raises(NoMatchError):
        Dialogue(_Liar(), space).probe([0.1, 0.1])


def test_check_transcript_flags_bad_rounds():
    from menuprobe.core import Round

    bad = Transcript([Round(FiniteMenu([[0.1, 0.1]]), np.array([0.2, 0.2]), 0)])
    with pytest.raises(MenuProbeError):
        check_transcript(bad, StrategySpace.box(2))
