import json
import math

import numpy as np
import pytest

from conftest import line_game, line_type
from menuprobe import games
from menuprobe.core import AgentType, GameInstance, SimulatedAgent, StrategySpace
from menuprobe.errors import (
    AmbiguousMatchError,
    AssumptionViolation,
    GateError,
    IndistinguishableTypesError,
    NoMatchError,
)
from menuprobe.learners import (
    design_ball_menu,
    learn_via_menu,
    learn_via_single_strategy,
    plan_line_game,
    single_round_identify,
)


def v_type(mu, type_id):
    """Envelope |t - mu| from the lines mu - t (action 0) and t - mu (action 1)."""
    return line_type([-1.0, 1.0], [mu, -mu], type_id)


def run_all(game, learner, **kw):
    out = []
    for ty in game.types:
        res = learner(game, SimulatedAgent(ty, game.space), **kw)
        out.append((ty.type_id, res))
    return out


# -- single round ------------------------------------------------------------

def test_single_round_orthogonal_pair():
    space = StrategySpace.box(2)
    game = GameInstance(space, (
        AgentType([[1.0, 0.0], [-1.0, -0.5]], [0.0, 0.0], "x"),
        AgentType([[0.0, 1.0], [-0.5, -1.0]], [0.0, 0.0], "y"),
    ))
    for tid, res in run_all(game, single_round_identify):
        assert res.identified_type == tid and res.rounds == 1


def test_single_round_single_type():
    game = games.gen_contract(3, 3, 1, 0)
    (tid, res), = run_all(game, single_round_identify)
    assert res.identified_type == tid and res.rounds == 1


@pytest.mark.parametrize("seed", range(20))
def test_single_round_random_games(seed):
    rng = np.random.default_rng(seed)
    m, n, K = int(rng.integers(3, 6)), int(rng.integers(2, 6)), int(rng.integers(2, 51))
    game = games.gen_stackelberg(m, n, K, seed)
    design = design_ball_menu(game, seed)
    for tid, res in run_all(game, single_round_identify, design=design):
        assert res.identified_type == tid and res.rounds == 1


def test_single_round_gates():
    with pytest.raises(GateError):
        single_round_identify(games.gen_stackelberg(2, 3, 3, 0), None)
    with pytest.raises(AssumptionViolation) as info:
        design_ball_menu(games.gen_security(4, 1, 3, 0).game)
    assert info.value.report.nonparallel_ok is False


def test_single_round_rejects_outsiders():
    game = games.gen_stackelberg(3, 3, 4, 1)
    stranger = AgentType(-game.types[0].directions, np.zeros(3), "stranger")
    with pytest.raises(NoMatchError):
        single_round_identify(game, SimulatedAgent(stranger, game.space))


def test_single_round_ambiguous_prediction(monkeypatch):
    import menuprobe.learners.finite as finite
    from menuprobe.learners.assumptions import AssumptionReport

    # gradients parallel up to float noise; skip the gate to reach the matcher
    base = np.array([[1.0, 0.2], [-1.0, -1.0]])
    game = GameInstance(StrategySpace.box(2), (
        AgentType(base, [0.0, 0.0], 0),
        AgentType(base * (1 + 1e-13), [0.0, 0.0], 1),
    ))
    monkeypatch.setattr(finite, "check_assumption_nonparallel", lambda g: AssumptionReport(nonparallel_ok=True))
    design = finite.design_ball_menu(game)
    with pytest.raises(AmbiguousMatchError):
        single_round_identify(game, SimulatedAgent(game.types[0], game.space), design=design)


def test_learner_output_json():
    game = games.gen_stackelberg(3, 3, 3, 2)
    res = single_round_identify(game, SimulatedAgent(game.types[1], game.space))
    doc = json.loads(json.dumps(res.to_dict()))
    assert set(doc) == {"algorithm", "identified_type", "rounds", "transcript", "assumption_report"}
    assert doc["rounds"] == len(doc["transcript"]) == 1
    assert doc["transcript"][0]["menu"]["kind"] == "ball"


# -- menu halving on a line ---------------------------------------------------

def test_menu_two_types_one_round():
    game = line_game([v_type(0.3, 0), v_type(0.7, 1)])
    for tid, res in run_all(game, learn_via_menu):
        assert res.identified_type == tid and res.rounds == 1


def test_menu_four_types_two_rounds():
    game = line_game([v_type(mu, k) for k, mu in enumerate([0.1, 0.3, 0.6, 0.9])])
    for tid, res in run_all(game, learn_via_menu):
        assert res.identified_type == tid and res.rounds == 2
        assert res.diagnostics["mode"] == "menu"


def test_menu_shared_minimiser_uses_tie_breaking():
    a = line_type([-1.0, 1.0, 0.0], [0.5, -0.5, -5.0], "a")
    b = line_type([-1.0, 0.0, 1.0], [0.5, -5.0, -0.5], "b")
    game = line_game([a, b])
    for tid, res in run_all(game, learn_via_menu):
        assert res.identified_type == tid and res.rounds == 1


def test_identical_types_split_by_tie_breaking_at_a_kink():
    # both are indifferent at their shared minimiser; the principal's
    # per-type tie-break rule tells them apart
    game = line_game([v_type(0.4, 0), v_type(0.4, 1), v_type(0.8, 2)])
    for tid, res in run_all(game, learn_via_menu):
        assert res.identified_type == tid and res.rounds <= 2


def test_twins_need_tie_breaking():
    twin = ([1.0, 2.0], [0.0, -0.5])
    game = line_game([line_type(*twin, type_id=0), line_type(*twin, type_id=1)])
    # menus may install tie-break rules at the shared kink t = 0.5
    for tid, res in run_all(game, learn_via_menu):
        assert res.identified_type == tid
    # single strategies under the default rule cannot separate them
    with pytest.raises(IndistinguishableTypesError):
        learn_via_single_strategy(game, SimulatedAgent(game.types[0], game.space))


def test_menu_endpoint_cluster_falls_back_to_single_strategy():
    # all three increase on [0, 1] and start with action 0: one shared minimiser at 0
    types = [line_type([1.0, 2.0], [0.0, -mu], k) for k, mu in enumerate([0.2, 0.5, 0.8])]
    game = line_game(types)
    for tid, res in run_all(game, learn_via_menu):
        assert res.identified_type == tid
        assert res.rounds <= math.ceil(math.log2(3)) + 1
        assert res.diagnostics["mode"] == "single-strategy"


def test_menu_needs_no_dominant_action():
    game = line_game([line_type([1.0, 1.0], [1.0, 0.0], 0), v_type(0.5, 1)])
    with pytest.raises(AssumptionViolation):
        learn_via_menu(game, SimulatedAgent(game.types[1], game.space))


def test_menu_needs_a_line():
    game = games.gen_stackelberg(3, 3, 3, 0)
    with pytest.raises(GateError):
        learn_via_menu(game, SimulatedAgent(game.types[0], game.space))


@pytest.mark.parametrize("K", [2, 5, 16, 33, 128])
def test_menu_random_bound_and_safety(K):
    for seed in range(5):
        game = games.gen_stackelberg(2, 3, K, seed, require="no_dominant")
        plan = plan_line_game(game)
        for tid, res in run_all(game, learn_via_menu, plan=plan):
            assert res.identified_type == tid
            assert res.rounds <= math.ceil(math.log2(K)) + 1
            for alive in res.diagnostics["survivors"]:
                assert tid in alive


# -- single strategy on a line -------------------------------------------------

def test_single_strategy_two_types():
    game = line_game([line_type([1.0, -1.0], [0.0, 0.5], 0), line_type([-1.0, 1.0], [0.5, 0.0], 1)])
    for tid, res in run_all(game, learn_via_single_strategy):
        assert res.identified_type == tid and res.rounds == 1


def test_single_strategy_staggered_switches():
    game = line_game([v_type(mu, k) for k, mu in enumerate([0.2, 0.5, 0.8])])
    results = dict(run_all(game, learn_via_single_strategy))
    first = results[0].transcript.rounds[0].menu.items[0][0]
    assert first == pytest.approx(0.65)            # only the 0.8 type still plays action 0
    assert results[2].rounds == 1
    assert results[0].rounds == results[1].rounds == 2
    assert all(res.identified_type == tid for tid, res in results.items())
    assert set(results[0].diagnostics["count_changes"]) <= {-1, 1}


def test_single_strategy_rejects_shared_switch():
    from test_assumptions import shared_switch_fixture

    game = shared_switch_fixture()
    with pytest.raises(AssumptionViolation):
        learn_via_single_strategy(game, SimulatedAgent(game.types[0], game.space))


@pytest.mark.parametrize("K", [2, 7, 64])
def test_single_strategy_random_bound_and_safety(K):
    for seed in range(5):
        game = games.gen_stackelberg(2, 4, K, 100 + seed, require="no_dominant")
        plan = plan_line_game(game)
        for tid, res in run_all(game, learn_via_single_strategy, plan=plan):
            assert res.identified_type == tid
            assert res.rounds <= math.ceil(math.log2(K)) + 1
            for alive in res.diagnostics["survivors"]:
                assert tid in alive


def test_line_learners_on_a_security_slice():
    for seed in range(40):
        inst = games.gen_security(5, 2, 4, seed)
        if inst.slice_report.ok:
            break
    else:
        pytest.skip("no random security slice satisfied the assumptions")
    line = inst.slice_game
    for tid, res in run_all(line, learn_via_single_strategy):
        assert res.identified_type == tid and res.rounds <= 3
