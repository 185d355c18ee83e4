import json
import numpy as np
import pytest

from menuprobe import games
from menuprobe.core import AgentType, SimulatedAgent, StrategySpace
from menuprobe.errors import GateError, ShrinkExhaustedError
from menuprobe.learners import (
    OracleStrategies,
    ReconstructedType,
    behaviorally_equivalent,
    learn_infinite_type,
    normalize_type,
)

BOX2 = StrategySpace.box(2)


def learn(ty, space, bits=40, seed=0):
    oracle = games.oracle_strategies(ty, space)
    return learn_infinite_type(SimulatedAgent(ty, space), oracle, space, bits, seed)


def test_two_action_example():
    ty = AgentType([[1.0, 0.0], [0.0, 2.0]], [0.0, -0.5])
    rec = learn(ty, BOX2).reconstruction
    np.testing.assert_allclose(rec.directions[1], [0.0, 1.0], atol=1e-9)
    assert rec.scales[1] == pytest.approx(2.0, abs=1e-6)
    assert rec.intercepts[1] == pytest.approx(-0.5, abs=1e-6)
    assert rec.scales[0] == 1.0 and rec.intercepts[0] == 0.0


@pytest.mark.parametrize("seed", range(8))
def test_random_reconstruction(seed):
    rng = np.random.default_rng(seed)
    n, m = int(rng.integers(3, 7)), int(rng.integers(2, 5))
    ty = games.gen_generic_type(n, m, seed)
    space = StrategySpace.box(m)
    res = learn(ty, space, seed=seed)
    rec = res.reconstruction
    assert rec.complete
    truth = normalize_type(ty)
    np.testing.assert_allclose(rec.directions, truth.directions, atol=1e-6)
    np.testing.assert_allclose(rec.scales, truth.scales, atol=1e-6)
    np.testing.assert_allclose(rec.intercepts, truth.intercepts, atol=1e-6)
    np.testing.assert_allclose(np.linalg.norm(rec.directions, axis=1), 1.0, atol=1e-9)
    assert res.rounds <= 8 * n * n * 40
    assert res.diagnostics["queries"] == res.rounds


@pytest.mark.parametrize("scale,shift", [(3.0, 1.0), (0.5, -2.0)])
def test_gauge_invariance(scale, shift):
    ty = games.gen_generic_type(4, 3, 11)
    space = StrategySpace.box(3)
    moved = AgentType(scale * ty.directions, scale * ty.intercepts + shift)
    a = learn(ty, space).reconstruction
    # the oracle must not leak the transform: reuse the original oracle points
    oracle = games.oracle_strategies(ty, space)
    b = learn_infinite_type(SimulatedAgent(moved, space), oracle, space, 40, 0).reconstruction
    assert a.max_abs_difference(b) <= 1e-6


def test_reconstruction_json_round_trip():
    rec = learn(games.gen_generic_type(3, 2, 5), BOX2).reconstruction
    doc = json.loads(json.dumps(rec.to_dict()))
    assert doc["normalization"] == {"reference_action": 0, "scale": 1.0, "intercept": 0.0}
    back = ReconstructedType.from_dict(doc)
    assert back.max_abs_difference(rec) == 0.0


def test_oracle_strategies_are_validated():
    ty = AgentType([[1.0, 0.0], [0.0, 2.0]], [0.0, -0.5])
    wrong = OracleStrategies({0: [0.1, 0.9], 1: [0.9, 0.1]})
    with pytest.raises(GateError):
        learn_infinite_type(SimulatedAgent(ty, BOX2), wrong, BOX2)


def test_needs_identity_chart():
    ty = AgentType(np.eye(3), np.zeros(3))
    space = StrategySpace.simplex(3)
    with pytest.raises(GateError):
        learn_infinite_type(SimulatedAgent(ty, space), OracleStrategies({0: [1, 0, 0]}), space)


def test_boundary_oracle_point_cannot_shrink():
    ty = AgentType([[1.0, 0.0], [0.0, 2.0]], [0.0, -0.5])
    oracle = OracleStrategies({0: [1.0, 0.0], 1: [0.0, 1.0]})
    with pytest.raises(ShrinkExhaustedError):
        learn_infinite_type(SimulatedAgent(ty, BOX2), oracle, BOX2)


def test_unresolved_actions_stay_out_of_predictions():
    rec = ReconstructedType(
        np.array([[1.0, 0.0], [0.0, 1.0], [0.6, 0.8]]),
        np.array([1.0, 2.0, np.nan]),
        np.array([0.0, -0.5, np.nan]),
        unresolved=(2,),
    )
    assert not rec.complete
    vals = rec.utilities([0.5, 0.5])
    assert vals[2] == -np.inf
    np.testing.assert_allclose(vals[:2], [0.5, 0.5])
    with pytest.raises(ValueError):
        rec.to_agent_type()
    back = ReconstructedType.from_dict(json.loads(json.dumps(rec.to_dict())))
    assert back.unresolved == (2,) and np.isnan(back.scales[2])


def test_behavioural_equivalence_examples():
    ty = games.gen_generic_type(4, 2, 3)
    assert behaviorally_equivalent(ty, ty, BOX2) == (True, 0.0)
    moved = AgentType(3 * ty.directions, 3 * ty.intercepts - 1)
    assert behaviorally_equivalent(moved, ty, BOX2)[0]
    bent = ty.directions.copy()
    bent[1] = [bent[1][1], -bent[1][0]]
    ok, rate = behaviorally_equivalent(AgentType(bent, ty.intercepts), ty, BOX2, probes=10_000)
    assert not ok and rate > 0


@pytest.mark.slow
def test_query_count_grows_at_most_quadratically():
    space = StrategySpace.box(3)
    per_n = {}
    for n in range(3, 9):
        counts = [learn(games.gen_generic_type(n, 3, 10 * n + s), space, seed=s).rounds for s in range(3)]
        per_n[n] = max(counts)
    ratios = [per_n[n] / n**2 for n in per_n]
    # normalised counts must not grow with n
    assert max(ratios) <= 8 * 40
    assert ratios[-1] <= 2 * ratios[0]
