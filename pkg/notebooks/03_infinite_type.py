# %% [markdown]
# # Recovering a continuous type by hyperplane bisection
#
# Utilities are only identified up to a positive scale and a shift, so the
# reconstruction fixes action 0 at unit scale and zero intercept.

# %%
from menuprobe import games
from menuprobe.core import AgentType, SimulatedAgent, StrategySpace
from menuprobe.learners import behaviorally_equivalent, learn_infinite_type, normalize_type

space = StrategySpace.box(3)
truth = games.gen_generic_type(n=5, m=3, seed=4)
oracle = games.oracle_strategies(truth, space)
res = learn_infinite_type(SimulatedAgent(truth, space), oracle, space, precision_bits=40)
rec = res.reconstruction
print("queries:", res.rounds, "budget:", 8 * 5**2 * 40)
print("max error vs normalised truth:", rec.max_abs_difference(normalize_type(truth)))

# %%
ok, rate = behaviorally_equivalent(rec.to_agent_type(), truth, space, probes=100_000, margin_floor=1e-5)
print("behaviourally equivalent:", ok, "disagreement rate:", rate)

# %% [markdown]
# A rescaled and shifted agent yields the same reconstruction.

# %%
moved = AgentType(3 * truth.directions, 3 * truth.intercepts + 1)
rec2 = learn_infinite_type(SimulatedAgent(moved, space), oracle, space, 40).reconstruction
print("gauge difference:", rec.max_abs_difference(rec2))
