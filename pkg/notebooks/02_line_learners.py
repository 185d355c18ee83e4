# %% [markdown]
# # One-dimensional spaces: menu halving and single-strategy halving
#
# With a two-action leader the strategy space is a segment and no single menu
# tells more than two types apart.  Both learners below halve the candidates
# each round.

# %%
import math

from menuprobe import games
from menuprobe.core import SimulatedAgent
from menuprobe.learners import learn_via_menu, learn_via_single_strategy, plan_line_game

K = 64
game = games.gen_stackelberg(m=2, n=4, K=K, seed=1, require="no_dominant")
plan = plan_line_game(game)
print(plan.report.describe())
print("round bound:", math.ceil(math.log2(K)) + 1)

# %%
for learner in (learn_via_menu, learn_via_single_strategy):
    rounds = []
    for ty in game.types:
        res = learner(game, SimulatedAgent(ty, game.space), plan=plan)
        assert res.identified_type == ty.type_id
        rounds.append(res.rounds)
    print(f"{learner.__name__:28s} max rounds {max(rounds)}  mean {sum(rounds) / len(rounds):.2f}")

# %% [markdown]
# The survivor log shows the halving for one run.

# %%
res = learn_via_single_strategy(game, SimulatedAgent(game.types[5], game.space), plan=plan)
print([len(s) for s in res.diagnostics["survivors"]])
