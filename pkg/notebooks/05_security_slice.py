# %% [markdown]
# # Security games on a coverage slice
#
# On the full coverage polytope every attacker type's gradient for target t
# points along e_t, so gradients are parallel across types and one round is
# not enough.  Sweeping uniform coverage gives a one-dimensional game for the
# single-strategy learner, provided the slice satisfies its assumptions.

# %%
from menuprobe import games
from menuprobe.core import SimulatedAgent
from menuprobe.errors import MenuProbeError
from menuprobe.learners import check_assumption_nonparallel, learn_via_single_strategy

inst = games.gen_security(n=6, r=2, K=3, seed=0)
print("full space nonparallel:", check_assumption_nonparallel(inst.game).nonparallel_ok)
print(inst.slice_report.describe())

# %% [markdown]
# Uniform coverage lowers every target's value at once, so one target often
# stays best along the whole slice.  Random coverage directions inside the
# polytope usually find a slice where every type switches actions.

# %%
import numpy as np

rng = np.random.default_rng(0)
seed = 0
for attempt in range(200):
    direction = rng.dirichlet(0.5 * np.ones(6)) * 2
    if direction.max() > 1:
        continue
    inst = games.gen_security(n=6, r=2, K=3, seed=seed, direction=direction)
    if inst.slice_report.ok:
        break
print("direction", np.round(direction, 3), "after", attempt + 1, "draws")
line = inst.slice_game
for ty in line.types:
    try:
        res = learn_via_single_strategy(line, SimulatedAgent(ty, line.space))
        print(ty.type_id, "->", res.identified_type, "in", res.rounds, "rounds")
    except MenuProbeError as exc:
        print(ty.type_id, "failed:", exc)
