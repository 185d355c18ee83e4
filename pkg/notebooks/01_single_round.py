# %% [markdown]
# # Single-round identification with a ball menu
#
# With two or more effective dimensions, one ball menu is enough: every type
# picks the point of the ball where its favourite action's gradient points,
# and distinct gradients give distinct picks.

# %%
import numpy as np

from menuprobe import games
from menuprobe.core import SimulatedAgent
from menuprobe.learners import design_ball_menu, single_round_identify

game = games.gen_stackelberg(m=3, n=4, K=12, seed=3)
design = design_ball_menu(game, seed=0)
print("centre", design.menu.center, "radius", round(design.menu.radius, 4))

# %% [markdown]
# Each type's predicted choice is a different point on the sphere.

# %%
pts = design.predicted_points
gaps = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
print("smallest distance between two predicted choices:", gaps[np.triu_indices(len(pts), 1)].min())

# %%
for ty in game.types[:4]:
    res = single_round_identify(game, SimulatedAgent(ty, game.space), design=design)
    print(f"true {ty.type_id:>2}  identified {res.identified_type:>2}  rounds {res.rounds}")
