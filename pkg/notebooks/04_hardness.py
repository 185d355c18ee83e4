# %% [markdown]
# # A family where menus win exponentially
#
# Every non-empty type is a half-size subset of the leader's actions.  One
# menu identifies all of them at once, while posting single strategies splits
# off at most one type per round.

# %%
from menuprobe import games
from menuprobe.core import SimulatedAgent

for m in (4, 6, 8):
    game, menu = games.build_hardness_example(m)
    menu_rounds, seq_rounds = [], []
    for ty in game.types:
        menu_rounds.append(games.identify_via_hardness_menu(game, menu, SimulatedAgent(ty, game.space)).rounds)
        seq_rounds.append(games.sequential_probe_baseline(game, menu, SimulatedAgent(ty, game.space)).rounds)
    print(f"m={m}: K={game.n_types:3d}  menu max rounds {max(menu_rounds)}  sequential max rounds {max(seq_rounds)}")

# %% [markdown]
# The empty type never plays the revealing action, so any other response names it.

# %%
game, menu = games.build_hardness_example(4)
res = games.identify_via_hardness_menu(game, menu, SimulatedAgent(game.type_by_id("{}"), game.space))
print(res.identified_type, res.transcript.rounds[0].action)
