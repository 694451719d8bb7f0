"""
Decay bounds against exact values
=================================

The decay bounds carry tiny powers of alpha and eps, so at any size we can
brute force they are far above 1.  We print them raw and clamped anyway.
"""

# %%
from anchorlab.bounds import (
    anchored_value, bound_vs_truth, bvt_csv, coordinate_budget, epsilon_threshold, expanded_decay,
    two_player_decay,
)
from anchorlab.games import chsh, ffl

rep = two_player_decay(eps=0.1, alpha=0.5, n=1000)
print(rep.raw, rep.clamped, rep.vacuous)

# %%
# How many rounds until the two-player bound drops below 1/2?
n = 1
while two_player_decay(0.5, 1.0, n).raw >= 0.5:
    n *= 2
print(f"two_player_decay(0.5, 1, n) < 1/2 from roughly n = {n:.3g}")

# %%
print(anchored_value(0.75, 0.5))
print(expanded_decay(1, 0.5, 64, 2, 4).raw)
print(coordinate_budget(2, 0.5, 0.5))
print(epsilon_threshold(0.01, 1, 2, 0.9))

# %%
# Exact repeated values next to a bound; every row must be consistent.
print(bvt_csv(bound_vs_truth(chsh(), 2, "two_player_decay", {"eps": 0.5, "alpha": 0.5})))
print(bvt_csv(bound_vs_truth(ffl(), 2, "yuen_entangled_bound", {"c": 1})))
