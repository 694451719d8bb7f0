"""
Classical values by enumeration
===============================

Brute-force values of CHSH and FFL, their repetitions and anchored versions.
"""

# %%
from fractions import Fraction

from anchorlab.games import anchor, chsh, classical_value, ffl, repeat, worst_case_value

# Values come back as exact fractions when the question distribution is
# dyadic or given as fractions.
print("CHSH       ", classical_value(chsh()))
print("CHSH worst ", worst_case_value(chsh()))
print("FFL        ", classical_value(ffl()))

# %%
# Two rounds in parallel.  CHSH drops from 3/4 to 5/8; FFL stays at 2/3.
for name, g in (("CHSH", chsh()), ("FFL", ffl())):
    v1, v2 = classical_value(g), classical_value(repeat(g, 2))
    print(f"{name}: n=1 {v1}  n=2 {v2}  ratio v2/v1^2 = {float(v2 / v1**2):.4f}")

# %%
# Anchoring: with probability alpha a player gets the symbol ⊥ and the
# round is won automatically.  The value follows 1 - (1-alpha)^2 (1 - w).
w = classical_value(chsh())
for alpha in (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)):
    got = classical_value(anchor(chsh(), alpha))
    print(f"alpha={alpha}: {got}  formula {1 - (1 - alpha) ** 2 * (1 - w)}")

# %%
# The optimal strategy that brute force reports is the lexicographically
# first one, labelled by question.
v, s = classical_value(ffl(), return_strategy=True)
print(v, s.labelled(ffl()))
