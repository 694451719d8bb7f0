"""
Distances, entropies and a fuzzing run
======================================
"""

# %%
import numpy as np

from anchorlab.entropy import (
    entropy_fuzz, mutual_information, pinsker_check, product_reference, random_product_cq, raz_check,
    relative_entropy, relative_min_entropy,
)
from anchorlab.quantum import dm, fidelity, ket, random_density, trace_norm

rng = np.random.default_rng(1)
rho, sigma = random_density(3, rng), random_density(3, rng)

print("trace distance", trace_norm(rho - sigma))
print("fidelity      ", fidelity(rho, sigma))
print("D(rho||sigma) ", relative_entropy(rho, sigma))
print("S_inf         ", relative_min_entropy(rho, sigma))

# %%
# Pinsker in its squared form: D >= ||rho - sigma||_1^2 / (2 ln 2).
rep = pinsker_check(rho, sigma)
print(rep)

# orthogonal pure states: the relative entropy is infinite
print(relative_entropy(dm(ket("0")), dm(ket("1"))))

# %%
# A classical-quantum state over three bits and its product reference.
cq = random_product_cq(rng, [2, 2, 2], 2)
print([round(mutual_information(cq, i), 4) for i in range(3)])
print(raz_check(cq, product_reference(cq)))

# %%
# A small seeded fuzz run; every row should hold.
rows = entropy_fuzz(pairs=100, channels=20, raz=50, master_seed=0)
bad = [r for r in rows if not r["holds"]]
print(f"{len(rows)} checks, {len(bad)} violations")
