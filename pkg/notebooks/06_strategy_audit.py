"""
Auditing CHSH(n) strategies
===========================
"""

# %%
import numpy as np

from anchorlab.audit import (
    anticommutator_residual, audit_fuzz, block_identity_check, canonical_chsh_strategy,
    condition_zero_epsilon, equivalence_residuals, perturb,
)

s = canonical_chsh_strategy(3)
print(condition_zero_epsilon(s))
print(equivalence_residuals(s).to_dict()["sums"])

# %%
# Nudge every observable and the state; the residuals grow with the
# measured eps and stay under their bounds.
rng = np.random.default_rng(0)
for theta in (0.01, 0.05, 0.2):
    t = perturb(s, theta, rng)
    eq = equivalence_residuals(t)
    ac = anticommutator_residual(t)
    print(f"theta={theta}: eps={eq.epsilon:.2e} sums={eq.sym_plus + eq.sym_minus:.2e} "
          f"bound={eq.bound:.2e} anticomm={ac.value:.2e}<{ac.bound:.2e}")

# %%
for n in (1, 3, 5, 7):
    rep = block_identity_check(n)
    print(n, rep.dim, f"{rep.deviation:.1e}", rep.hermitian)

# %%
rows = audit_fuzz(50, seed=2)
print(sum(r["holds"] for r in rows), "of", len(rows), "perturbed strategies satisfy every bound")
