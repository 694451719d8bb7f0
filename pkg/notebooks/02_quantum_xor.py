"""
Entangled value of XOR games
============================

The entangled bias of an XOR game is a small semidefinite program over
unit vectors.  We solve it for CHSH and its XOR square and compare with
the classical bias.
"""

# %%
import math

import numpy as np

from anchorlab.games import chsh, repeat
from anchorlab.xor_sdp import classical_bias, quantum_bias, xor_matrix

g = xor_matrix(chsh())
print(g.matrix)

# %%
sol = quantum_bias(g)
print(f"bias {sol.bias:.10f}  (1/sqrt2 = {1 / math.sqrt(2):.10f})")
print(f"value {sol.value:.10f}, gap {sol.gap:.1e}, {sol.iterations} iterations")
print("classical bias", classical_bias(g))

# %%
# The Gram matrix at the optimum holds the players' unit vectors.  For
# CHSH they sit at 45 degree angles.
w, v = np.linalg.eigh(sol.Z)
print("rank of Z:", int((w > 1e-6).sum()))

# %%
# For XOR games the bias is multiplicative: the bias of two copies played
# with the XOR of the outcomes is the square.
sol2 = quantum_bias(xor_matrix(repeat(chsh(), 2)))
print(f"bias of CHSH (x) CHSH {sol2.bias:.8f}, square of CHSH bias {sol.bias**2:.8f}")

# %%
# The Gram-vector ascent gives the same number and is a useful cross-check.
print(quantum_bias(g, method="gram").bias)
