"""
Proving a state biseparable by subtraction
==========================================

Showing that a state is biseparable means writing it as a mixture of
biseparable states. The certifier does this greedily: find product states
that overlap strongly with the current remainder, subtract as much of their
mixture as lowers the purity, and stop once the remainder is so mixed that it
must be separable (purity at most 1/7 for three qubits).
"""

# %%
import numpy as np

from gmeact import bisep
from gmeact.linalg import purity
from gmeact.states import ghz_state, single_copy_state

rho = single_copy_state(0.06).entries
noisy = 0.9 * rho + 0.1 * np.eye(8) / 8
trace = bisep.certify(noisy)
print(trace.verdict, "after", trace.iterations, "iterations")
print("purity per iteration:", np.round(trace.purities, 4))

# %%
# The trace is itself the proof: the subtracted mixtures and the final
# remainder add back up to the input.
c, etas, rest = trace.decomposition()
rebuilt = sum(ci * e for ci, e in zip(c, etas)) + rest * trace.final_rho
print("reconstruction error:", np.abs(rebuilt - noisy).max())

# %%
# A genuinely entangled state is never certified; the search stalls.
print("GHZ:", bisep.certify(ghz_state()).verdict)

# %%
# The noiseless state is a harder case. It has rank 7, with
# (|000> - |111>)/sqrt(2) in its kernel. Subtracting positive terms never
# leaves that 7-dimensional support, so the purity of any remainder is at
# least 1/7. Equality holds only for the normalized projector onto the
# support, and reaching it using only A|BC and B|AC products turns out to be
# impossible. The certifier stalls close to the bound instead.
exact = bisep.certify(rho)
print(exact.verdict, f"final purity {exact.final_purity:.5f} (bound 1/7 = {1 / 7:.5f})", exact.reason)
print("rank:", np.linalg.matrix_rank(rho, tol=1e-10), " initial purity:", round(purity(rho), 5))
