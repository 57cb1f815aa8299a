"""
Reconstructing the constituents
===============================

Each constituent can be characterized by three-qubit Pauli tomography: 27
settings with a few hundred shots each, then a maximum-likelihood fit. The
fitted constituents, mixed with the same weights, estimate the state.
"""

# %%
import numpy as np

from gmeact import bisep, experiment
from gmeact.linalg import fidelity, projector
from gmeact.states import constituent_ket, single_copy_state

a0 = projector(constituent_ket(0).amplitudes)
fids = [fidelity(experiment.tomograph_constituent(a0, 200, seed=s), a0) for s in range(10)]
print("fidelity of 200-shot reconstructions of |a0>:", np.round(fids, 4))

# %%
# Mixing the reconstructed constituents gives an estimate of rho(0.06).
rho = single_copy_state(0.06)
for s in range(3):
    est = experiment.tomograph_mixture(0.06, shots=200, seed=s)
    print(f"seed {s}: 1 - F = {experiment.infidelity(est, rho):.2e}")

# %%
# Noiseless reconstructions are almost pure and inherit a little spurious
# entanglement, which is enough to keep the biseparability certifier from
# converging. Realistic noise makes the estimate mixed enough to certify.
for depol in (0.0, 0.05):
    est = experiment.tomograph_mixture(0.06, shots=200, seed=0, noise=experiment.NoiseModel(depol))
    trace = bisep.certify(est)
    print(f"depolarizing {depol:4.2f}: {trace.verdict} after {trace.iterations} iterations")
