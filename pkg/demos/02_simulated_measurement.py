"""
Simulating the two-copy measurement
===================================

The two-copy state is never prepared as a whole. Each of the 100 ordered
pairs of constituents is prepared, measured in the 17 settings with a fixed
number of shots, and the pair results are weighted by the mixture weights.
Here we sample such data, estimate the witness and compare two ways of
putting an error bar on it.
"""

# %%
import numpy as np

from gmeact import experiment, witness
from gmeact.states import n_copy_state

w = witness.load_paper_witness()
weights = experiment.EstimatorWeights.build(w, q=0.06)
exact = witness.evaluate(w, n_copy_state(0.06, 2))
print(f"exact value: {exact:.5e}")

# %%
# Fifty shots per pair and setting, as a small trapped-ion run would take.
table = experiment.sample_shot_table(0.06, n=50, seed=7)
est = experiment.estimate_witness(table, weights)
sigma = np.sqrt(experiment.propagate_variance(table, weights))
print(f"estimate {est:.5e} +- {sigma:.2e}  ({abs(est) / sigma:.1f} standard deviations below zero)")

# %%
# Linear error propagation uses the multinomial covariance of each cell.
# Resampling the observed frequencies gives an independent estimate.
boot = experiment.resample_witness(table, weights, runs=1000, seed=7)
print(f"bootstrap sigma {boot.std(ddof=1):.2e}, propagated sigma {sigma:.2e}")
hist, edges = np.histogram(boot, bins=9)
for count, left in zip(hist, edges):
    print(f"{left:+.5f} {'#' * (count // 5)}")

# %%
# Hardware imperfections shrink the violation. A depolarizing plus dephasing
# model on each constituent shows how quickly.
for depol in (0.0, 0.05, 0.1, 0.2):
    noisy = experiment.sample_shot_table(0.06, noise=experiment.NoiseModel(depol, 0.01), exact=True)
    print(f"depolarizing {depol:4.2f}, dephasing 0.01: <W> = {experiment.estimate_witness(noisy, weights):+.5e}")
