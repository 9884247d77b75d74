"""Disorderly stream: fitting gaps directly and choosing L by AIC.

Without lanes there are no headways to fit, only gaps of the merged
stream. The model is fitted for several L and the information criterion
picks the number of components. Times are rounded to video resolution.
"""

# %%
import numpy as np

from gapflow import Gamma, OptimizerOptions, SuperposedGapModel, select_L, simulate_superposed

truth = SuperposedGapModel([Gamma(3.282, 3.343), Gamma(0.501, 0.280)])
sample = simulate_superposed(truth, horizon=3000.0 + 500.0, seed=4, warmup=500.0, resolution=0.04)
gaps = sample.gaps
print(f"{len(gaps)} gaps, {sample.n_zero} simultaneous crossings, mean {gaps.mean():.3f} s")

# %% zero gaps carry no density information and are dropped by the fitter
best, table = select_L(gaps, "gamma", range(1, 4), OptimizerOptions(n_starts=6, seed=0))
print(f"{'L':>2} {'loglik':>10} {'AIC':>10}")
for L, r in sorted(table.items()):
    if isinstance(r, Exception):
        print(f"{L:>2} failed: {r}")
        continue
    print(f"{L:>2} {r.max_loglik:10.2f} {r.aic:10.2f}{'  <' if L == best.L else ''}")

# %% the components need not resemble the true ones; the density is what the
# data pin down, and near zero it is also blurred by the 0.04 s rounding
print(best.summary())
grid = np.array([0.05, 0.1, 0.2, 0.5, 1.0, 2.0])
print("g      true pdf  fitted pdf")
for g, a, b in zip(grid, truth.pdf(grid), best.model.pdf(grid)):
    print(f"{g:4.2f} {a:10.3f} {b:11.3f}")
