"""Many superposed regular streams look Poisson.

Superposing L independent Gamma(4) streams with the same total flow, the
distance between the gap cdf and the exponential shrinks as L grows.
"""

# %%
import numpy as np

from gapflow import Gamma, SuperposedGapModel

total_flow = 1.0
print(f"{'L':>3} {'sup |F_G - F_exp|':>18}")
for L in (1, 2, 5, 10, 20, 50):
    model = SuperposedGapModel([Gamma(4.0, 4.0 * total_flow / L)] * L)
    g = np.linspace(0.0, 10.0 / total_flow, 5001)
    d = np.max(np.abs(model.cdf(g) + np.expm1(-total_flow * g)))
    print(f"{L:>3} {d:18.4f}")
