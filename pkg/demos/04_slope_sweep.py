"""Measuring degrees of freedom as a rate slope.

The sum rate of a design grows like (streams) x 0.5*log2(P) at high power.
We sweep P over four decades, average over fresh channel draws and fit the
slope on the top decade.
"""

import numpy as np

from doflab import DoFTuple, NetworkConfig, ssa

cases = {
    "Y channel after detour": ((3, 2, 2), 3, (2, 1, 1, 0, 1, 0)),
    "4 users, single cycle after detour": ((6, 6, 4, 3), 6, (1, 1, 1, 0, 1, 1, 0, 0, 1, 0, 1, 1)),
}
grid = ssa.default_power_grid()

for title, (M, N, flat) in cases.items():
    cfg, d = NetworkConfig(M, N), DoFTuple.from_flat(flat)
    fit = ssa.rate_curve(cfg, d, seed=0, power_grid=grid, trials=20)
    print(f"\n{title}: {d.total} streams, fitted slope {fit.slope:.3f}")
    for P, r, w in zip(fit.powers[::4], fit.sum_rates[::4], fit.window[::4]):
        print(f"  P={P:9.0f}  sum rate {r:7.2f} bits  {'(fit window)' if w else ''}")
    x = 0.5 * np.log2(fit.powers)
    print("  low-power slope for comparison:", round(float(np.polyfit(x[:5], fit.sum_rates[:5], 1)[0]), 3))
