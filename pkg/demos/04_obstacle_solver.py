"""Backward solves with an obstacle: direct reflection versus penalization.

The direct scheme takes Y = max(yhat, S) node by node, so the pathwise
minimality sum (Y - S) dK vanishes term by term.  The penalized scheme adds
n (y - S)^- to the driver through a closed-form resolvent step; its value at
the initial node increases to the reflected one like 1/n, a rate visible in
the gap ratios below.  When the backward integrand g depends on (y, z) the
solve wraps in a fixed-point loop measured in an exponentially weighted norm.
"""

import math

import numpy as np

from rgbdsde import (build_scenario, fixed_point_solve, penalization_sweep,
                     solve_penalized, solve_reflected_direct)

print("== degenerate data reproduce the terminal value exactly ==")
setup = build_scenario("constant-terminal")
bundle, state = setup.prepare(100, seed=0)
sol = fixed_point_solve(setup.problem, bundle, setup.grid,
                        setup.regression_basis(), state=state)
print("max |Y - 1| =", np.abs(sol.Y - 1.0).max(),
      "| max |Z| =", np.abs(sol.Z).max(), "| max K =", sol.K.max())

print()
print("== linear driver: first-order convergence to e^{-r(T-t)} ==")
from rgbdsde import TimeGrid
for n_steps in (500, 1000, 2000):
    s = build_scenario("linear-ode", TimeGrid(0.0, 1.0, n_steps))
    b, st = s.prepare(8, seed=0)
    y0 = fixed_point_solve(s.problem, b, s.grid, s.regression_basis(), state=st).y0
    print(f"  n_steps = {n_steps:5d}: Y_0 = {y0:.6f}, error = {abs(y0 - math.exp(-1)):.2e}")

print()
print("== moving barrier: the direct scheme rides it, penalization approaches it ==")
setup = build_scenario("deterministic-obstacle")
bundle, state = setup.prepare(4, seed=0)
reg = setup.regression_basis()
direct = solve_reflected_direct(setup.problem, bundle, setup.grid, reg, state=state)
print("direct: Y_0 =", direct.y0, "| K_T =", float(direct.K[0, -1]),
      "| minimality residual =", float(np.abs(direct.skorokhod_residuals()).max()))

sweep = penalization_sweep(setup.problem, bundle, setup.grid, reg,
                           [1, 4, 16, 64, 256], state=state)
print("penalty level  Y_0        gap to direct")
for row, gap in zip(sweep.rows, sweep.gaps):
    print(f"  n = {row.n_penalty:5.0f}   {row.y0:.6f}   {gap:.6f}")
print("gap ratios (1/n rate shows as ~0.5 per doubling of two levels):",
      [round(x, 3) for x in sweep.gap_ratios])
print("monotone in n:", sweep.monotone)

pen = solve_penalized(setup.problem, bundle, setup.grid, 256, reg, state=state)
print("penalized n=256 minimality residual:",
      float(np.abs(pen.skorokhod_residuals()).max()))

print()
print("== fixed-point loop when g feeds back ==")
setup = build_scenario("two-atom-demo")
bundle, state = setup.prepare(256, seed=1)
sol = fixed_point_solve(setup.problem, bundle, setup.grid,
                        setup.regression_basis(), state=state)
print("iterations:", sol.meta["iterations"],
      "| contraction ratios:", ["%.2e" % x for x in sol.meta["contraction_ratios"]],
      "| Y_0 =", sol.y0)
