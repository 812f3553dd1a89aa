"""Reflected state dynamics on [-theta, theta] and the boundary local time.

Projection is applied after the drift sub-step and after every individual
jump, so a diffusion coefficient satisfying the jump-invariance condition
x + y sigma(x) in [-theta, theta] produces exactly zero local time.  The
local time |eta| is the increasing process the generalized solver term
integrates against in the state-driven setting.
"""

import numpy as np

from rgbdsde import (ReflectedCoefficients, TimeGrid, attach_increasing_process,
                     build_measure, orthonormal_basis, simulate_bundle,
                     simulate_reflected, validate_invariance)

grid = TimeGrid(0.0, 1.0, 200)

print("== outward drift pinned at the barrier ==")
drift_model = build_measure([], sigma0=1.0, drift=1.0)
bundle = simulate_bundle(drift_model, orthonormal_basis(drift_model, 1), grid, 4, seed=0)
unit = ReflectedCoefficients(theta=1.0, sigma_fn=lambda x: np.ones(np.shape(x)),
                             lipschitz_K=0.0)
refl = simulate_reflected(unit, bundle, grid, x0=1.0)
print("state stays on the barrier:", bool(np.all(refl.X == 1.0)))
print("|eta|_T =", refl.abs_eta[0, -1], "(the full horizon length: pushing at unit rate)")

bundle = attach_increasing_process(bundle, refl)
print("local time attached as the increasing process; A_T =", bundle.A[0, -1])

print()
print("== an oversized jump is projected ==")
jumpy = build_measure([(2.0, 1.0)], sigma0=0.0, drift=0.0)
jb = simulate_bundle(jumpy, orthonormal_basis(jumpy, 1), grid, 1, seed=0,
                     forced_jumps=[(0.4, 2.0)])
jr = simulate_reflected(unit, jb, grid, x0=0.0)
node = int(0.4 / grid.dt) + 1
print("jump of size 2 from 0 lands at", jr.X[0, node],
      "and books", jr.abs_eta[0, node], "of local time")

print()
print("== invariance condition ==")
two = build_measure([(1.0, 20.0), (-1.0, 20.0)], sigma0=0.0, drift=0.0)
safe = ReflectedCoefficients(theta=1.0, sigma_fn=lambda x: 0.5 * (1 - x**2),
                             lipschitz_K=1.0)
print("sigma = (1 - x^2)/2:", validate_invariance(safe, two).violated,
      "<- no violation on the 1001-point grid")
print("sigma = 1:          ", validate_invariance(unit, two).violated,
      "<- violated (x = 1 with a unit jump maps to 2)")

coarse = TimeGrid(0.0, 1.0, 20)
cb = simulate_bundle(two, orthonormal_basis(two, 2), coarse, 200, seed=3)
cr = simulate_reflected(safe, cb, coarse, x0=0.0)
print("with the condition holding, the local time is identically zero:",
      bool(np.all(cr.abs_eta == 0.0)),
      f"(even with {cb.jump_time.size} jumps over {coarse.n_steps} steps)")
