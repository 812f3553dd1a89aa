"""Structural identities behind the solver, checked numerically.

Three checks: the discrete multiplicative kernel stays positive exactly when
every factor 1 + dX does (the engine of comparison arguments); solutions of
ordered problems stay ordered pathwise on common random numbers; and a sum
of a function over jumps is reconstructed exactly from martingale integrals
plus a compensator whenever the basis spans the jump atoms.
"""

import numpy as np

from rgbdsde import (BsdeProblem, CoefficientSpec, RegressionBasis, TimeGrid,
                     build_measure, check_comparison, check_compensation,
                     doleans_dade, no_obstacle, orthonormal_basis, property_suite,
                     simulate_bundle, solve_reflected_direct, build_scenario)

print("== multiplicative kernel ==")
model = build_measure([], sigma0=1.0, drift=0.0)
basis = orthonormal_basis(model, 1)
grid = TimeGrid(0.0, 1.0, 1000)
bundle = simulate_bundle(model, basis, grid, 2, seed=0)
kernel = doleans_dade(1.0, 0.0, 0.0, bundle, grid)
print("constant unit rate compounds to e:", kernel.gamma[0, -1],
      "| positive:", kernel.positive)

spiky = build_measure([(3.0, 1.0)], sigma0=0.0, drift=0.0)
sb = simulate_bundle(spiky, orthonormal_basis(spiky, 1), TimeGrid(0, 1, 10), 1,
                     seed=1, forced_jumps=[(0.45, 3.0)])
bad = doleans_dade(0.0, 0.0, -1.5, sb, TimeGrid(0, 1, 10))
print("a loading pushing a factor below zero is flagged, not raised:",
      not bad.positive, "| min factor:", bad.min_factor)

print()
print("== comparison of ordered problems ==")
common = dict(f=lambda t, x, y, z: -0.5 * y,
              phi=lambda t, x, y: np.zeros(np.shape(x)),
              g=lambda t, x, y, z: 0.2 * np.ones(np.shape(x)),
              lipschitz_c=1.0, phi_monotone_beta=0.0, g_z_alpha=0.5)
p_hi = BsdeProblem(CoefficientSpec(**common),
                   no_obstacle(lambda x: np.full(np.shape(x), 1.5)))
p_lo = BsdeProblem(CoefficientSpec(**common),
                   no_obstacle(lambda x: np.full(np.shape(x), 0.5)))
g100 = TimeGrid(0.0, 1.0, 100)
b100 = simulate_bundle(model, basis, g100, 1000, seed=17)
state = np.zeros_like(b100.B)
report = check_comparison(p_hi, p_lo, b100, g100, RegressionBasis(degree=2),
                          state=state)
print("terminal shifted by +1: min(Y1 - Y2) =", report.min_gap,
      "| regression allowance:", report.eps_reg)
print("hypotheses probed:", report.hypotheses_verified,
      "| kernel positive:", report.kernel_positive,
      "| violations:", report.n_violations)

print()
print("== jump-sum reconstruction ==")
atom = build_measure([(1.0, 1.0)], sigma0=0.0, drift=0.0)
ab = orthonormal_basis(atom, 1)
abun = simulate_bundle(atom, ab, g100, 10_000, seed=31)
comp = check_compensation(atom, ab, abun, g100, lambda s, y: y**2, bound_b=2.0)
print("convention chosen by the exactness audit:", comp.convention,
      "| audit errors:", comp.audit_errors)
print("worst per-path gap:", comp.max_abs_gap,
      "| mean jump sum:", comp.lhs_mean, "(expected rate * size^2 * T = 1)")

under = build_measure([(1.0, 2.0), (-0.5, 3.0)], sigma0=0.0, drift=0.0)
ub = orthonormal_basis(under, 1)  # too small to span two atoms
ubun = simulate_bundle(under, ub, TimeGrid(0, 1, 50), 20_000, seed=9)
ucomp = check_compensation(under, ub, ubun, TimeGrid(0, 1, 50), lambda s, y: y**2)
print("under-spanned basis: gap is genuine but centered;",
      f"|mean| = {abs(ucomp.mean_gap):.2e} = {ucomp.mean_zero_within:.2f} standard errors")

print()
print("== solution property suite ==")
setup = build_scenario("deterministic-obstacle")
bund, st = setup.prepare(4, seed=0)
sol = solve_reflected_direct(setup.problem, bund, setup.grid,
                             setup.regression_basis(), state=st)
print(property_suite(sol, setup.problem, setup.grid).text())
