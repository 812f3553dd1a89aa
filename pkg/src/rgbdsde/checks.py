"""Numerical verification of the structural identities behind the solver.

Three families of checks live here: the positive multiplicative kernel that
linearizes comparison arguments, the comparison inequality itself on solved
pairs, and the jump-compensation identity that reconstructs a sum over jumps
from martingale integrals plus a compensator.  Everything is report-style:
a violated hypothesis is an outcome, not an exception, except where the spec
of an operation is plainly unusable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .errors import ValidationError
from .measures import LevyMeasureModel, PolynomialBasis
from .paths import PathBundle, TimeGrid
from .regression import RegressionBasis
from .solver import BsdeProblem, DiscreteSolution, solve_reflected_direct


@dataclass(eq=False)
class KernelPath:
    """Discrete multiplicative kernel Gamma_{i+1} = Gamma_i (1 + dX_i).

    The continuous object is a stochastic exponential; the discrete product
    is the exact solution of the linear recursion the solver implements, so
    no Ito correction term appears.  Positivity of every factor is the
    discrete form of the jump condition sum_i beta^i dH^(i) > -1.
    """

    gamma: np.ndarray
    factors: np.ndarray
    positive: bool
    n_nonpositive: int
    min_factor: float


def _as_steps(arr, P, N, m=None):
    shape = (P, N) if m is None else (P, N, m)
    return np.broadcast_to(np.asarray(arr, dtype=float), shape)


def doleans_dade(a_path, b_path, beta_paths, bundle: PathBundle,
                 grid: TimeGrid) -> KernelPath:
    """Kernel driven by a dt + b dA + sum_i beta^i dH^(i).

    Coefficient paths broadcast against (n_paths, n_steps[, m]).  Nonpositive
    factors are flagged, never raised: a negative kernel is evidence that the
    comparison hypotheses fail, which is itself a reportable outcome.
    """
    if bundle.grid != grid:
        raise ValidationError("bundle was simulated on a different grid")
    P, N, m = bundle.n_paths, grid.n_steps, bundle.m
    a = _as_steps(a_path, P, N)
    b = _as_steps(b_path, P, N)
    beta = _as_steps(beta_paths, P, N, m)
    dX = (a * grid.dt + b * np.diff(bundle.A, axis=1)
          + np.sum(beta * np.diff(bundle.H, axis=1), axis=2))
    factors = 1.0 + dX
    gamma = np.concatenate([np.ones((P, 1)), np.cumprod(factors, axis=1)], axis=1)
    n_bad = int(np.sum(factors <= 0.0))
    return KernelPath(gamma=gamma, factors=factors, positive=n_bad == 0,
                      n_nonpositive=n_bad, min_factor=float(np.min(factors)))


@dataclass(eq=False)
class ComparisonReport:
    """Outcome of a pathwise comparison between two solved problems."""

    min_gap_per_node: np.ndarray
    min_gap: float
    eps_reg: float
    hypotheses_verified: bool
    kernel_positive: bool
    n_violations: int
    worst_violation: float

    @property
    def holds(self) -> bool:
        return self.n_violations == 0


def check_comparison(problem1: BsdeProblem, problem2: BsdeProblem,
                     bundle: PathBundle, grid: TimeGrid, basis: RegressionBasis,
                     *, state: Optional[np.ndarray] = None,
                     n_probe_nodes: int = 8) -> ComparisonReport:
    """Solve both problems on common randomness and report min(Y1 - Y2).

    Preconditions are probed, not assumed: xi1 >= xi2 on the terminal states
    and f1 >= f2 along the second solution's trajectory.  The regression-noise
    allowance eps_reg is measured by re-solving with a doubled feature basis
    and taking the largest observed shift.  The report also carries the
    positivity flag of the divided-difference kernel.
    """
    sol1 = solve_reflected_direct(problem1, bundle, grid, basis, state=state)
    sol2 = solve_reflected_direct(problem2, bundle, grid, basis, state=state)
    state_arr = sol1.state
    nodes = grid.nodes
    N = grid.n_steps
    m = bundle.m

    # hypothesis probes on terminal values and along the solved trajectory
    xi1 = np.broadcast_to(np.asarray(problem1.obstacle.terminal(state_arr[:, -1]), dtype=float),
                          state_arr[:, -1].shape)
    xi2 = np.broadcast_to(np.asarray(problem2.obstacle.terminal(state_arr[:, -1]), dtype=float),
                          state_arr[:, -1].shape)
    hyp_ok = bool(np.min(xi1 - xi2) >= -1e-12)
    probe_nodes = np.unique(np.linspace(0, N - 1, n_probe_nodes).astype(int))
    for i in probe_nodes:
        f1 = np.broadcast_to(np.asarray(
            problem1.coefficients.f(nodes[i], state_arr[:, i], sol2.Y[:, i + 1], sol2.Z[:, i]),
            dtype=float), sol2.Y[:, i + 1].shape)
        f2 = np.broadcast_to(np.asarray(
            problem2.coefficients.f(nodes[i], state_arr[:, i], sol2.Y[:, i + 1], sol2.Z[:, i]),
            dtype=float), sol2.Y[:, i + 1].shape)
        if np.min(f1 - f2) < -1e-12:
            hyp_ok = False

    # divided-difference coefficients feeding the kernel
    tiny = 1e-14
    P = bundle.n_paths
    a = np.zeros((P, N))
    b = np.zeros((P, N))
    beta = np.zeros((P, N, m))
    f1c = problem1.coefficients.f
    phi1 = problem1.coefficients.phi
    for i in range(N):
        t = nodes[i]
        x = state_arr[:, i]
        y1, y2 = sol1.Y[:, i + 1], sol2.Y[:, i + 1]
        z1, z2 = sol1.Z[:, i], sol2.Z[:, i]
        dy = y1 - y2
        mask = np.abs(dy) > tiny
        fa = np.broadcast_to(np.asarray(f1c(t, x, y1, z1), dtype=float), dy.shape)
        fb = np.broadcast_to(np.asarray(f1c(t, x, y2, z1), dtype=float), dy.shape)
        np.divide(fa - fb, dy, out=a[:, i], where=mask)
        pa = np.broadcast_to(np.asarray(phi1(t, x, y1), dtype=float), dy.shape)
        pb = np.broadcast_to(np.asarray(phi1(t, x, y2), dtype=float), dy.shape)
        np.divide(pa - pb, dy, out=b[:, i], where=mask)
        z_mix = z1.copy()
        for j in range(m):
            upper = np.broadcast_to(np.asarray(f1c(t, x, y2, z_mix), dtype=float), dy.shape)
            z_mix[:, j] = z2[:, j]
            lower = np.broadcast_to(np.asarray(f1c(t, x, y2, z_mix), dtype=float), dy.shape)
            dz = z1[:, j] - z2[:, j]
            mz = np.abs(dz) > tiny
            np.divide(upper - lower, dz, out=beta[:, i, j], where=mz)
    kernel = doleans_dade(a, b, beta, bundle, grid)

    # regression allowance from a doubled basis
    wide = basis.widened()
    sol1w = solve_reflected_direct(problem1, bundle, grid, wide, state=state)
    sol2w = solve_reflected_direct(problem2, bundle, grid, wide, state=state)
    eps_reg = float(max(np.max(np.abs(sol1w.Y - sol1.Y)), np.max(np.abs(sol2w.Y - sol2.Y))))

    gap = sol1.Y - sol2.Y
    per_node = np.min(gap, axis=0)
    min_gap = float(np.min(per_node))
    violations = int(np.sum(gap < -max(eps_reg, 1e-12)))
    worst = float(max(0.0, -min_gap))
    return ComparisonReport(min_gap_per_node=per_node, min_gap=min_gap, eps_reg=eps_reg,
                            hypotheses_verified=hyp_ok, kernel_positive=kernel.positive,
                            n_violations=violations, worst_violation=worst)


@dataclass(eq=False)
class CompensationReport:
    """Two-sided evaluation of the jump-sum reconstruction identity."""

    gaps: np.ndarray
    mean_gap: float
    sd_gap: float
    max_abs_gap: float
    standard_error: float
    convention: str
    audit_errors: Dict[str, float]
    lhs_mean: float
    compensator: float

    @property
    def mean_zero_within(self) -> float:
        """|mean| measured in standard errors (0 when there is no spread)."""
        if self.standard_error == 0.0:
            return 0.0
        return abs(self.mean_gap) / self.standard_error


def _projection_weights(model: LevyMeasureModel, basis: PolynomialBasis,
                        c_values: np.ndarray, convention: str) -> np.ndarray:
    """<c, p_i> against nu (rates) or mu (rates * y^2) on the jump atoms."""
    sizes = model.jump_sizes
    rates = model.jump_rates
    w = rates if convention == "nu" else rates * sizes**2
    p_at = np.column_stack([basis.p_values(i, sizes) for i in range(1, basis.m + 1)])
    return (c_values * w) @ p_at  # (m,)


def _reconstruction_error(model, basis, c_fn, t, convention) -> float:
    sizes = model.jump_sizes
    if sizes.size == 0:
        return 0.0
    c_at = np.asarray(c_fn(t, sizes), dtype=float)
    wvec = _projection_weights(model, basis, c_at, convention)
    p_at = np.column_stack([basis.p_values(i, sizes) for i in range(1, basis.m + 1)])
    rebuilt = p_at @ wvec
    scale = max(1.0, float(np.max(np.abs(c_at))))
    return float(np.max(np.abs(rebuilt - c_at))) / scale


def check_compensation(model: LevyMeasureModel, basis: PolynomialBasis,
                       bundle: PathBundle, grid: TimeGrid, c_fn: Callable,
                       *, t_start: Optional[float] = None,
                       bound_b: Optional[float] = None,
                       convention: str = "auto") -> CompensationReport:
    """Compare sum_{jumps} c(s, dL_s) against martingale integrals plus compensator.

    ``c_fn(s, y)`` must vectorize over y.  The left side sums the stored jump
    records exactly; the right side integrates <c(s,.), p_i> against each
    martingale increment step by step (left endpoint) and adds the analytic
    compensator integral discretized on the same grid, so for time-independent
    c the identity is exact per path whenever the basis spans the atom
    polynomials.  The projection weight defaults to whichever of the nu- or
    mu-weighted inner product reconstructs c on the atoms ("auto").
    """
    if bundle.grid != grid:
        raise ValidationError("bundle was simulated on a different grid")
    if convention not in ("auto", "nu", "mu"):
        raise ValidationError(f"unknown convention {convention!r}")
    t0 = grid.t0 if t_start is None else float(t_start)
    sizes = model.jump_sizes
    rates = model.jump_rates
    nodes = grid.nodes

    if bound_b is not None and sizes.size:
        envelope = np.minimum(sizes**2, np.abs(sizes))
        for t in np.linspace(grid.t0, grid.T, 9):
            c_at = np.abs(np.asarray(c_fn(t, sizes), dtype=float))
            if np.any(c_at > bound_b * envelope * (1 + 1e-9) + 1e-12):
                raise ValidationError(
                    f"|c(s, y)| exceeds bound_b * (y^2 ^ |y|) at t={t:.4g}")

    audit = {conv: _reconstruction_error(model, basis, c_fn, t0, conv)
             for conv in ("nu", "mu")}
    if convention == "auto":
        convention = "nu" if audit["nu"] <= audit["mu"] else "mu"

    P, N = bundle.n_paths, grid.n_steps
    in_window = bundle.jump_time > t0
    lhs = np.zeros(P)
    if np.any(in_window):
        rows = bundle.jump_row[in_window]
        contrib = np.asarray(c_fn(bundle.jump_time[in_window],
                                  bundle.jump_size[in_window]), dtype=float)
        np.add.at(lhs, rows, contrib)

    dH = np.diff(bundle.H, axis=1)
    teugels = np.zeros(P)
    compensator = 0.0
    for i in range(N):
        if nodes[i] < t0 - 1e-15:
            continue
        if sizes.size:
            c_at = np.asarray(c_fn(nodes[i], sizes), dtype=float)
            wvec = _projection_weights(model, basis, c_at, convention)
            teugels += dH[:, i, :] @ wvec
            compensator += grid.dt * float(np.sum(c_at * rates))

    gaps = lhs - (teugels + compensator)
    sd = float(np.std(gaps, ddof=1)) if P > 1 else 0.0
    return CompensationReport(
        gaps=gaps,
        mean_gap=float(np.mean(gaps)),
        sd_gap=sd,
        max_abs_gap=float(np.max(np.abs(gaps))),
        standard_error=sd / np.sqrt(P) if P > 1 else 0.0,
        convention=convention,
        audit_errors=audit,
        lhs_mean=float(np.mean(lhs)),
        compensator=compensator,
    )


@dataclass(frozen=True)
class PropertyResult:
    name: str
    passed: bool
    worst: float
    tolerance: float


@dataclass(eq=False)
class PropertyReport:
    """Machine-readable pass/fail per solution property."""

    results: List[PropertyResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> List[str]:
        return [r.name for r in self.results if not r.passed]

    def to_dict(self) -> Dict[str, dict]:
        return {r.name: {"pass": r.passed, "worst": r.worst, "tolerance": r.tolerance}
                for r in self.results}

    def text(self) -> str:
        lines = []
        for r in self.results:
            status = "PASS" if r.passed else "FAIL"
            lines.append(f"{status} {r.name}: worst={r.worst:.6e} tol={r.tolerance:.1e}")
        return "\n".join(lines)


def property_suite(solution: DiscreteSolution, problem: BsdeProblem, grid: TimeGrid,
                   *, skorokhod_tol: float = 1e-8, obstacle_tol: float = 1e-8,
                   monotonicity_tol: float = 0.0) -> PropertyReport:
    """Evaluate the defining solution properties at named tolerances.

    Checks: K starts at zero and never decreases, Y dominates the obstacle,
    the pathwise Skorokhod residual vanishes, and the a priori functional is
    finite.  Report-only; combine with exit codes at the CLI layer.
    """
    S = solution.obstacle_values
    dK = solution.dK
    results = [
        PropertyResult("k_initial_zero", bool(np.all(solution.K[:, 0] == 0.0)),
                       float(np.max(np.abs(solution.K[:, 0]))), 0.0),
        PropertyResult("k_monotone",
                       bool(dK.size == 0 or dK.min() >= -monotonicity_tol),
                       float(-dK.min()) if dK.size else 0.0, monotonicity_tol),
        PropertyResult("obstacle_dominated",
                       bool(np.min(solution.Y - S) >= -obstacle_tol),
                       float(max(0.0, -np.min(solution.Y - S))), obstacle_tol),
    ]
    res = solution.skorokhod_residuals()
    worst_res = float(np.max(np.abs(res))) if res.size else 0.0
    results.append(PropertyResult("skorokhod_minimality", worst_res <= skorokhod_tol,
                                  worst_res, skorokhod_tol))
    apriori = solution.a_priori_functional()
    results.append(PropertyResult("a_priori_finite", bool(np.isfinite(apriori)),
                                  apriori, float("inf")))
    return PropertyReport(results=results)
