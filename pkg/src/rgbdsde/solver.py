"""Backward regression Monte Carlo for the reflected generalized equation.

The discrete recursion runs backward from the terminal condition.  At node i:

1. each martingale loading Z^(j) is the projection of Y_{i+1} * dH^(j) onto
   state features, divided by dt (the increments are orthonormal, so no
   cross-component system needs solving);
2. the conditional-expectation target adds the driver f at (t_i, X_i), the
   generalized term phi dA, and the backward integrand g evaluated at the
   right endpoint t_{i+1};
3. the obstacle enters either through an implicit penalty resolvent
   (stable for any n * dt) or a direct pointwise maximum.

When g depends on (y, z) the whole recursion is wrapped in a fixed-point
iteration that freezes g's arguments at the previous iterate, with progress
measured in an exponentially weighted norm.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .errors import (FixedPointDivergenceError, NanPropagationError,
                     ValidationError)
from .paths import PathBundle, TimeGrid
from .regression import NodeRegression, RegressionBasis

_PROBE_SEED = 20240811


@dataclass(frozen=True)
class CoefficientSpec:
    """Driver coefficients with their declared structural constants.

    All callables are vectorized over paths: f(t, x, y, z) with scalar t,
    x and y of shape (P,) and z of shape (P, m), returning (P,) (scalars
    broadcast).  The declared constants are spot-checked on random probes by
    :func:`validate_problem`:

    - ``lipschitz_c``: |f(y1,z1)-f(y2,z2)|^2 <= c(|dy|^2 + |dz|^2), and the
      same c bounds phi's Lipschitz constant and g's y-sensitivity;
    - ``phi_monotone_beta`` (<= 0): (y1-y2)(phi(y1)-phi(y2)) <= beta |y1-y2|^2;
    - ``g_z_alpha`` in (0, 1): |g(y1,z1)-g(y2,z2)|^2 <= c|dy|^2 + alpha|dz|^2.
    """

    f: Callable
    phi: Callable
    g: Callable
    lipschitz_c: float
    phi_monotone_beta: float
    g_z_alpha: float
    growth_K: float = 1.0


@dataclass(frozen=True)
class ObstacleSpec:
    """Lower barrier S(t, x) and terminal condition xi(x)."""

    barrier: Callable
    terminal: Callable


def no_obstacle(terminal: Callable, floor: float = -1.0e6) -> ObstacleSpec:
    """Obstacle so far below the solution that reflection never engages."""
    return ObstacleSpec(barrier=lambda t, x: np.full(np.shape(x), floor), terminal=terminal)


@dataclass(frozen=True)
class BsdeProblem:
    coefficients: CoefficientSpec
    obstacle: ObstacleSpec


@dataclass(eq=False)
class DiscreteSolution:
    """Grid-indexed (Y, Z, K) triple with per-path values.

    Y has shape (P, N+1), Z (P, N, m) with Z[:, i] the loadings on step i,
    and K (P, N+1) cumulates the per-step pushes; K[:, 0] = 0.
    """

    grid: TimeGrid
    Y: np.ndarray
    Z: np.ndarray
    K: np.ndarray
    state: np.ndarray
    obstacle_values: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def dK(self) -> np.ndarray:
        return np.diff(self.K, axis=1)

    @property
    def y0(self) -> float:
        return float(np.mean(self.Y[:, 0]))

    def skorokhod_residuals(self) -> np.ndarray:
        """Per-path sum of (Y_i - S_i) dK_i; zero when pushes only act on contact."""
        gap = self.Y[:, :-1] - self.obstacle_values[:, :-1]
        return np.sum(gap * self.dK, axis=1)

    def a_priori_functional(self) -> float:
        """mean of sup_i |Y_i|^2 + sum |Z_i|^2 dt + K_T^2 over paths."""
        sup_y2 = np.max(self.Y**2, axis=1)
        z2 = np.sum(self.Z**2, axis=(1, 2)) * self.grid.dt
        return float(np.mean(sup_y2 + z2 + self.K[:, -1] ** 2))


def _eval_rows(fn, t, x, *rest):
    out = np.asarray(fn(t, x, *rest), dtype=float)
    return np.broadcast_to(out, np.shape(x)).astype(float, copy=False)


def _backward_pass(coeffs, obstacle, bundle, grid, reg_basis, state, *,
                   scheme, n_penalty, g_frozen=None):
    nodes = grid.nodes
    dt = grid.dt
    P = bundle.n_paths
    N = grid.n_steps
    m = bundle.m
    dB = np.diff(bundle.B, axis=1)
    dH = np.diff(bundle.H, axis=1)
    dA = np.diff(bundle.A, axis=1)

    S = np.empty((P, N + 1))
    for i in range(N + 1):
        S[:, i] = _eval_rows(obstacle.barrier, nodes[i], state[:, i])

    Y = np.empty((P, N + 1))
    Z = np.zeros((P, N, m))
    dK = np.zeros((P, N))
    Y[:, N] = _eval_rows(lambda t, x: obstacle.terminal(x), nodes[N], state[:, N])
    if not np.all(np.isfinite(Y[:, N])):
        raise NanPropagationError(N)

    zeros_m = np.zeros((P, m))
    for i in range(N - 1, -1, -1):
        fit = NodeRegression(reg_basis, state[:, i], node=i)
        Zi = fit.fitted(Y[:, i + 1][:, None] * dH[:, i, :]) / dt if m else zeros_m
        Z[:, i] = Zi

        fv = _eval_rows(coeffs.f, nodes[i], state[:, i], Y[:, i + 1], Zi)
        pv = _eval_rows(coeffs.phi, nodes[i], state[:, i], Y[:, i + 1])
        if g_frozen is None:
            gy = Y[:, i + 1]
            gz = Z[:, i + 1] if i + 1 < N else zeros_m
        else:
            gy = g_frozen[0][:, i + 1]
            gz = g_frozen[1][:, i + 1] if i + 1 < N else zeros_m
        gv = _eval_rows(coeffs.g, nodes[i + 1], state[:, i + 1], gy, gz)

        target = Y[:, i + 1] + fv * dt + pv * dA[:, i] + gv * dB[:, i]
        yhat = fit.fitted(target)

        Si = S[:, i]
        if scheme == "direct":
            Yi = np.maximum(yhat, Si)
            dK[:, i] = np.maximum(Si - yhat, 0.0)
        else:
            ndt = n_penalty * dt
            pushed = (yhat + ndt * Si) / (1.0 + ndt)
            Yi = np.where(yhat < Si, pushed, yhat)
            dK[:, i] = ndt * np.maximum(Si - Yi, 0.0)
        if not (np.all(np.isfinite(Yi)) and np.all(np.isfinite(Zi))):
            raise NanPropagationError(i)
        Y[:, i] = Yi

    K = np.concatenate([np.zeros((P, 1)), np.cumsum(dK, axis=1)], axis=1)
    return Y, Z, K, S


def _resolve_state(state, bundle):
    if state is None:
        return np.zeros_like(bundle.B)
    state = np.asarray(state, dtype=float)
    if state.shape != bundle.B.shape:
        raise ValidationError(f"state shape {state.shape} does not match paths {bundle.B.shape}")
    return state


def solve_penalized(problem: BsdeProblem, bundle: PathBundle, grid: TimeGrid,
                    n_penalty: float, basis: RegressionBasis, *,
                    state: Optional[np.ndarray] = None) -> DiscreteSolution:
    """One backward pass with the implicit penalty step at level n_penalty.

    The penalty adds n (y - S)^- to the driver; solving the scalar resolvent
    (y = yhat + n dt (S - y)^+ ) in closed form keeps the step stable for any
    n * dt.  K accumulates n dt (Y - S)^- forward from zero.  g's (y, z)
    arguments are taken from the current recursion at the right endpoint.
    """
    if n_penalty < 0:
        raise ValidationError("n_penalty must be >= 0")
    if bundle.grid != grid:
        raise ValidationError("bundle was simulated on a different grid")
    state = _resolve_state(state, bundle)
    Y, Z, K, S = _backward_pass(problem.coefficients, problem.obstacle, bundle, grid,
                                basis, state, scheme="penalized", n_penalty=n_penalty)
    return DiscreteSolution(grid=grid, Y=Y, Z=Z, K=K, state=state, obstacle_values=S,
                            meta={"scheme": "penalized", "n_penalty": float(n_penalty),
                                  "iterations": 1, "contraction_ratios": []})


def solve_reflected_direct(problem: BsdeProblem, bundle: PathBundle, grid: TimeGrid,
                           basis: RegressionBasis, *,
                           state: Optional[np.ndarray] = None) -> DiscreteSolution:
    """Backward pass taking Y_i = max(yhat, S_i); pushes vanish off contact."""
    if bundle.grid != grid:
        raise ValidationError("bundle was simulated on a different grid")
    state = _resolve_state(state, bundle)
    Y, Z, K, S = _backward_pass(problem.coefficients, problem.obstacle, bundle, grid,
                                basis, state, scheme="direct", n_penalty=0.0)
    return DiscreteSolution(grid=grid, Y=Y, Z=Z, K=K, state=state, obstacle_values=S,
                            meta={"scheme": "direct", "iterations": 1,
                                  "contraction_ratios": []})


def validate_problem(problem: BsdeProblem, grid: TimeGrid, m: int,
                     state_samples=None, n_probes: int = 48, rtol: float = 1e-7):
    """Spot-check the declared structural constants on random probes.

    Raises ValidationError naming the violated constant.  Deterministic:
    probes come from a fixed seed.
    """
    coeffs = problem.coefficients
    c = coeffs.lipschitz_c
    alpha = coeffs.g_z_alpha
    beta = coeffs.phi_monotone_beta
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"g_z_alpha must lie in (0, 1), got {alpha}")
    if c < 0:
        raise ValidationError("lipschitz_c must be >= 0")
    if beta > 0:
        raise ValidationError("phi_monotone_beta must be <= 0")

    rng = np.random.default_rng(_PROBE_SEED)
    if state_samples is None:
        state_samples = np.array([0.0])
    xs_pool = np.asarray(state_samples, dtype=float).ravel()
    atol = 1e-12
    one = np.ones(1)
    for _ in range(n_probes):
        t = float(rng.uniform(grid.t0, grid.T))
        x = one * float(rng.choice(xs_pool))
        y1, y2 = rng.normal(0.0, 2.0, 2)
        z1 = rng.normal(0.0, 2.0, (1, m))
        z2 = rng.normal(0.0, 2.0, (1, m))
        dy2 = (y1 - y2) ** 2
        dz2 = float(np.sum((z1 - z2) ** 2))

        df = float(_eval_rows(coeffs.f, t, x, one * y1, z1)[0]
                   - _eval_rows(coeffs.f, t, x, one * y2, z2)[0])
        if df**2 > c * (dy2 + dz2) * (1 + rtol) + atol:
            raise ValidationError(
                f"lipschitz_c={c} violated by f at t={t:.4g}: |df|^2={df**2:.4g} "
                f"> c*(|dy|^2+|dz|^2)={c * (dy2 + dz2):.4g}")

        dphi = float(_eval_rows(coeffs.phi, t, x, one * y1)[0]
                     - _eval_rows(coeffs.phi, t, x, one * y2)[0])
        if (y1 - y2) * dphi > beta * dy2 + rtol * dy2 + atol:
            raise ValidationError(
                f"phi_monotone_beta={beta} violated: <dy, dphi>={np.float64((y1 - y2) * dphi):.4g} "
                f"> beta*|dy|^2={beta * dy2:.4g}")
        if abs(dphi) > c * abs(y1 - y2) * (1 + rtol) + atol:
            raise ValidationError(f"lipschitz_c={c} violated by phi")

        dg = float(_eval_rows(coeffs.g, t, x, one * y1, z1)[0]
                   - _eval_rows(coeffs.g, t, x, one * y2, z2)[0])
        if dg**2 > c * dy2 + alpha * dz2 + rtol * (dy2 + dz2) + atol:
            raise ValidationError(
                f"(lipschitz_c={c}, g_z_alpha={alpha}) violated by g: |dg|^2={dg**2:.4g} "
                f"> c|dy|^2 + alpha|dz|^2={c * dy2 + alpha * dz2:.4g}")

    # terminal dominates the barrier at T
    xs = xs_pool[:min(len(xs_pool), 128)]
    s_T = _eval_rows(problem.obstacle.barrier, grid.T, xs)
    xi = np.broadcast_to(np.asarray(problem.obstacle.terminal(xs), dtype=float), xs.shape)
    worst = float(np.max(s_T - xi))
    if worst > 1e-12:
        raise ValidationError(f"barrier exceeds terminal value at T by {worst:.4g}")


def _g_depends_on_yz(g, grid, state, m) -> bool:
    ts = (grid.t0, 0.5 * (grid.t0 + grid.T), grid.T)
    flat = np.asarray(state, dtype=float).ravel()
    xs = np.unique(np.concatenate([flat[:5], [flat.min(), flat.max(), 0.0]]))
    y0 = np.zeros(len(xs))
    z0 = np.zeros((len(xs), m))

    def val(t, y, z):
        return np.broadcast_to(np.asarray(g(t, xs, y, z), dtype=float), xs.shape)

    for t in ts:
        base = val(t, y0, z0)
        for dy in (1.0, -2.5):
            if not np.array_equal(val(t, y0 + dy, z0), base):
                return True
        for j in range(m):
            z = z0.copy()
            z[:, j] = 1.5
            if not np.array_equal(val(t, y0, z), base):
                return True
    return False


def contraction_weights(coeffs: CoefficientSpec, alpha_prime: Optional[float] = None):
    """(mu, cbar, alpha') defining the weighted norm of the outer iteration.

    With c the Lipschitz constant and alpha the z-sensitivity of g, the
    iteration contracts in the norm weighted by e^{-mu t} once
    mu = gamma + alpha' c / alpha with gamma = c/(1-alpha') - 1 + alpha and
    cbar = alpha' c / alpha.  alpha' defaults to the midpoint (1+alpha)/2.
    """
    alpha = coeffs.g_z_alpha
    c = coeffs.lipschitz_c
    ap = 0.5 * (1.0 + alpha) if alpha_prime is None else float(alpha_prime)
    if not alpha < ap < 1.0:
        raise ValidationError(f"alpha_prime must lie in ({alpha}, 1), got {ap}")
    gamma = c / (1.0 - ap) - 1.0 + alpha
    mu = gamma + ap * c / alpha
    cbar = ap * c / alpha
    return mu, cbar, ap


def _weighted_delta(Y_new, Z_new, Y_old, Z_old, grid, mu, cbar, alpha_prime):
    w = np.exp(-mu * (grid.nodes[:-1] - grid.t0)) * grid.dt
    dY2 = (Y_new[:, :-1] - Y_old[:, :-1]) ** 2
    dZ2 = np.sum((Z_new - Z_old) ** 2, axis=2)
    return float(np.mean((cbar * dY2 + alpha_prime * dZ2) @ w))


def fixed_point_solve(problem: BsdeProblem, bundle: PathBundle, grid: TimeGrid,
                      basis: RegressionBasis, *, scheme: str = "direct",
                      n_penalty: float = 100.0, tol: float = 1e-8,
                      max_iter: int = 25, state: Optional[np.ndarray] = None,
                      alpha_prime: Optional[float] = None,
                      validate: bool = True) -> DiscreteSolution:
    """Outer fixed-point loop freezing g's (y, z) arguments at the last iterate.

    Starting from the zero iterate, each sweep re-solves the inner equation
    and measures the move in the weighted norm; iteration stops when the
    squared-norm delta drops below ``tol``.  When probing shows g ignores
    (y, z) the map is constant and a single sweep is reported as convergence
    in one iteration.  Raises FixedPointDivergenceError (carrying the delta
    history) after ``max_iter`` sweeps without convergence.
    """
    if tol <= 0:
        raise ValidationError("tol must be > 0")
    if scheme not in ("direct", "penalized"):
        raise ValidationError(f"unknown scheme {scheme!r}")
    if bundle.grid != grid:
        raise ValidationError("bundle was simulated on a different grid")
    state = _resolve_state(state, bundle)
    coeffs = problem.coefficients
    if validate:
        validate_problem(problem, grid, bundle.m,
                         state_samples=state[:, [0, state.shape[1] - 1]])
    mu, cbar, ap = contraction_weights(coeffs, alpha_prime)

    solve_kwargs = dict(scheme=scheme, n_penalty=n_penalty)
    if not _g_depends_on_yz(coeffs.g, grid, state, bundle.m):
        Y, Z, K, S = _backward_pass(coeffs, problem.obstacle, bundle, grid, basis,
                                    state, g_frozen=None, **solve_kwargs)
        return DiscreteSolution(grid=grid, Y=Y, Z=Z, K=K, state=state,
                                obstacle_values=S,
                                meta={"scheme": scheme, "n_penalty": n_penalty,
                                      "iterations": 1, "converged": True,
                                      "contraction_ratios": [], "deltas": [],
                                      "mu": mu, "cbar": cbar, "alpha_prime": ap})

    P, n_nodes = state.shape
    Y_bar = np.zeros((P, n_nodes))
    Z_bar = np.zeros((P, grid.n_steps, bundle.m))
    deltas: List[float] = []
    for it in range(1, max_iter + 1):
        Y, Z, K, S = _backward_pass(coeffs, problem.obstacle, bundle, grid, basis,
                                    state, g_frozen=(Y_bar, Z_bar), **solve_kwargs)
        delta = _weighted_delta(Y, Z, Y_bar, Z_bar, grid, mu, cbar, ap)
        deltas.append(delta)
        Y_bar, Z_bar = Y, Z
        if delta < tol:
            ratios = [deltas[k] / deltas[k - 1] for k in range(1, len(deltas))
                      if deltas[k - 1] > 0]
            return DiscreteSolution(grid=grid, Y=Y, Z=Z, K=K, state=state,
                                    obstacle_values=S,
                                    meta={"scheme": scheme, "n_penalty": n_penalty,
                                          "iterations": it, "converged": True,
                                          "contraction_ratios": ratios,
                                          "deltas": deltas, "mu": mu, "cbar": cbar,
                                          "alpha_prime": ap})
    raise FixedPointDivergenceError(deltas, max_iter)


@dataclass(frozen=True)
class SweepRow:
    n_penalty: float
    y0: float
    k_terminal: float
    skorokhod_residual: float
    a_priori: float


@dataclass(eq=False)
class SweepResult:
    """Penalization diagnostics over an increasing list of penalty levels."""

    rows: List[SweepRow]
    y0_direct: float
    gaps: List[float]
    gap_ratios: List[float]
    max_monotonicity_violation: float
    monotone: bool
    cauchy_deltas: List[float]

    def as_table(self):
        return [(r.n_penalty, r.y0, r.k_terminal, r.skorokhod_residual) for r in self.rows]


def penalization_sweep(problem: BsdeProblem, bundle: PathBundle, grid: TimeGrid,
                       basis: RegressionBasis, n_list: Sequence[float], *,
                       state: Optional[np.ndarray] = None,
                       monotonicity_tol: float = 1e-9) -> SweepResult:
    """Solve once per penalty level on common random numbers.

    Reports the nondecreasing trend of Y at the initial node, the gap to the
    direct scheme, successive gap ratios, per-level Skorokhod residuals, and
    a sup-norm Cauchy diagnostic between consecutive solutions.
    """
    n_list = [float(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValidationError("n_list must be strictly increasing")
    state = _resolve_state(state, bundle)
    direct = solve_reflected_direct(problem, bundle, grid, basis, state=state)

    rows: List[SweepRow] = []
    prev_Y = None
    worst_violation = 0.0
    cauchy = []
    gaps = []
    for n in n_list:
        sol = solve_penalized(problem, bundle, grid, n, basis, state=state)
        rows.append(SweepRow(
            n_penalty=n,
            y0=sol.y0,
            k_terminal=float(np.mean(sol.K[:, -1])),
            skorokhod_residual=float(np.mean(sol.skorokhod_residuals())),
            a_priori=sol.a_priori_functional(),
        ))
        gaps.append(abs(direct.y0 - sol.y0))
        if prev_Y is not None:
            worst_violation = max(worst_violation, float(np.max(prev_Y - sol.Y)))
            cauchy.append(float(np.max(np.abs(sol.Y - prev_Y))))
        prev_Y = sol.Y
    ratios = [b / a for a, b in zip(gaps, gaps[1:]) if a > 0]
    return SweepResult(rows=rows, y0_direct=direct.y0, gaps=gaps, gap_ratios=ratios,
                       max_monotonicity_violation=worst_violation,
                       monotone=worst_violation <= monotonicity_tol,
                       cauchy_deltas=cauchy)
