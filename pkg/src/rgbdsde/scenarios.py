"""Built-in experiment scenarios.

Each scenario freezes a measure model, a coefficient set, an obstacle, and a
state mechanism (frozen point or reflected dynamics), so runs are fully
determined by (scenario, grid, n_paths, seed).  The degenerate ones are
chosen so their exact solutions are known in closed form, which is what the
verification suite leans on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .errors import ValidationError
from .markov import MarkovianProblem, default_poisson_problem
from .measures import LevyMeasureModel, build_measure, orthonormal_basis
from .paths import PathBundle, TimeGrid, attach_increasing_process, simulate_bundle
from .reflect import ReflectedCoefficients, simulate_reflected
from .regression import RegressionBasis
from .solver import BsdeProblem, CoefficientSpec, ObstacleSpec


def _const(value):
    return lambda t, x: np.full(np.shape(x), value)


def _zero3(t, x, y):
    return np.zeros(np.shape(x))


def _zero4(t, x, y, z):
    return np.zeros(np.shape(x))


@dataclass(eq=False)
class RunSetup:
    """Everything needed to simulate and solve one configured scenario."""

    name: str
    model: LevyMeasureModel
    m: int
    grid: TimeGrid
    problem: BsdeProblem
    x0: float
    reflected: Optional[ReflectedCoefficients] = None
    increasing: Optional[Callable] = None
    markov: Optional[MarkovianProblem] = None
    reg_degree: int = 2

    def regression_basis(self, degree: Optional[int] = None,
                         ridge: float = 1e-8) -> RegressionBasis:
        deg = self.reg_degree if degree is None else degree
        if self.reflected is not None:
            return RegressionBasis(degree=deg, include_boundary=True,
                                   theta=self.reflected.theta, ridge_lambda=ridge)
        return RegressionBasis(degree=deg, ridge_lambda=ridge)

    def prepare(self, n_paths: int, seed: int) -> Tuple[PathBundle, np.ndarray]:
        """Simulate the driver bundle, attach A, and build the state paths."""
        basis = orthonormal_basis(self.model, self.m)
        bundle = simulate_bundle(self.model, basis, self.grid, n_paths, seed)
        if self.reflected is not None:
            refl = simulate_reflected(self.reflected, bundle, self.grid, self.x0)
            bundle = attach_increasing_process(bundle, refl)
            return bundle, refl.X
        if self.increasing is not None:
            bundle = attach_increasing_process(bundle, self.increasing)
        state = np.full_like(bundle.B, self.x0)
        return bundle, state


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    default_grid: Tuple[float, float, int]
    defaults: Dict[str, float]
    supports_surface: bool
    builder: Callable


def _build_constant_terminal(grid: TimeGrid, params: Dict[str, float]) -> RunSetup:
    model = build_measure([], sigma0=1.0, drift=0.0)
    coeffs = CoefficientSpec(f=_zero4, phi=_zero3, g=_zero4,
                             lipschitz_c=0.0, phi_monotone_beta=0.0, g_z_alpha=0.5)
    obstacle = ObstacleSpec(barrier=_const(-1.0e6), terminal=lambda x: np.ones(np.shape(x)))
    T = grid.T

    def h_fn(t, x):
        # inactive barrier except at T, where it must meet the terminal value
        if t >= T - 1e-12 * max(1.0, abs(T)):
            return np.ones(np.shape(x))
        return np.full(np.shape(x), -1.0e6)

    markov = MarkovianProblem(
        terminal_l=lambda x: np.ones(np.shape(x)),
        f=_zero4, phi=_zero3, g=_zero4, obstacle_h=h_fn,
        theta=1.0, sigma_fn=lambda x: np.zeros(np.shape(x)),
        model=model, m=1, lipschitz_c=0.0, phi_monotone_beta=0.0,
        g_z_alpha=0.5, sigma_lipschitz_K=0.0, horizon_T=T)
    return RunSetup(name="constant-terminal", model=model, m=1, grid=grid,
                    problem=BsdeProblem(coeffs, obstacle), x0=params["x0"],
                    markov=markov)


def _build_linear_ode(grid: TimeGrid, params: Dict[str, float]) -> RunSetup:
    r = params["r"]
    model = build_measure([], sigma0=1.0, drift=0.0)
    coeffs = CoefficientSpec(
        f=lambda t, x, y, z: -r * y,
        phi=_zero3, g=_zero4,
        lipschitz_c=r * r, phi_monotone_beta=0.0, g_z_alpha=0.5)
    obstacle = ObstacleSpec(barrier=_const(-1.0e6), terminal=lambda x: np.ones(np.shape(x)))
    return RunSetup(name="linear-ode", model=model, m=1, grid=grid,
                    problem=BsdeProblem(coeffs, obstacle), x0=params["x0"])


def _build_deterministic_obstacle(grid: TimeGrid, params: Dict[str, float]) -> RunSetup:
    model = build_measure([], sigma0=1.0, drift=0.0)
    T = grid.T
    coeffs = CoefficientSpec(f=_zero4, phi=_zero3, g=_zero4,
                             lipschitz_c=0.0, phi_monotone_beta=0.0, g_z_alpha=0.5)
    obstacle = ObstacleSpec(
        barrier=lambda t, x: np.full(np.shape(x), 1.0 - t / T),
        terminal=lambda x: np.zeros(np.shape(x)))
    markov = MarkovianProblem(
        terminal_l=lambda x: np.zeros(np.shape(x)),
        f=_zero4, phi=_zero3, g=_zero4,
        obstacle_h=lambda t, x: np.full(np.shape(x), 1.0 - t / T),
        theta=1.0, sigma_fn=lambda x: np.zeros(np.shape(x)),
        model=model, m=1, lipschitz_c=0.0, phi_monotone_beta=0.0,
        g_z_alpha=0.5, sigma_lipschitz_K=0.0, horizon_T=T)
    return RunSetup(name="deterministic-obstacle", model=model, m=1, grid=grid,
                    problem=BsdeProblem(coeffs, obstacle), x0=params["x0"],
                    markov=markov)


def _build_poisson_example(grid: TimeGrid, params: Dict[str, float]) -> RunSetup:
    markov = default_poisson_problem(params["alpha"], params["beta"], params["a"],
                                     theta=1.0, T=grid.T, m=int(params["m"]))
    return RunSetup(name="poisson-example", model=markov.model, m=markov.m, grid=grid,
                    problem=markov.bsde_problem(), x0=params["x0"],
                    reflected=markov.reflected_coefficients(), markov=markov)


def _build_two_atom_demo(grid: TimeGrid, params: Dict[str, float]) -> RunSetup:
    model = build_measure([(1.0, 1.0), (-1.0, 1.0)], sigma0=0.0, drift=0.0)
    T = grid.T
    markov = MarkovianProblem(
        terminal_l=lambda x: 0.2 * x**2,
        f=lambda t, x, y, z: -y + 0.25 * z[:, 0],
        phi=lambda t, x, y: -0.5 * y,
        g=lambda t, x, y, z: 0.25 * y + 0.1 * z[:, 0],
        obstacle_h=lambda t, x: 0.2 * x**2 - 0.1 * (T - t) * np.ones(np.shape(x)),
        theta=1.0, sigma_fn=lambda x: 0.5 * (1.0 - x**2),
        model=model, m=2, lipschitz_c=2.0, phi_monotone_beta=-0.5,
        g_z_alpha=0.1, sigma_lipschitz_K=1.0, horizon_T=T)
    return RunSetup(name="two-atom-demo", model=model, m=2, grid=grid,
                    problem=markov.bsde_problem(), x0=params["x0"],
                    reflected=markov.reflected_coefficients(), markov=markov)


SCENARIOS: Dict[str, Scenario] = {
    "constant-terminal": Scenario(
        name="constant-terminal",
        description="no driver, unit terminal value; exact fixed point of the regression",
        default_grid=(0.0, 1.0, 50),
        defaults={"x0": 0.0},
        supports_surface=True,
        builder=_build_constant_terminal),
    "linear-ode": Scenario(
        name="linear-ode",
        description="f = -r y with unit terminal; solution e^{-r (T-t)} checks the time stepping",
        default_grid=(0.0, 1.0, 1000),
        defaults={"r": 1.0, "x0": 0.0},
        supports_surface=False,
        builder=_build_linear_ode),
    "deterministic-obstacle": Scenario(
        name="deterministic-obstacle",
        description="zero driver under the moving barrier 1 - t/T; closed-form penalized limit",
        default_grid=(0.0, 2.0, 2000),
        defaults={"x0": 0.0},
        supports_surface=True,
        builder=_build_deterministic_obstacle),
    "poisson-example": Scenario(
        name="poisson-example",
        description="single-atom compensated Poisson driver with reflected state dynamics",
        default_grid=(0.0, 1.0, 200),
        defaults={"alpha": 1.0, "beta": 1.0, "a": 0.0, "x0": 0.25, "m": 3},
        supports_surface=True,
        builder=_build_poisson_example),
    "two-atom-demo": Scenario(
        name="two-atom-demo",
        description="symmetric two-atom jumps, two live martingales, reflected state",
        default_grid=(0.0, 1.0, 100),
        defaults={"x0": 0.2},
        supports_surface=True,
        builder=_build_two_atom_demo),
}


def get_scenario(name: str) -> Scenario:
    if name not in SCENARIOS:
        raise ValidationError(
            f"unknown scenario {name!r}; available: {', '.join(sorted(SCENARIOS))}")
    return SCENARIOS[name]


def build_scenario(name: str, grid: Optional[TimeGrid] = None,
                   **params) -> RunSetup:
    """Instantiate a scenario, applying parameter overrides by keyword."""
    scenario = get_scenario(name)
    merged = dict(scenario.defaults)
    for key, value in params.items():
        if value is None:
            continue
        if key not in merged:
            raise ValidationError(f"scenario {name!r} has no parameter {key!r}")
        merged[key] = value
    if grid is None:
        t0, T, n = scenario.default_grid
        grid = TimeGrid(t0, T, n)
    return scenario.builder(grid, merged)


def list_scenarios() -> List[Tuple[str, str]]:
    """Catalogue of built-in problems as (name, one-line description)."""
    return [(s.name, s.description) for s in SCENARIOS.values()]
