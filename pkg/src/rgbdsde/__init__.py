"""Teugels-martingale bases, jump-path simulation, and regression Monte Carlo
solvers for reflected generalized backward doubly stochastic equations."""

__version__ = "0.1.0"

from .errors import (FixedPointDivergenceError, NanPropagationError, RgbdsdeError,
                     SingularRegressionError, SolverError, ValidationError)
from .measures import (LevyMeasureModel, PolynomialBasis, build_measure, eval_p,
                       eval_q, inner_product, orthonormal_basis)
from .paths import (PathBundle, TimeGrid, attach_increasing_process,
                    backward_increments, simulate_bundle)
from .reflect import (InvarianceReport, ReflectedCoefficients, ReflectedPath,
                      simulate_reflected, validate_invariance)
from .regression import RegressionBasis
from .solver import (BsdeProblem, CoefficientSpec, DiscreteSolution, ObstacleSpec,
                     SweepResult, contraction_weights, fixed_point_solve,
                     no_obstacle, penalization_sweep, solve_penalized,
                     solve_reflected_direct, validate_problem)
from .checks import (ComparisonReport, CompensationReport, KernelPath,
                     PropertyReport, check_comparison, check_compensation,
                     doleans_dade, property_suite)
from .markov import (ExamplePoissonReport, JumpOperatorValues, MarkovianProblem,
                     MonteCarloConfig, SurfaceEstimate, ZConsistencyReport,
                     apply_jump_operators, default_poisson_problem,
                     estimate_surface, example_poisson, z_consistency_check)
from .scenarios import SCENARIOS, RunSetup, build_scenario, get_scenario, list_scenarios

__all__ = [name for name in dir() if not name.startswith("_")]
