import numpy as np
import pytest

from rgbdsde import (MarkovianProblem, MonteCarloConfig, RegressionBasis,
                     SurfaceEstimate, TimeGrid, ValidationError,
                     apply_jump_operators, attach_increasing_process,
                     build_measure, build_scenario, estimate_surface,
                     example_poisson, fixed_point_solve, orthonormal_basis,
                     simulate_bundle, simulate_reflected, z_consistency_check)


def frozen_markov(T=1.0, terminal=None, barrier=None):
    model = build_measure([], sigma0=1.0, drift=0.0)
    terminal = terminal or (lambda x: np.ones(np.shape(x)))

    def h(t, x):
        if barrier is not None:
            return barrier(t, x)
        if t >= T - 1e-12:
            return np.asarray(terminal(x), dtype=float)
        return np.full(np.shape(x), -1.0e6)

    return MarkovianProblem(
        terminal_l=terminal,
        f=lambda t, x, y, z: np.zeros(np.shape(x)),
        phi=lambda t, x, y: np.zeros(np.shape(x)),
        g=lambda t, x, y, z: np.zeros(np.shape(x)),
        obstacle_h=h, theta=1.0,
        sigma_fn=lambda x: np.zeros(np.shape(x)),
        model=model, m=1, lipschitz_c=0.0, phi_monotone_beta=0.0,
        g_z_alpha=0.5, sigma_lipschitz_K=0.0, horizon_T=T)


# -- surface -------------------------------------------------------------------

def test_surface_constant_everywhere():
    problem = frozen_markov()
    mc = MonteCarloConfig(n_paths=8, seed=0, dt=0.05)
    surf = estimate_surface(problem, np.linspace(0, 1, 4), np.linspace(-1, 1, 5), mc)
    assert np.abs(surf.u - 1.0).max() == 0.0


def test_surface_terminal_row_is_analytic():
    problem = frozen_markov(terminal=lambda x: 0.5 * np.asarray(x) ** 2)
    mc = MonteCarloConfig(n_paths=4, seed=0, dt=0.05)
    xg = np.linspace(-1, 1, 5)
    surf = estimate_surface(problem, [0.5, 1.0], xg, mc)
    np.testing.assert_array_equal(surf.u[-1], 0.5 * xg**2)
    assert np.all(surf.stderr[-1] == 0.0)


def test_surface_obstacle_binding_reproduces_barrier():
    T = 1.0
    problem = frozen_markov(
        T=T, terminal=lambda x: np.zeros(np.shape(x)),
        barrier=lambda t, x: np.full(np.shape(x), 1.0 - t / T))
    mc = MonteCarloConfig(n_paths=4, seed=0, dt=0.01)
    tg = np.linspace(0, 1, 5)
    surf = estimate_surface(problem, tg, np.linspace(-1, 1, 5), mc)
    expected = np.broadcast_to((1.0 - tg / T)[:, None], surf.u.shape)
    np.testing.assert_allclose(surf.u, expected, rtol=0, atol=1e-12)
    # obstacle gap vanishes where the barrier binds
    assert np.abs(surf.obstacle_gap[:-1]).max() <= 1e-12


def test_surface_rejects_states_outside_domain():
    problem = frozen_markov()
    with pytest.raises(ValidationError):
        estimate_surface(problem, [0.0, 1.0], [-2.0, 0.0],
                         MonteCarloConfig(n_paths=2, seed=0))


def test_surface_threads_match_serial():
    setup = build_scenario("two-atom-demo")
    mc1 = MonteCarloConfig(n_paths=16, seed=3, dt=0.05, threads=1)
    mc4 = MonteCarloConfig(n_paths=16, seed=3, dt=0.05, threads=4)
    tg, xg = np.linspace(0, 1, 3), np.linspace(-1, 1, 5)
    s1 = estimate_surface(setup.markov, tg, xg, mc1)
    s4 = estimate_surface(setup.markov, tg, xg, mc4)
    np.testing.assert_array_equal(s1.u, s4.u)


def test_terminal_mismatch_rejected():
    model = build_measure([], sigma0=1.0, drift=0.0)
    with pytest.raises(ValidationError):
        MarkovianProblem(
            terminal_l=lambda x: np.ones(np.shape(x)),
            f=lambda t, x, y, z: np.zeros(np.shape(x)),
            phi=lambda t, x, y: np.zeros(np.shape(x)),
            g=lambda t, x, y, z: np.zeros(np.shape(x)),
            obstacle_h=lambda t, x: np.zeros(np.shape(x)),  # h(T, x) != l(x)
            theta=1.0, sigma_fn=lambda x: np.zeros(np.shape(x)),
            model=model, m=1, horizon_T=1.0)


def test_effective_drift_report_value():
    # all atoms at |y| >= 1: a' equals drift plus the large-jump mean mass
    model = build_measure([(1.0, 2.0), (-1.5, 1.0)], sigma0=0.0, drift=0.3)
    setup_model_mean = 0.3 + (1.0 * 2.0 + (-1.5) * 1.0)
    problem = MarkovianProblem(
        terminal_l=lambda x: np.zeros(np.shape(x)),
        f=lambda t, x, y, z: np.zeros(np.shape(x)),
        phi=lambda t, x, y: np.zeros(np.shape(x)),
        g=lambda t, x, y, z: np.zeros(np.shape(x)),
        obstacle_h=lambda t, x: np.zeros(np.shape(x)),
        theta=1.0, sigma_fn=lambda x: np.zeros(np.shape(x)),
        model=model, m=2, horizon_T=1.0)
    assert problem.effective_drift == pytest.approx(setup_model_mean)


def test_raising_terminal_never_lowers_surface():
    lo = frozen_markov(terminal=lambda x: np.ones(np.shape(x)))
    hi = frozen_markov(terminal=lambda x: 2.0 * np.ones(np.shape(x)))
    mc = MonteCarloConfig(n_paths=8, seed=0, dt=0.05)
    tg, xg = np.linspace(0, 1, 3), np.linspace(-1, 1, 3)
    u_lo = estimate_surface(lo, tg, xg, mc).u
    u_hi = estimate_surface(hi, tg, xg, mc).u
    assert np.min(u_hi - u_lo) >= -1e-12


def test_neumann_residual_reported_on_boundary_columns():
    setup = build_scenario("two-atom-demo")
    mc = MonteCarloConfig(n_paths=16, seed=1, dt=0.05)
    surf = estimate_surface(setup.markov, np.linspace(0, 1, 3),
                            np.linspace(-1, 1, 5), mc)
    assert np.all(np.isfinite(surf.neumann_residual[:, 0]))
    assert np.all(np.isfinite(surf.neumann_residual[:, -1]))
    assert np.all(np.isnan(surf.neumann_residual[:, 1:-1]))


# -- jump operators --------------------------------------------------------------

def test_jump_remainder_vanishes_for_linear_u():
    xg = np.linspace(-1, 1, 41)
    model = build_measure([(0.5, 2.0)], sigma0=0.0)
    basis = orthonormal_basis(model, 1)
    vals = apply_jump_operators((xg, 3.0 * xg), model, 0.0, basis=basis)
    assert np.abs(vals.u1_per_atom).max() <= 1e-12


def test_jump_remainder_quadratic_identity():
    # u = x^2: u(x+y) - u(x) - 2xy = y^2 exactly when x + y is a grid node
    xg = np.linspace(-1, 1, 41)
    model = build_measure([(0.5, 2.0)], sigma0=0.0)
    basis = orthonormal_basis(model, 1)
    vals = apply_jump_operators((xg, xg**2), model, 0.25, basis=basis)
    assert vals.u1_per_atom[0] == pytest.approx(0.25, abs=1e-12)


def test_first_component_single_atom_formula():
    xg = np.linspace(-1, 1, 41)
    model = build_measure([(0.5, 2.0)], sigma0=0.0)
    basis = orthonormal_basis(model, 1)
    x = 0.5
    vals = apply_jump_operators((xg, xg**2), model, x, basis=basis,
                                sigma_fn=lambda x: np.ones(np.shape(x)))
    p1 = float(basis.p_values(1, np.array([0.5]))[0])
    expected = 0.25 * p1 * 2.0 + 1.0 * (2 * x) * np.sqrt(model.nu_moment(2))
    assert vals.components[0] == pytest.approx(expected, abs=1e-12)


def test_jump_operator_flags_projection():
    xg = np.linspace(-1, 1, 21)
    model = build_measure([(5.0, 1.0)], sigma0=0.0)
    basis = orthonormal_basis(model, 1)
    vals = apply_jump_operators((xg, xg**2), model, 0.0, basis=basis)
    assert vals.projected


def test_jump_operator_requires_grid_node():
    xg = np.linspace(-1, 1, 21)
    model = build_measure([(0.5, 1.0)], sigma0=0.0)
    basis = orthonormal_basis(model, 1)
    with pytest.raises(ValidationError):
        apply_jump_operators((xg, xg**2), model, 0.123456, basis=basis)


# -- loading consistency -----------------------------------------------------------

def analytic_quadratic_surface(model, theta, T, nx):
    mu1 = model.mean_increment_rate
    var_rate = model.nu_moment(2)
    tv = np.linspace(0, T, 21)
    xv = np.linspace(-theta, theta, nx)
    u = np.array([xv**2 + 2 * xv * mu1 * (T - t) + var_rate * (T - t)
                  + (mu1 * (T - t)) ** 2 for t in tv])
    return SurfaceEstimate(t_values=tv, x_values=xv, u=u, stderr=np.zeros_like(u),
                           obstacle_gap=np.zeros_like(u),
                           neumann_residual=np.full_like(u, np.nan))


def quadratic_toy(n_steps, n_paths):
    alpha, beta, theta, T = 2.0, 0.5, 6.0, 1.0
    model = build_measure([(beta, alpha)], sigma0=0.0, drift=0.0)
    problem = MarkovianProblem(
        terminal_l=lambda x: np.asarray(x) ** 2,
        f=lambda t, x, y, z: np.zeros(np.shape(x)),
        phi=lambda t, x, y: np.zeros(np.shape(x)),
        g=lambda t, x, y, z: np.zeros(np.shape(x)),
        obstacle_h=lambda t, x: (np.asarray(x) ** 2 if t >= T - 1e-12
                                 else np.full(np.shape(x), -1e6)),
        theta=theta, sigma_fn=lambda x: np.ones(np.shape(x)),
        model=model, m=1, lipschitz_c=0.5, phi_monotone_beta=0.0,
        g_z_alpha=0.5, sigma_lipschitz_K=0.0, horizon_T=T)
    grid = TimeGrid(0.0, T, n_steps)
    bundle = simulate_bundle(model, problem.basis(), grid, n_paths, seed=2)
    refl = simulate_reflected(problem.reflected_coefficients(), bundle, grid, 0.0)
    bundle = attach_increasing_process(bundle, refl)
    sol = fixed_point_solve(problem.bsde_problem(), bundle, grid,
                            RegressionBasis(degree=2), state=refl.X,
                            validate=False)
    return problem, sol


def test_z_consistency_no_jump_terms_are_zero_on_both_sides():
    problem = frozen_markov()
    grid = TimeGrid(0.0, 1.0, 20)
    bundle = simulate_bundle(problem.model, problem.basis(), grid, 16, seed=0)
    state = np.zeros_like(bundle.B)
    sol = fixed_point_solve(problem.bsde_problem(), bundle, grid,
                            RegressionBasis(degree=1), state=state, validate=False)
    surf = estimate_surface(problem, np.linspace(0, 1, 3), np.linspace(-1, 1, 5),
                            MonteCarloConfig(n_paths=8, seed=0, dt=0.05))
    rep = z_consistency_check(problem, surf, sol)
    assert rep.jump_terms_zero
    assert rep.rms_solver == 0.0
    assert rep.rms_formula == 0.0


def test_z_consistency_gap_shrinks_under_refinement():
    # against an analytic surface (exact formula side: quadratic u, atoms on
    # grid nodes) the gap is pure solver error and must shrink when dt and dx
    # are halved with proportionally more paths
    p_c, sol_c = quadratic_toy(8, 4000)
    rep_c = z_consistency_check(p_c, analytic_quadratic_surface(p_c.model, 6.0, 1.0, 121),
                                sol_c)
    p_f, sol_f = quadratic_toy(16, 16000)
    rep_f = z_consistency_check(p_f, analytic_quadratic_surface(p_f.model, 6.0, 1.0, 241),
                                sol_f)
    assert rep_f.rel_rms_gap < rep_c.rel_rms_gap


# -- single-atom example ------------------------------------------------------------

def test_example_poisson_checks():
    rep = example_poisson(1.0, 1.0, 0.0, n_paths=128, seed=7)
    assert rep.effective_dim == 1
    assert rep.h1_max_error <= 1e-10
    assert rep.higher_martingales_zero
    assert rep.generic_vs_specialized_max_gap <= 1e-10
    assert rep.h1_matches_unit_jump_normalization
    assert rep.degenerate_variant_ok


def test_example_poisson_general_atom_size():
    rep = example_poisson(2.0, 0.5, 0.1, n_paths=64, seed=8)
    assert rep.effective_dim == 1
    assert rep.h1_max_error <= 1e-10  # general normalization, sign(beta)/sqrt(alpha)
    assert not rep.h1_matches_unit_jump_normalization
    assert rep.generic_vs_specialized_max_gap <= 1e-10


def test_example_poisson_rejects_nonpositive_rate():
    with pytest.raises(ValidationError):
        example_poisson(0.0)
