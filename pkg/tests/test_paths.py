import dataclasses

import numpy as np
import pytest

from rgbdsde import (TimeGrid, ValidationError, attach_increasing_process,
                     backward_increments, build_measure, orthonormal_basis,
                     simulate_bundle)


def poisson_setup(alpha=1.0, beta=1.0, drift_style_a=0.0, m=3, n_steps=100, T=1.0):
    # compensated parameterization: raw drift = a - alpha*beta
    model = build_measure([(beta, alpha)], sigma0=0.0, drift=drift_style_a - alpha * beta)
    basis = orthonormal_basis(model, m)
    return model, basis, TimeGrid(0.0, T, n_steps)


def test_no_jump_zero_drift_gives_null_processes():
    model = build_measure([], sigma0=1.0, drift=0.0)
    basis = orthonormal_basis(model, 2)
    grid = TimeGrid(0.0, 1.0, 20)
    bundle = simulate_bundle(model, basis, grid, 5, seed=0)
    assert np.all(bundle.L == 0.0)
    assert np.all(bundle.H == 0.0)
    assert bundle.jump_time.size == 0


def test_forced_jump_power_processes():
    model = build_measure([(2.0, 1.0)], sigma0=0.0, drift=0.0)
    basis = orthonormal_basis(model, 3)
    grid = TimeGrid(0.0, 1.0, 100)
    bundle = simulate_bundle(model, basis, grid, 2, seed=0,
                             forced_jumps=[(0.5, 2.0)])
    node = int(0.5 / grid.dt) + 1
    jump2 = bundle.power_jumps[0, node, 1] - bundle.power_jumps[0, node - 1, 1]
    jump3 = bundle.power_jumps[0, node, 2] - bundle.power_jumps[0, node - 1, 2]
    assert jump2 == 4.0
    assert jump3 == 8.0


def test_brownian_telescoping():
    model, basis, grid = poisson_setup()
    bundle = simulate_bundle(model, basis, grid, 7, seed=1)
    dB = backward_increments(bundle, grid)
    np.testing.assert_allclose(dB.sum(axis=1), bundle.B[:, -1], atol=1e-12)


def test_constant_path_gives_zero_increments():
    model, basis, grid = poisson_setup()
    bundle = simulate_bundle(model, basis, grid, 3, seed=1)
    frozen = dataclasses.replace(bundle, B=np.ones_like(bundle.B))
    assert np.all(backward_increments(frozen, grid) == 0.0)


def test_backward_increments_rejects_foreign_grid():
    model, basis, grid = poisson_setup()
    bundle = simulate_bundle(model, basis, grid, 3, seed=1)
    with pytest.raises(ValidationError):
        backward_increments(bundle, TimeGrid(0.0, 2.0, 100))


def test_brownian_increment_variance():
    model, basis, grid = poisson_setup(n_steps=10)
    bundle = simulate_bundle(model, basis, grid, 20_000, seed=2)
    dB = np.diff(bundle.B, axis=1)[:, 0]
    v = dB.var(ddof=1)
    m4 = ((dB - dB.mean()) ** 4).mean()
    se = np.sqrt((m4 - v**2) / len(dB))
    assert abs(v - grid.dt) <= 5 * se


def test_martingale_property_of_h():
    model, basis, grid = poisson_setup(m=2)
    bundle = simulate_bundle(model, basis, grid, 20_000, seed=3)
    hT = bundle.H[:, -1, 0]
    se = hT.std(ddof=1) / np.sqrt(len(hT))
    assert abs(hT.mean()) <= 5 * se


def test_step_bracket_orthonormality():
    # two live martingales: E[dH_i dH_j] = delta_ij dt
    model = build_measure([(1.0, 1.0), (-1.0, 1.0)], sigma0=0.0, drift=0.0)
    basis = orthonormal_basis(model, 2)
    grid = TimeGrid(0.0, 1.0, 50)
    bundle = simulate_bundle(model, basis, grid, 20_000, seed=4)
    dH = np.diff(bundle.H, axis=1)[:, 0, :]  # first step
    for i in range(2):
        for j in range(2):
            prod = dH[:, i] * dH[:, j]
            se = prod.std(ddof=1) / np.sqrt(len(prod))
            target = grid.dt if i == j else 0.0
            assert abs(prod.mean() - target) <= 5 * se, (i, j)


def test_levy_decomposition_identity():
    # L_t = Y1_t + t E L_1 exactly, and Y1 = sqrt(int y^2 nu) H1 for one atom
    model, basis, grid = poisson_setup(alpha=2.0, beta=0.5, drift_style_a=0.3)
    bundle = simulate_bundle(model, basis, grid, 50, seed=5)
    tau = grid.nodes - grid.t0
    y1 = bundle.L - tau * model.mean_increment_rate
    np.testing.assert_allclose(bundle.L, y1 + tau * model.mean_increment_rate,
                               rtol=0, atol=1e-14)
    scale = np.sqrt(model.nu_moment(2))
    np.testing.assert_allclose(y1, scale * bundle.H[:, :, 0], atol=1e-12)


def test_poisson_h1_normalization():
    alpha = 1.7
    model, basis, grid = poisson_setup(alpha=alpha, beta=1.0)
    bundle = simulate_bundle(model, basis, grid, 200, seed=6)
    counts = np.zeros((200, grid.n_steps + 1))
    for p, s in zip(bundle.jump_row, bundle.jump_step):
        counts[p, s + 1] += 1.0
    n_t = np.cumsum(counts, axis=1)
    expected = (n_t - alpha * grid.nodes) / np.sqrt(alpha)
    np.testing.assert_allclose(bundle.H[:, :, 0], expected, atol=1e-12)
    assert np.all(bundle.H[:, :, 1:] == 0.0)


def test_reproducibility_and_block_stability():
    model, basis, grid = poisson_setup()
    a = simulate_bundle(model, basis, grid, 10, seed=9)
    b = simulate_bundle(model, basis, grid, 10, seed=9)
    assert np.array_equal(a.B, b.B) and np.array_equal(a.H, b.H)
    head = simulate_bundle(model, basis, grid, 4, seed=9)
    assert np.array_equal(a.B[:4], head.B)
    tail = simulate_bundle(model, basis, grid, 6, seed=9, path_offset=4)
    assert np.array_equal(a.B[4:], tail.B)
    other = simulate_bundle(model, basis, grid, 10, seed=10)
    assert not np.array_equal(a.B, other.B)


def test_basis_model_mismatch_rejected():
    model, basis, grid = poisson_setup()
    other = build_measure([(2.0, 1.0)], sigma0=0.0)
    with pytest.raises(ValidationError):
        simulate_bundle(other, basis, grid, 2, seed=0)


def test_attach_deterministic_increasing_process():
    model, basis, grid = poisson_setup()
    bundle = simulate_bundle(model, basis, grid, 4, seed=0)
    out = attach_increasing_process(bundle, lambda t: t - grid.t0)
    np.testing.assert_allclose(np.diff(out.A, axis=1), grid.dt, atol=1e-12)
    zero = attach_increasing_process(bundle, lambda t: np.zeros_like(t))
    assert np.all(zero.A == 0.0)


def test_attach_rejects_decreasing_spec():
    model, basis, grid = poisson_setup()
    bundle = simulate_bundle(model, basis, grid, 4, seed=0)
    with pytest.raises(ValidationError):
        attach_increasing_process(bundle, lambda t: -(t - grid.t0))


def test_attach_rejects_nonzero_start():
    model = build_measure([], sigma0=1.0)
    grid = TimeGrid(0.5, 1.0, 10)
    bundle = simulate_bundle(model, orthonormal_basis(model, 1), grid, 2, seed=0)
    with pytest.raises(ValidationError):
        attach_increasing_process(bundle, lambda t: t)  # A(0.5) = 0.5 != 0


def test_grid_validation():
    with pytest.raises(ValidationError):
        TimeGrid(1.0, 1.0, 10)
    with pytest.raises(ValidationError):
        TimeGrid(0.0, 1.0, 0)
