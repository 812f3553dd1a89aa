import math
from fractions import Fraction

import numpy as np
import pytest

from rgbdsde import (ValidationError, build_measure, eval_p, eval_q, inner_product,
                     orthonormal_basis)


def exact_gram_schmidt(points, masses, m):
    """Oracle: Gram-Schmidt of monomials over an atomic measure in exact
    rational arithmetic, square roots taken only at the final normalization."""
    pts = [Fraction(p).limit_denominator(10**12) for p in points]
    ws = [Fraction(w).limit_denominator(10**12) for w in masses]

    def ip(a, b):
        total = Fraction(0)
        for p, w in zip(pts, ws):
            va = sum(c * p**k for k, c in enumerate(a))
            vb = sum(c * p**k for k, c in enumerate(b))
            total += w * va * vb
        return total

    kept = []
    rows = []
    for i in range(m):
        c = [Fraction(0)] * m
        c[i] = Fraction(1)
        for q, n2 in kept:
            r = ip(c, q)
            c = [ci - r * qi / n2 for ci, qi in zip(c, q)]
        n2 = ip(c, c)
        orig = ip([Fraction(0)] * i + [Fraction(1)] + [Fraction(0)] * (m - i - 1),
                  [Fraction(0)] * i + [Fraction(1)] + [Fraction(0)] * (m - i - 1))
        if orig == 0 or n2 == 0:
            rows.append([0.0] * m)
            continue
        kept.append((c, n2))
        scale = 1.0 / math.sqrt(float(n2))
        rows.append([float(ci) * scale for ci in c])
    return np.array(rows)


# -- measure construction -----------------------------------------------------

def test_point_mass_from_single_atom():
    model = build_measure([(1.0, 1.0)], sigma0=0.0)
    assert model.mu_points.tolist() == [1.0]
    assert model.mu_masses.tolist() == [1.0]


def test_delta_zero_only():
    model = build_measure([], sigma0=1.0)
    assert model.mu_points.tolist() == [0.0]
    assert model.mu_masses.tolist() == [1.0]


def test_atom_mass_is_size_squared_times_rate():
    model = build_measure([(2.0, 3.0)], sigma0=0.0)
    assert model.mu_masses.tolist() == [12.0]


@pytest.mark.parametrize("atoms,sigma0", [
    ([(1.0, 1.0), (1.0, 2.0)], 0.0),   # duplicate size
    ([(0.0, 1.0)], 0.0),               # zero size
    ([], 0.0),                         # all-zero measure
    ([(1.0, -1.0)], 0.0),              # non-positive rate
])
def test_build_measure_rejects_bad_atoms(atoms, sigma0):
    with pytest.raises(ValidationError):
        build_measure(atoms, sigma0=sigma0)


def test_moments():
    model = build_measure([(2.0, 3.0), (-1.0, 0.5)], sigma0=0.0, drift=0.25)
    assert model.nu_moment(1) == pytest.approx(2 * 3 - 0.5)
    assert model.nu_moment(2) == pytest.approx(4 * 3 + 0.5)
    assert model.mean_increment_rate == pytest.approx(0.25 + 5.5)
    assert model.power_mean_rate(2) == model.nu_moment(2)


# -- orthonormalization -------------------------------------------------------

def test_single_atom_basis_degenerates_past_first_row():
    model = build_measure([(1.0, 1.0)], sigma0=0.0)
    basis = orthonormal_basis(model, 3)
    assert basis.effective_dim == 1
    assert basis.degenerate == (False, True, True)
    assert basis.coeffs[0, 0] == pytest.approx(1.0)
    assert np.all(basis.coeffs[1:] == 0.0)


def test_two_atom_basis_matches_exact_oracle():
    # mu has unit masses at +-1: <1,1> = 2, <x,1> = 0, <x,x> = 2
    model = build_measure([(1.0, 1.0), (-1.0, 1.0)], sigma0=0.0)
    basis = orthonormal_basis(model, 3)
    oracle = exact_gram_schmidt([1.0, -1.0], [1.0, 1.0], 3)
    assert basis.effective_dim == 2
    np.testing.assert_allclose(basis.coeffs, oracle, atol=1e-14)
    inv_sqrt2 = 0.7071067811865476  # oracle value 1/sqrt(2)
    assert basis.coeffs[0, 0] == pytest.approx(inv_sqrt2, abs=1e-15)
    assert basis.coeffs[1, 1] == pytest.approx(inv_sqrt2, abs=1e-15)


def test_three_atom_basis_matches_exact_oracle():
    atoms = [(1.0, 2.0), (-2.0, 1.0), (3.0, 0.5)]
    model = build_measure(atoms, sigma0=0.0)
    basis = orthonormal_basis(model, 3)
    pts = model.mu_points
    ws = model.mu_masses
    oracle = exact_gram_schmidt(pts, ws, 3)
    assert basis.effective_dim == 3
    np.testing.assert_allclose(basis.coeffs, oracle, atol=1e-10)


def test_delta_zero_basis():
    model = build_measure([], sigma0=1.0)
    basis = orthonormal_basis(model, 2)
    assert basis.effective_dim == 1
    assert basis.coeffs[0, 0] == pytest.approx(1.0)
    assert basis.degenerate[1]


def test_orthonormality_residual_within_tolerance():
    model = build_measure([(0.5, 1.0), (-1.5, 2.0), (2.5, 0.25)], sigma0=0.7)
    basis = orthonormal_basis(model, 4)
    assert basis.effective_dim == 4
    worst = 0.0
    for i in range(1, 5):
        for j in range(1, 5):
            val = inner_product(model, lambda x: basis.q_values(i, x),
                                lambda x: basis.q_values(j, x))
            worst = max(worst, abs(val - (1.0 if i == j else 0.0)))
    assert worst <= 1e-10


def test_effective_dim_counts_mu_atoms_including_origin():
    model = build_measure([(1.0, 1.0), (2.0, 1.0)], sigma0=0.5)
    basis = orthonormal_basis(model, 5)
    assert basis.effective_dim == 3


def test_permutation_invariance():
    a = build_measure([(1.0, 2.0), (-2.0, 1.0), (3.0, 0.5)], sigma0=0.0)
    b = build_measure([(3.0, 0.5), (1.0, 2.0), (-2.0, 1.0)], sigma0=0.0)
    ba = orthonormal_basis(a, 3)
    bb = orthonormal_basis(b, 3)
    np.testing.assert_allclose(ba.coeffs, bb.coeffs, atol=1e-10)


def test_rate_scaling_law():
    # scaling every rate by lam scales each coefficient by lam^(-1/2)
    lam = 4.0
    a = build_measure([(1.0, 2.0), (-2.0, 1.0)], sigma0=0.0)
    b = build_measure([(1.0, 2.0 * lam), (-2.0, 1.0 * lam)], sigma0=0.0)
    ba = orthonormal_basis(a, 2)
    bb = orthonormal_basis(b, 2)
    np.testing.assert_allclose(bb.coeffs, ba.coeffs / math.sqrt(lam), atol=1e-12)


def test_leading_coefficients_positive():
    model = build_measure([(1.0, 1.0), (-3.0, 2.0), (0.25, 5.0)], sigma0=0.0)
    basis = orthonormal_basis(model, 3)
    for i in range(basis.effective_dim):
        assert basis.coeffs[i, i] > 0


# -- evaluation ---------------------------------------------------------------

def test_eval_p_two_atom_value():
    model = build_measure([(1.0, 1.0), (-1.0, 1.0)], sigma0=0.0)
    basis = orthonormal_basis(model, 2)
    assert eval_p(basis, 1, 1.0) == pytest.approx(0.7071067811865476, abs=1e-12)


def test_p_vanishes_at_origin():
    model = build_measure([(0.5, 1.0), (-1.5, 2.0)], sigma0=0.7)
    basis = orthonormal_basis(model, 3)
    for i in range(1, 4):
        assert eval_p(basis, i, 0.0) == 0.0


def test_degenerate_row_evaluates_to_zero():
    model = build_measure([(1.0, 1.0)], sigma0=0.0)
    basis = orthonormal_basis(model, 3)
    xs = np.linspace(-2, 2, 7)
    assert np.all(basis.p_values(3, xs) == 0.0)


def test_eval_index_out_of_range():
    model = build_measure([(1.0, 1.0)], sigma0=0.0)
    basis = orthonormal_basis(model, 2)
    with pytest.raises(IndexError):
        eval_q(basis, 0, 1.0)
    with pytest.raises(IndexError):
        eval_p(basis, 3, 1.0)


# -- inner product ------------------------------------------------------------

def test_inner_product_unit_mass():
    model = build_measure([(1.0, 1.0)], sigma0=0.0)
    assert inner_product(model, lambda x: np.ones_like(x), lambda x: np.ones_like(x)) == 1.0


def test_inner_product_odd_symmetry():
    model = build_measure([(1.0, 1.0), (-1.0, 1.0)], sigma0=0.0)
    assert inner_product(model, lambda x: x, lambda x: np.ones_like(x)) == 0.0


def test_inner_product_orthogonality_of_basis():
    model = build_measure([(1.0, 1.0), (-1.0, 1.0)], sigma0=0.0)
    basis = orthonormal_basis(model, 2)
    val = inner_product(model, lambda x: basis.q_values(1, x),
                        lambda x: basis.q_values(2, x))
    assert abs(val) <= 1e-12
