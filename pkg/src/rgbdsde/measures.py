"""Finite-activity jump measures and the polynomial side of Teugels martingales.

For a jump measure nu concentrated on finitely many atoms, the weighting
measure mu(dx) = x^2 nu(dx) + sigma0^2 delta_0(dx) is purely atomic, so every
inner product below is a finite weighted sum and Gram-Schmidt is exact up to
floating point.  Orthonormalizing 1, x, x^2, ... in L^2(mu) yields the
coefficient triangle c[i][k] from which the martingales are assembled.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, Tuple

import numpy as np

from .errors import ValidationError

# relative residual under which a monomial is declared linearly dependent
DEGENERACY_RTOL = 1e-12


@dataclass(frozen=True)
class LevyMeasureModel:
    """Finite list of jump atoms, an optional point mass at zero, and a drift.

    ``atoms`` holds (jump_size, rate) pairs of the jump measure nu.  ``sigma0``
    enters only through mu's atom at the origin (mass sigma0^2); the simulated
    process itself is drift plus compound Poisson.  ``drift_a`` is the raw
    linear drift, so the mean increment per unit time is
    drift_a + sum(rate * size).
    """

    atoms: Tuple[Tuple[float, float], ...]
    sigma0: float = 0.0
    drift_a: float = 0.0

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @property
    def jump_sizes(self) -> np.ndarray:
        return np.array([a[0] for a in self.atoms], dtype=float)

    @property
    def jump_rates(self) -> np.ndarray:
        return np.array([a[1] for a in self.atoms], dtype=float)

    @property
    def total_rate(self) -> float:
        return float(sum(a[1] for a in self.atoms))

    def nu_moment(self, k: int) -> float:
        """integral y^k nu(dy), a finite sum over the atoms."""
        return float(sum(rate * size**k for size, rate in self.atoms))

    @property
    def mean_increment_rate(self) -> float:
        """Expected increment of the process per unit time (drift plus mean jump mass)."""
        return self.drift_a + self.nu_moment(1)

    def power_mean_rate(self, i: int) -> float:
        """Expected increment per unit time of the i-th power-jump process."""
        if i == 1:
            return self.mean_increment_rate
        return self.nu_moment(i)

    @property
    def mu_points(self) -> np.ndarray:
        pts = list(self.jump_sizes)
        if self.sigma0 > 0.0:
            pts.append(0.0)
        return np.array(pts, dtype=float)

    @property
    def mu_masses(self) -> np.ndarray:
        masses = [size**2 * rate for size, rate in self.atoms]
        if self.sigma0 > 0.0:
            masses.append(self.sigma0**2)
        return np.array(masses, dtype=float)

    def mu_moment(self, k: int) -> float:
        pts = self.mu_points
        return float(np.sum(self.mu_masses * pts**k)) if k else float(np.sum(self.mu_masses))


def build_measure(atoms: Iterable[Sequence[float]], sigma0: float = 0.0,
                  drift: float = 0.0) -> LevyMeasureModel:
    """Validate and freeze a finite-activity measure model.

    Parameters
    ----------
    atoms:
        Iterable of (jump_size, rate) pairs; sizes must be nonzero and pairwise
        distinct, rates strictly positive.
    sigma0:
        Mass parameter of mu's atom at the origin (>= 0).
    drift:
        Raw linear drift of the simulated process.
    """
    atom_list = []
    for entry in atoms:
        size, rate = float(entry[0]), float(entry[1])
        if size == 0.0:
            raise ValidationError("jump size 0 is not allowed; use sigma0 for mass at the origin")
        if not np.isfinite(size) or not np.isfinite(rate):
            raise ValidationError(f"non-finite atom ({size}, {rate})")
        if rate <= 0.0:
            raise ValidationError(f"atom at {size} has non-positive rate {rate}")
        atom_list.append((size, rate))
    sizes = [a[0] for a in atom_list]
    if len(set(sizes)) != len(sizes):
        raise ValidationError("duplicate jump sizes in atom list")
    sigma0 = float(sigma0)
    if sigma0 < 0.0:
        raise ValidationError("sigma0 must be >= 0")
    if not atom_list and sigma0 == 0.0:
        raise ValidationError("all-zero measure: provide at least one atom or sigma0 > 0")
    return LevyMeasureModel(atoms=tuple(atom_list), sigma0=sigma0, drift_a=float(drift))


@dataclass(frozen=True)
class PolynomialBasis:
    """Lower-triangular coefficients of polynomials orthonormal in L^2(mu).

    Row i-1 stores q_{i-1}(x) = c[i][1] + c[i][2] x + ... + c[i][i] x^{i-1}
    in ascending power order.  Rows past ``effective_dim`` are zero and
    flagged degenerate: mu has too few atoms to support them.
    """

    model: LevyMeasureModel
    m: int
    coeffs: np.ndarray
    effective_dim: int
    degenerate: Tuple[bool, ...]
    mu_moments: Tuple[float, ...]

    def q_values(self, i: int, x) -> np.ndarray:
        """Evaluate q_{i-1} at x, 1 <= i <= m."""
        if not 1 <= i <= self.m:
            raise IndexError(f"polynomial index {i} out of range 1..{self.m}")
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float),
                                                self.coeffs[i - 1])

    def p_values(self, i: int, x) -> np.ndarray:
        """Evaluate p_i(x) = x * q_{i-1}(x); p_i(0) = 0 always."""
        x = np.asarray(x, dtype=float)
        return x * self.q_values(i, x)


def orthonormal_basis(model: LevyMeasureModel, m: int) -> PolynomialBasis:
    """Gram-Schmidt of 1, x, ..., x^{m-1} in L^2(mu) with exact atomic quadrature.

    Modified Gram-Schmidt with a second re-orthogonalization pass keeps the
    basis orthonormal to ~1e-15 for the small degrees used here.  Monomials
    that are linearly dependent on the lower ones over mu's atoms (relative
    residual below 1e-12) produce zeroed, flagged rows.
    """
    if m < 1:
        raise ValidationError("basis size m must be >= 1")
    pts = model.mu_points
    wts = model.mu_masses
    powers = pts[:, None] ** np.arange(m)[None, :]

    def ip(ca, cb):
        return float(np.sum(wts * (powers @ ca) * (powers @ cb)))

    coeffs = np.zeros((m, m))
    degenerate = [False] * m
    accepted: list[int] = []
    for i in range(m):
        c = np.zeros(m)
        c[i] = 1.0
        orig_norm = np.sqrt(max(ip(c, c), 0.0))
        if orig_norm == 0.0:
            degenerate[i] = True
            continue
        for _ in range(2):
            for j in accepted:
                c = c - ip(c, coeffs[j]) * coeffs[j]
        nrm = np.sqrt(max(ip(c, c), 0.0))
        if nrm <= DEGENERACY_RTOL * orig_norm:
            degenerate[i] = True
            continue
        c = c / nrm
        if c[i] < 0:  # leading coefficient kept positive
            c = -c
        coeffs[i] = c
        accepted.append(i)

    coeffs.flags.writeable = False
    moments = tuple(model.mu_moment(k) for k in range(2 * m - 1))
    return PolynomialBasis(
        model=model,
        m=m,
        coeffs=coeffs,
        effective_dim=len(accepted),
        degenerate=tuple(degenerate),
        mu_moments=moments,
    )


def eval_q(basis: PolynomialBasis, i: int, x):
    """Value of q_{i-1} at x (scalar in, scalar out)."""
    out = basis.q_values(i, x)
    return float(out) if np.isscalar(x) else out


def eval_p(basis: PolynomialBasis, i: int, x):
    """Value of p_i(x) = x q_{i-1}(x) at x."""
    out = basis.p_values(i, x)
    return float(out) if np.isscalar(x) else out


def inner_product(model: LevyMeasureModel, f: Callable, g: Callable) -> float:
    """<f, g> in L^2(mu): a finite sum over mu's atoms, exact for polynomials.

    ``f`` and ``g`` must accept numpy arrays.
    """
    pts = model.mu_points
    fv = np.asarray(f(pts), dtype=float)
    gv = np.asarray(g(pts), dtype=float)
    return float(np.sum(model.mu_masses * fv * gv))
