"""Orthonormal polynomial bases over finite-activity jump measures.

The weighting measure mu puts mass (size^2 * rate) at every jump atom and
sigma0^2 at the origin.  Gram-Schmidt over those atoms is an exact finite
computation, and the number of surviving rows equals the number of atoms:
that degeneracy is what later collapses the martingale family to a single
compensated Poisson component in the one-atom case.
"""

import numpy as np

from rgbdsde import build_measure, eval_p, eval_q, inner_product, orthonormal_basis

print("== symmetric two-atom measure ==")
model = build_measure([(1.0, 1.0), (-1.0, 1.0)], sigma0=0.0)
basis = orthonormal_basis(model, 3)
print("mu atoms:", dict(zip(model.mu_points, model.mu_masses)))
print("coefficient triangle (rows q_0, q_1, q_2):")
print(basis.coeffs)
print("effective_dim:", basis.effective_dim, "| degenerate rows:", basis.degenerate)
print("q_0 = 1/sqrt(2), q_1 = x/sqrt(2); p_1(1) =", eval_p(basis, 1, 1.0))

worst = max(abs(inner_product(model,
                              lambda x, i=i: basis.q_values(i, x),
                              lambda x, j=j: basis.q_values(j, x))
                - (1.0 if i == j else 0.0))
            for i in (1, 2) for j in (1, 2))
print("orthonormality residual:", worst)

print()
print("== single atom: everything past the first row degenerates ==")
one = build_measure([(2.0, 3.0)], sigma0=0.0)
b1 = orthonormal_basis(one, 4)
print("mu mass at 2.0 is size^2 * rate = 12:", one.mu_masses[0])
print("effective_dim:", b1.effective_dim, "| q_0:", eval_q(b1, 1, 0.0), "= 1/sqrt(12)")
print("rows 2..4 are zeroed:", np.all(b1.coeffs[1:] == 0.0))

print()
print("== scaling the rates by lambda scales coefficients by lambda^(-1/2) ==")
lam = 4.0
scaled = build_measure([(1.0, 4.0), (-1.0, 4.0)], sigma0=0.0)
bs = orthonormal_basis(scaled, 2)
print("ratio of leading coefficients:", basis.coeffs[0, 0] / bs.coeffs[0, 0],
      "= sqrt(lambda) =", np.sqrt(lam))

print()
print("== mass at the origin regularizes the basis without adding dynamics ==")
reg = build_measure([(1.0, 1.0)], sigma0=0.5)
br = orthonormal_basis(reg, 3)
print("atoms of mu now include 0:", dict(zip(reg.mu_points, reg.mu_masses)))
print("effective_dim:", br.effective_dim)
