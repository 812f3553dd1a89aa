"""Least-squares projections standing in for conditional expectations.

Features are polynomials of the state (affinely rescaled to [-1, 1] for
conditioning) plus an optional boundary indicator.  Ridge regularization is
applied to every coefficient except the intercept, so constant targets are
reproduced exactly; this is what makes the degenerate scenarios bit-clean.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import SingularRegressionError


@dataclass(frozen=True)
class RegressionBasis:
    """State features used by the backward regressions."""

    degree: int = 2
    include_boundary: bool = False
    theta: Optional[float] = None
    ridge_lambda: float = 1e-8

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError("degree must be >= 0")
        if self.ridge_lambda < 0:
            raise ValueError("ridge_lambda must be >= 0")
        if self.include_boundary and self.theta is None:
            raise ValueError("boundary indicator requires theta")

    def widened(self) -> "RegressionBasis":
        """Same basis with doubled polynomial degree (used for error allowances)."""
        return RegressionBasis(degree=2 * self.degree if self.degree else 1,
                               include_boundary=self.include_boundary,
                               theta=self.theta, ridge_lambda=self.ridge_lambda)

    def design_matrix(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        lo, hi = float(np.min(x)), float(np.max(x))
        center = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        xh = (x - center) / half if half > 0 else np.zeros_like(x)
        cols = [np.ones_like(x)]
        for d in range(1, self.degree + 1):
            cols.append(xh**d)
        if self.include_boundary:
            cols.append((np.abs(x) >= self.theta * (1 - 1e-12)).astype(float))
        return np.column_stack(cols)


class NodeRegression:
    """One node's ridge projection, reusable across several target vectors."""

    def __init__(self, basis: RegressionBasis, x: np.ndarray, node: int):
        F = basis.design_matrix(x)
        G = F.T @ F
        if basis.ridge_lambda > 0:
            pen = np.full(G.shape[0], basis.ridge_lambda)
            pen[0] = 0.0  # intercept unpenalized
            G = G + np.diag(pen)
        self._F = F
        self._G = G
        self._node = node

    def fitted(self, targets: np.ndarray) -> np.ndarray:
        """Projected values of the targets, column by column."""
        b = self._F.T @ targets
        try:
            beta = np.linalg.solve(self._G, b)
        except np.linalg.LinAlgError as exc:
            raise SingularRegressionError(self._node, str(exc)) from exc
        return self._F @ beta
