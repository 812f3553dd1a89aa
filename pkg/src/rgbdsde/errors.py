"""Exception hierarchy shared across the package."""


class RgbdsdeError(Exception):
    """Base class for all library errors."""


class ValidationError(RgbdsdeError, ValueError):
    """Bad model data, config values, or a violated precondition."""


class SolverError(RgbdsdeError, RuntimeError):
    """Numerical failure inside a backward solve."""


class SingularRegressionError(SolverError):
    """Regression design matrix lost rank at a specific time node."""

    def __init__(self, node, detail=""):
        self.node = node
        msg = f"singular regression design matrix at node {node}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class NanPropagationError(SolverError):
    """Non-finite values entered the recursion."""

    def __init__(self, node):
        self.node = node
        super().__init__(f"non-finite values first appeared at node {node}")


class FixedPointDivergenceError(SolverError):
    """Outer fixed-point iteration failed to contract below tolerance."""

    def __init__(self, deltas, max_iter):
        self.deltas = list(deltas)
        self.ratios = [
            deltas[k] / deltas[k - 1]
            for k in range(1, len(deltas))
            if deltas[k - 1] > 0
        ]
        super().__init__(
            f"fixed-point iteration did not converge in {max_iter} iterations; "
            f"deltas={['%.3e' % d for d in self.deltas]}"
        )
