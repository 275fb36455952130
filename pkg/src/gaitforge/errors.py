"""Exception hierarchy shared across the package.

All errors derive from GaitforgeError so callers can catch numerical
failures without masking programming errors (ValueError/TypeError are
reserved for misuse of the API).
"""

from __future__ import annotations

import numpy as np


class GaitforgeError(Exception):
    """Base class for numerical and contract failures."""


class DimensionError(GaitforgeError):
    """A callable returned or received a vector of the wrong length."""


class SingularCostError(GaitforgeError):
    """Terminal cost undefined (e.g. division by zero traveled distance)."""


class IntegrationError(GaitforgeError):
    """Base class for initial-value integration failures."""


class NonConvergenceError(IntegrationError):
    """Step count exceeded the configured maximum."""


class DivergenceError(IntegrationError):
    """NaN/Inf encountered while evaluating the right-hand side."""


class SingularEliminationError(GaitforgeError):
    """Input stationarity cannot determine u (q = 0)."""


class SeedFailureError(GaitforgeError):
    """Passive-gait Newton search did not converge."""

    def __init__(self, message: str, best_residual: float = np.inf):
        super().__init__(message)
        self.best_residual = float(best_residual)


class SeedInconsistencyError(GaitforgeError):
    """Assembled seed does not satisfy the optimality residual."""

    def __init__(self, message: str, residual=None):
        super().__init__(message)
        self.residual = residual


class ObservabilityError(GaitforgeError):
    """Costate reconstruction stack is rank deficient."""


class SingularPointError(GaitforgeError):
    """Rank-deficient curve Jacobian (turning degeneracy or bifurcation)."""


class CorrectorFailure(GaitforgeError):
    """Corrector did not converge; the continuation loop may retry with a
    smaller step."""


class StallError(GaitforgeError):
    """Continuation step size underflowed; carries the partial library."""

    def __init__(self, message: str, partial_library=None):
        super().__init__(message)
        self.partial_library = partial_library


class DirectionUndefinedError(GaitforgeError):
    """Initial tangent orthogonal to the continuation parameter."""


class RegularityViolationError(GaitforgeError):
    """Constraint gradient rank deficient at a stationary point."""


class SingularMassMatrixError(GaitforgeError):
    """Mass matrix numerically singular at the queried configuration."""


class SingularImpactError(GaitforgeError):
    """Post-impact momentum matrix numerically singular."""
