"""gaitforge: libraries of locally optimal periodic trajectories for hybrid
dynamical systems, via indirect single shooting and pseudo-arclength
continuation, with a direct-shooting baseline and a compass-gait walker
reference model."""

__version__ = "0.1.0"

from .compass_gait import WalkerParams, make_ocp  # noqa: E402,F401
from .continuation import (ContinuationConfig, CurvePoint,  # noqa: F401
                           GaitLibrary, initial_direction, predict,
                           run_continuation, tangent)
from .direct import (DirectDecision, DirectShooting, InputBasis,  # noqa: F401
                     basis_eval, classify_stationary_point)
from .indirect import (ExtendedState, IndirectDecision,  # noqa: F401
                       IndirectResidual, IndirectShooting, block_slices)
from .integrate import (DenseTrajectory, ToleranceConfig,  # noqa: F401
                        integrate_fixed_horizon,
                        integrate_with_sensitivities)
from .ocp import (BoundaryConstraint, ParameterizedOCP, eval_cost,  # noqa: F401
                  eval_h, validate_ocp)
from .reconstruct import (ObservabilityStack, PassiveGait,  # noqa: F401
                          build_observability_stack, find_passive_gait,
                          reconstruct_costate, reconstruct_lambda,
                          reconstruct_q, seed_from_passive)
