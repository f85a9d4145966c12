"""Nesterov acceleration, gradient descent and the Heavy Ball flow near manifolds of minimizers."""
from .core import (
    FunctionObjective,
    HyperParamError,
    HyperParams,
    IterateState,
    NonFiniteGradientError,
    Objective,
    SpectralBounds,
    TrajectorySample,
    hess_vec_fd,
    validate_hyperparams,
)
from .flow import FlowState, analytic_1d_solution, flow_run, flow_step
from .lyapunov import LyapunovMonitor, continuous_lyapunov, decay_audit, discrete_lyapunov, sandwich_check
from .objectives import (
    QuadraticObjective,
    SphereProductObjective,
    manifold_distance,
    near_manifold_init,
    spectral_bounds_of,
    sphere_eval,
    sphere_grad,
    sphere_hess_vec,
)
from .optimizers import Method, StopCriteria, Termination, Trajectory, gd_step, nag_step, run
from .rate import RateFit, fit_exp_rate, fit_linear_rate
from .spectral import (
    RateCard,
    RootPair,
    char_roots,
    flow_rate,
    grid_verify_optimality,
    optimal_params,
    schur_stable,
    spectral_radius_G,
)

__version__ = "0.1.0"
