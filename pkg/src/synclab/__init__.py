"""synclab: a simulation laboratory for attraction-time scaling of a
radially symmetric gradient diffusion under small shared noise.

The package measures how long sets and single points take to reach the
random attractor of  dX = -gradient(E)(X) dt + sqrt(eps) dW  with
E(x) = profile(|x|^2), and reproduces the two scaling regimes: barrier-
exponential times for sets, linear-in-1/eps times for points (d = 2).
"""

__version__ = "0.1.0"

from .potential import (  # noqa: F401
    ContractionInfo,
    NotContractingError,
    PreconditionError,
    RadialPotential,
    eval_u,
    quasi_potential,
    strong_contraction_radius,
    validate,
)
from .noise import NoisePath, ScaledView, ShiftView, scaled_view  # noqa: F401
from .flow import (  # noqa: F401
    CircleState,
    DivergenceError,
    Ensemble,
    PolarState,
    RadiusCollapse,
    circle_step,
    ode_flow,
    polar_step,
    pullback_attractor_sample,
    sde_step,
    sphere_sample,
    square_grid,
)
from .stopping import (  # noqa: F401
    Annulus,
    ProxyEmpty,
    StoppingRecord,
    entry_time,
    exit_time,
    grid_sync_time,
    point_to_attractor_times,
    sphere_sync_time,
    sync_sandwich,
)
from .ldp import (  # noqa: F401
    AlphaTooLarge,
    Control,
    ControlSchedule,
    PhasePredicateFailed,
    ReversedFlowStall,
    action_lower_bound,
    build_sync_control,
    controlled_flow,
    schilder_action,
    verify_control,
)
from .experiments import (  # noqa: F401
    Campaign,
    CampaignResult,
    FitResult,
    NoFitPossible,
    TooCensored,
    circle_sync_rate,
    escape_scaling,
    exit_probability,
    fit_loglinear,
    gronwall_comparison,
    lyapunov_circle,
    point_sync_scaling,
    run_campaign,
    set_sync_scaling,
)
from .config import ConfigError, RunConfig, parse_config  # noqa: F401
