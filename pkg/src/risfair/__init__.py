"""Fair (max-min SINR) resource allocation in a RIS-aided multi-user uplink.

Exact-CSI MMSE beamforming and equal-SINR power control, statistical-CSI
RIS phase design through random-matrix deterministic equivalents, an
EMF-exposure-aware variant, and a Monte-Carlo scheme-comparison harness.
"""

from .asymptotics import (
    DeterministicEquivalent,
    deterministic_equivalent,
    quadratic_form_concentration,
    resolvent_trace_equivalent,
    solve_dbar,
    solve_taubar,
    validate_theorem1,
    validate_theorem2,
)
from .beamforming import Beamformer, SinrReport, mmse_beamformer, sinr_per_user, sinr_post_mmse
from .emf import ExposureSpec, emf_to_power_bounds, physical_power_caps
from .errors import ConfigError, ConvergenceError, GradientSingularityError
from .model import (
    ChannelRealization,
    ChannelStatistics,
    Geometry,
    SystemConfig,
    build_statistics,
    effective_channels,
    exp_correlation_matrix,
    path_loss_los,
    path_loss_nlos,
    sample_geometry,
    sample_H1,
    sample_H2,
)
from .phaseopt import (
    AscentTrace,
    PgaOptions,
    PhaseVector,
    grad_taubar_phases,
    optimize_phases_instantaneous,
    optimize_phases_statistical,
)
from .power import (
    InterferenceState,
    PowerAllocation,
    allocate_power_asymptotic,
    allocate_power_instantaneous,
    interference_fixed_point,
)
from .schemes import AllocationResult, MonteCarloSummary, SchemeId, monte_carlo, run_scheme

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
