"""Unrolled model-based reconstruction of dynamic complex image series with a
learned residual denoiser and a graph-manifold prior."""

from .denoiser import (
    AdamState,
    ConvLayer,
    DenoiserParams,
    adam_step,
    denoise_backward,
    denoise_forward,
    init_denoiser,
)
from .errors import ConfigError, FormatError, NumericError
from .estimator import ManifoldUnrolledReconstructor
from .fourier import fft2, fft2c, ifft2c, inner
from .graph import ManifoldGraph, compute_Q, estimate_weights, storm_energy
from .metrics import snr_db, spearman_rank_correlation
from .operators import (
    KSpaceData,
    apply_A,
    apply_A_star,
    dc_solve,
    normal_residual,
)
from .phantom import (
    PhantomConfig,
    PhaseRecord,
    generate_phantom,
    phase_distance,
    simulate_navigators,
)
from .sampling import (
    GOLDEN_ANGLE_DEG,
    SamplingPattern,
    golden_angle_pattern,
    line_mask,
    navigator_lines,
    navigator_mask,
)
from .unroll import (
    QSchedule,
    TrainResult,
    UnrollConfig,
    build_q_schedule,
    reconstruct,
    reconstruct_with_fixed_Q,
    train,
    unrolled_gradient,
)

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "ConfigError",
    "ConvLayer",
    "DenoiserParams",
    "FormatError",
    "GOLDEN_ANGLE_DEG",
    "KSpaceData",
    "ManifoldGraph",
    "ManifoldUnrolledReconstructor",
    "NumericError",
    "PhantomConfig",
    "PhaseRecord",
    "QSchedule",
    "SamplingPattern",
    "TrainResult",
    "UnrollConfig",
    "adam_step",
    "apply_A",
    "apply_A_star",
    "build_q_schedule",
    "compute_Q",
    "dc_solve",
    "denoise_backward",
    "denoise_forward",
    "estimate_weights",
    "fft2",
    "fft2c",
    "generate_phantom",
    "golden_angle_pattern",
    "ifft2c",
    "init_denoiser",
    "inner",
    "line_mask",
    "navigator_lines",
    "navigator_mask",
    "normal_residual",
    "phase_distance",
    "reconstruct",
    "reconstruct_with_fixed_Q",
    "simulate_navigators",
    "snr_db",
    "spearman_rank_correlation",
    "storm_energy",
    "train",
    "unrolled_gradient",
]
