"""Passive-radar imaging by low-rank recovery of the lifted scene."""

__version__ = "0.1.0"

from .constants import C0
from .scene import (
    CircularArcTrajectory,
    KroneckerMatrix,
    LinearTrajectory,
    ReflectivityImage,
    SceneGrid,
    TransmitterModel,
    WaypointTrajectory,
    build_scene_grid,
    default_phantom,
    elevation_angle,
    kronecker_scene,
    trajectory_position,
)
from .forward import (
    ForwardOperator,
    ImagingGeometry,
    Measurement,
    SamplingGrid,
    apply_adjoint,
    apply_forward,
    assemble_forward,
    bistatic_phase,
    correlate,
    correlated_kernel_entry,
    largest_singular_value,
    received_signal,
    unvec_kron,
    vec_kron,
)
from .solver import (
    IterationRecord,
    SolverConfig,
    SolverState,
    extract_reflectivity,
    psd_project,
    solve,
    uzawa_step,
)
from .metrics import MetricsReport, error_metrics, numerical_rank
from .analysis import (
    KernelConfig,
    KernelEstimate,
    RicProbeReport,
    check_resolution_condition,
    classify_quad,
    empirical_ric,
    kernel_asymptotic,
    kernel_bruteforce,
    resolution_bound,
    theta,
)
