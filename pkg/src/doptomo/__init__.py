"""Coherent Doppler tomography of rotating point scatterers.

Simulation of the received phase history, backprojection imaging,
phase-offset point nulls and known-kernel least-squares deblurring.
"""

from .deblur import (
    BlurKernel,
    BlurredTrace,
    blur,
    build_convolution_matrix,
    deblur_ls,
    gaussian_kernel,
)
from .nulling import (
    DegenerateNullError,
    NullReport,
    NullSpec,
    PhaseOffset,
    SteeringMatrix,
    apply_phase_offset,
    build_steering,
    linearized_residual,
    null_phase_offset,
    solve_phase_offset,
    verify_null,
)
from .numerics import RankDeficientError, dft, idft, lstsq, psd_solve
from .reconstruction import (
    CartesianGrid,
    ComplexImage,
    KPoint,
    Peak,
    PolarGrid,
    backproject_cartesian,
    backproject_points,
    backproject_polar,
    backproject_xy,
    find_peaks,
    line_cut,
    radial_cut,
    theta_to_kspace,
)
from .scenario import Scenario, ScenarioError, load_scenario
from .scene import (
    SPEED_OF_LIGHT,
    Scatterer,
    SceneConfig,
    SignalTrace,
    Spectrogram,
    approx_range,
    doppler_shift,
    exact_range,
    spectrogram,
    synthesize_trace,
)

__version__ = "0.1.0"
