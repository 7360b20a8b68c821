"""Adaptive system identification toolkit.

FIR/IIR adaptive filters trained by LMS, a recursive-gradient LMS for
filters with feedback, a real-coded GA baseline, and a hybrid learner that
escapes stalled adaptation through randomized coefficient offsets.  A
spectral-analysis layer predicts convergence behavior from the training
signal's autocorrelation eigenstructure, and a CLI drives reproducible,
seeded experiments.
"""

from .adaptive_fir import FirFilterState, LmsRunConfig, lms_step, mu_stability_bound, run_fir_lms
from .adaptive_iir import (
    IirFilterState,
    iir_gradient_step,
    iir_output,
    pole_radii,
    run_iir_lms,
    stabilize_poles,
)
from .errors import (
    AdaptidError,
    ConfigError,
    DegenerateSpectrumError,
    DivergenceError,
    InvalidArgumentError,
    InvalidPlantError,
    InvalidSampleError,
    NoPlateauError,
    SingularMatrixError,
)
from .evolution import (
    Chromosome,
    GaConfig,
    LmsGaConfig,
    estimate_gt,
    fitness,
    ga_baseline_run,
    lms_ga_run,
    spawn_offsprings,
    windowed_mse,
)
from .signals import RngStream, color, gen_four_level, standard_lpf_8tap
from .spectral import (
    AutocorrSeq,
    ConvergenceEstimate,
    PsdCurve,
    autocorr_estimate,
    convergence_estimate,
    psd_from_autocorr,
    sym_eigenvalues,
    toeplitz_from_autocorr,
    wiener_solution,
)
from .sysid import (
    ExperimentConfig,
    ExperimentReport,
    Plant,
    convergence_iterations,
    mse_db,
    plant_response,
    run_experiment,
    standard_fir_plant,
    standard_iir_plant,
    theoretical_cost,
)

__version__ = "0.1.0"
