"""Minimum-norm interpolation diagnostics and Monte Carlo experiments.

The package splits into spectra (eigenvalue sequences and tail sums),
diagnostics (effective-rank index, fixed-point radii, bounds, regimes),
design (Gaussian designs and the pseudo-inverse fit), noise (noise
models and their design-independence tags), experiments (seeded trial
harness, scans, studies), and cli (the command-line front end).
"""

from .design import (
    DesignMatrix,
    FitResult,
    RegressionInstance,
    deviation_term,
    dump_design,
    estimation_error,
    min_norm_fit,
    parse_design,
    prediction_error,
    sample_design,
    smallest_singular_value,
    trial_rng,
)
from .diagnostics import (
    REGIME_HIGH,
    REGIME_LOW,
    Constants,
    DiagnosticsReport,
    complexity_radius,
    diagnose,
    effective_rank_index,
    gaussian_width_bound,
    localization_radius,
    lower_radius,
    prediction_bounds,
    regime_bounds,
    snr_and_regime,
    subexp_combine,
    subexp_tail_bound,
    tail_halving_index,
)
from .experiments import (
    ALL_CHECKS,
    ExperimentConfig,
    ExperimentError,
    ExperimentResult,
    TrialRecord,
    certificate_study,
    expected_noise_norm_sq,
    lower_bound_study,
    run_experiment,
    run_trial,
    snr_scan,
)
from .noise import (
    DeterministicNoise,
    GaussianNoise,
    ModelResidualNoise,
    ScaledDirectionNoise,
    StudentTNoise,
    ZeroNoise,
    conditional_independence_tag,
    realize_noise,
)
from .spectra import (
    CovarianceModel,
    Spectrum,
    load_spectrum,
    make_exp_floor_spectrum,
    make_flat_spectrum,
    make_three_level_spectrum,
    parse_spectrum,
    tail_sum,
)

__version__ = "0.1.0"
