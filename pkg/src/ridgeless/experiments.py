"""Monte Carlo harness: repeated fits, identity and bound checks, SNR scans.

Each trial is a pure function of (seed, trial_index): the design and
then the noise are drawn, in that order, from the generator derived
from that pair, so a run's records are bit-identical at any worker
count and in any execution order.  The true coefficient vector is fixed
across a run; when its direction is random it is drawn once from a
dedicated stream (index 2^32, above any trial index).

Per-trial checks use the trial's own realized noise norm; the run-level
diagnostics use the median realized noise norm across trials (for
deterministic noise the median is that fixed value, so one rule covers
both).  Bound comparisons are reported as ratios, not pass/fail, except
where explicit constants exist: the estimation bound (factor 4) and the
smallest-singular-value certificate (factor 1/4).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .design import (
    min_norm_fit,
    prediction_error,
    sample_design,
    smallest_singular_value,
    trial_rng,
)
from .diagnostics import (
    REGIME_HIGH,
    Constants,
    DiagnosticsReport,
    diagnose,
    effective_rank_index,
)
from .noise import (
    DeterministicNoise,
    GaussianNoise,
    ModelResidualNoise,
    NoiseModel,
    ScaledDirectionNoise,
    StudentTNoise,
    ZeroNoise,
    conditional_independence_tag,
    noise_to_dict,
    realize_noise,
)
from .spectra import CovarianceModel

__all__ = [
    "CHECK_IDENTITY",
    "CHECK_CERTIFICATE",
    "CHECK_ESTIMATION",
    "CHECK_UPPER",
    "CHECK_LOWER",
    "ALL_CHECKS",
    "IDENTITY_TOL",
    "ExperimentConfig",
    "TrialRecord",
    "ExperimentResult",
    "ExperimentError",
    "resolve_beta_star",
    "run_trial",
    "run_experiment",
    "expected_noise_norm_sq",
    "ScanPoint",
    "snr_scan",
    "CertificateStudy",
    "certificate_study",
    "LowerBoundStudy",
    "lower_bound_study",
    "config_to_dict",
    "result_to_dict",
    "record_csv_header",
    "record_csv_row",
]

CHECK_IDENTITY = "identity"
CHECK_CERTIFICATE = "certificate"
CHECK_ESTIMATION = "estimation_bound"
CHECK_UPPER = "upper_bound"
CHECK_LOWER = "lower_bound"
ALL_CHECKS = frozenset(
    {CHECK_IDENTITY, CHECK_CERTIFICATE, CHECK_ESTIMATION, CHECK_UPPER, CHECK_LOWER}
)

# Interpolation-identity tolerance: the identity is exact algebra, so any
# violation beyond solver rounding indicates a defect.
IDENTITY_TOL = 1e-8

# The certificate compares the smallest singular value against
# sqrt(r_kstar) / 4; the estimation bound allows only float slack.
_CERT_FACTOR = 0.25
_BOUND_SLACK = 1e-12

# Stream index for the one-off random beta* direction draw; trial indices
# stay below 2^32 so the streams never collide.
_BETA_STREAM = 2**32

_DIRECTIONS = ("e1", "random", "top")


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """Everything needed to reproduce a run bit-for-bit."""

    covariance: CovarianceModel
    n: int
    noise_model: NoiseModel
    trials: int
    seed: int
    constants: Constants = Constants()
    beta_norm: float = 0.0
    beta_direction: str = "e1"
    beta_values: np.ndarray | None = None  # explicit vector; overrides norm + direction
    checks: frozenset = ALL_CHECKS
    rel_tol: float = 1e-10
    spectrum_spec: dict | None = None  # builder echo for serialized output

    def __post_init__(self):
        if not (isinstance(self.n, int) and self.n >= 1):
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not (isinstance(self.trials, int) and 1 <= self.trials <= _BETA_STREAM):
            raise ValueError(
                f"trials must be an integer in [1, {_BETA_STREAM}], got {self.trials!r}"
            )
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2**64):
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.beta_direction not in _DIRECTIONS:
            raise ValueError(
                f"beta_direction must be one of {_DIRECTIONS}, got {self.beta_direction!r}"
            )
        if self.beta_norm < 0:
            raise ValueError(f"beta_norm must be non-negative, got {self.beta_norm!r}")
        unknown = set(self.checks) - ALL_CHECKS
        if unknown:
            raise ValueError(f"unknown checks: {sorted(unknown)}")
        object.__setattr__(self, "checks", frozenset(self.checks))
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol!r}")
        if self.beta_values is not None:
            v = np.asarray(self.beta_values, dtype=float)
            if v.shape != (self.covariance.p,):
                raise ValueError(
                    f"beta_values must have shape ({self.covariance.p},), got {v.shape}"
                )
            v = v.copy()
            v.setflags(write=False)
            object.__setattr__(self, "beta_values", v)
        rank = self.covariance.spectrum.rank()
        if rank < self.n:
            raise ValueError(
                f"covariance rank {rank} is below the sample count n={self.n}"
            )


def resolve_beta_star(config: ExperimentConfig) -> np.ndarray:
    """The true coefficient vector, fixed across all trials of a run."""
    if config.beta_values is not None:
        return np.array(config.beta_values)
    p = config.covariance.p
    if config.beta_direction == "random":
        g = trial_rng(config.seed, _BETA_STREAM).standard_normal(p)
        direction = g / np.linalg.norm(g)
    else:
        # e1: first standard basis vector.  top: the direction of the largest
        # eigenvalue, which is the first eigenbasis column (or e1 when diagonal).
        direction = np.zeros(p)
        direction[0] = 1.0
        if config.beta_direction == "top" and config.covariance.rotation is not None:
            direction = np.array(config.covariance.rotation[:, 0])
    return config.beta_norm * direction


@dataclass(frozen=True)
class TrialRecord:
    """Realized quantities and check outcomes for one trial.

    certificate_pass and est_bound_pass are None when the corresponding
    check is disabled or undefined (infinite effective-rank index).
    """

    trial_index: int
    xi_norm_sq: float
    pred_error: float
    est_error: float
    sigma_min: float
    deviation: float
    identity_residual: float
    certificate_pass: bool | None
    est_bound_pass: bool | None


@dataclass(frozen=True)
class _TrialContext:
    """Per-run precomputation shared by all trials."""

    beta_star: np.ndarray
    beta_norm: float
    k_star: int | float
    r_kstar: float | None


def _make_context(config: ExperimentConfig) -> _TrialContext:
    beta_star = resolve_beta_star(config)
    ks = effective_rank_index(config.covariance.spectrum, config.n, config.constants.c0)
    rk = None if math.isinf(ks) else config.covariance.spectrum.tail_sum(ks)
    return _TrialContext(
        beta_star=beta_star,
        beta_norm=float(np.linalg.norm(beta_star)),
        k_star=ks,
        r_kstar=rk,
    )


class ExperimentError(RuntimeError):
    """A trial failed; records completed before the failure are preserved."""

    def __init__(self, trial_index: int, partial, cause: BaseException):
        super().__init__(
            f"trial {trial_index} failed: {cause} "
            f"({len(partial)} earlier trial(s) preserved)"
        )
        self.trial_index = trial_index
        self.partial = tuple(partial)
        self.cause = cause


def run_trial(
    config: ExperimentConfig, trial_index: int, _ctx: _TrialContext | None = None
) -> TrialRecord:
    """One trial: sample the design and noise, fit, compute all metrics."""
    ctx = _ctx if _ctx is not None else _make_context(config)
    rng = trial_rng(config.seed, trial_index)
    cov = config.covariance
    design = sample_design(cov, config.n, rng)
    xi = realize_noise(config.noise_model, design, ctx.beta_star, rng)
    y = design.entries @ ctx.beta_star + xi
    fit = min_norm_fit(design, y, config.rel_tol)

    n = config.n
    delta = fit.beta_hat - ctx.beta_star
    pred = prediction_error(cov, fit.beta_hat, ctx.beta_star)
    est = float(delta @ delta)
    xd = design.entries @ delta
    deviation = float(xd @ xd) / n - pred
    xi_norm_sq = float(xi @ xi)

    # Interpolation identity: pred + deviation = ||xi||^2 / n, exact algebra
    # whenever the fit interpolates.  Relative to max(||xi||^2, ||Y||^2)/n so
    # the zero-noise case stays well defined.
    scale = max(xi_norm_sq, float(y @ y), 1e-30) / n
    identity_residual = abs(pred + deviation - xi_norm_sq / n) / scale

    # The retained smallest singular value equals sigma_n at full rank; on a
    # rank-deficient fit fall back to the true smallest singular value.
    sigma_min = fit.sigma_min if fit.rank == n else smallest_singular_value(design)

    certificate_pass = None
    est_bound_pass = None
    if ctx.r_kstar is not None:
        sqrt_rk = math.sqrt(ctx.r_kstar)
        if CHECK_CERTIFICATE in config.checks:
            certificate_pass = bool(sigma_min >= _CERT_FACTOR * sqrt_rk)
        if CHECK_ESTIMATION in config.checks:
            rho_realized = ctx.beta_norm + 4.0 * math.sqrt(xi_norm_sq) / sqrt_rk
            est_bound_pass = bool(
                math.sqrt(est) <= rho_realized * (1.0 + _BOUND_SLACK) + _BOUND_SLACK
            )

    return TrialRecord(
        trial_index=trial_index,
        xi_norm_sq=xi_norm_sq,
        pred_error=pred,
        est_error=est,
        sigma_min=sigma_min,
        deviation=deviation,
        identity_residual=identity_residual,
        certificate_pass=certificate_pass,
        est_bound_pass=est_bound_pass,
    )


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    """One run: config echo, diagnostics, per-trial records, and aggregates."""

    config_echo: dict
    diagnostics: DiagnosticsReport
    records: tuple
    aggregates: dict
    rates: dict
    skipped: dict

    @property
    def identity_ok(self) -> bool:
        """Hard check: every trial satisfied the interpolation identity."""
        return all(r.identity_residual <= IDENTITY_TOL for r in self.records)


_METRICS = (
    "xi_norm_sq",
    "pred_error",
    "est_error",
    "sigma_min",
    "deviation",
    "identity_residual",
)


def _aggregate(values: np.ndarray) -> dict:
    return {
        "min": float(np.min(values)),
        "q05": float(np.quantile(values, 0.05)),
        "median": float(np.median(values)),
        "q95": float(np.quantile(values, 0.95)),
        "max": float(np.max(values)),
        "mean": float(np.mean(values)),
    }


def _pass_rate(flags) -> float | None:
    known = [f for f in flags if f is not None]
    if not known:
        return None
    return sum(known) / len(known)


def run_experiment(config: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Run all trials (optionally in a thread pool) and aggregate.

    Results are ordered by trial index and identical at any worker count.
    A failing trial raises ExperimentError with the completed records
    preserved on the exception.
    """
    ctx = _make_context(config)
    records: list = [None] * config.trials
    if threads <= 1:
        for i in range(config.trials):
            try:
                records[i] = run_trial(config, i, ctx)
            except Exception as exc:  # preserve completed work
                raise ExperimentError(i, [r for r in records if r is not None], exc)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {
                pool.submit(run_trial, config, i, ctx): i for i in range(config.trials)
            }
            failed = None
            for fut, i in futures.items():
                try:
                    records[i] = fut.result()
                except Exception as exc:
                    if failed is None:
                        failed = (i, exc)
            if failed is not None:
                raise ExperimentError(
                    failed[0], [r for r in records if r is not None], failed[1]
                )

    records = tuple(records)
    aggregates = {
        m: _aggregate(np.array([getattr(r, m) for r in records])) for m in _METRICS
    }
    xi_median = float(np.median([math.sqrt(r.xi_norm_sq) for r in records]))
    diag = diagnose(
        config.covariance.spectrum, config.n, ctx.beta_norm, xi_median, config.constants
    )

    skipped: dict = {}
    if math.isinf(ctx.k_star):
        reason = "effective-rank index is infinite"
        for check in (CHECK_CERTIFICATE, CHECK_ESTIMATION, CHECK_UPPER, CHECK_LOWER):
            if check in config.checks:
                skipped[check] = f"skipped: {reason}"
    if CHECK_LOWER in config.checks and not conditional_independence_tag(
        config.noise_model
    ):
        skipped[CHECK_LOWER] = (
            "skipped: hypothesis violated (noise depends on the design, so rows "
            "conditionally on the noise are not i.i.d. Gaussian)"
        )

    median_pred = aggregates["pred_error"]["median"]
    upper_ratio = None
    lower_ratio = None
    if CHECK_UPPER in config.checks and CHECK_UPPER not in skipped:
        if diag.upper_bound is not None and diag.upper_bound > 0:
            upper_ratio = median_pred / diag.upper_bound
    if CHECK_LOWER in config.checks and CHECK_LOWER not in skipped:
        if diag.lower_bound is not None and diag.lower_bound > 0:
            lower_ratio = median_pred / diag.lower_bound
    rates = {
        "certificate_pass_rate": _pass_rate([r.certificate_pass for r in records]),
        "est_bound_pass_rate": _pass_rate([r.est_bound_pass for r in records]),
        "upper_ratio": upper_ratio,
        "lower_ratio": lower_ratio,
    }
    return ExperimentResult(
        config_echo=config_to_dict(config),
        diagnostics=diag,
        records=records,
        aggregates=aggregates,
        rates=rates,
        skipped=skipped,
    )


def expected_noise_norm_sq(model: NoiseModel, n: int) -> float:
    """E ||xi||^2 where well defined; used to aim SNR targets in scans."""
    if isinstance(model, ZeroNoise):
        raise ValueError("SNR undefined for zero noise")
    if isinstance(model, GaussianNoise):
        return n * model.sigma**2
    if isinstance(model, StudentTNoise):
        if model.df <= 2:
            raise ValueError(
                "expected noise norm undefined for df <= 2 (infinite variance); "
                "SNR targets cannot be aimed"
            )
        return n * model.scale**2 * model.df / (model.df - 2.0)
    if isinstance(model, DeterministicNoise):
        total = float(model.values @ model.values)
        if total == 0.0:
            raise ValueError("SNR undefined for zero noise")
        return total
    if isinstance(model, ScaledDirectionNoise):
        if model.target_norm == 0.0:
            raise ValueError("SNR undefined for zero noise")
        return model.target_norm**2
    if isinstance(model, ModelResidualNoise):
        raise ValueError(
            "expected noise norm unavailable for residual noise (it depends on "
            "the design and the coefficients)"
        )
    raise TypeError(f"unknown noise model {type(model).__name__}")


@dataclass(frozen=True, eq=False)
class ScanPoint:
    """One SNR grid point: the rescaled run plus both regime thresholds."""

    snr_target: float
    beta_norm: float
    regime: str
    snr_threshold: float  # 1 / r_{k_star}
    snr_threshold_cn: float  # 1 / r_{cn}
    result: ExperimentResult


def snr_scan(
    base_config: ExperimentConfig, snr_grid, threads: int = 1
) -> list[ScanPoint]:
    """Run the experiment across an increasing SNR grid.

    For each target the coefficient norm is rescaled (the noise model
    stays fixed) so that ||beta*||^2 / E||xi||^2 equals the target; the
    regime label comes from each run's diagnostics.
    """
    grid = [float(t) for t in snr_grid]
    if not grid:
        raise ValueError("SNR grid must be non-empty")
    if any(t <= 0 for t in grid):
        raise ValueError("SNR targets must be positive")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("SNR grid must be strictly increasing")
    noise_norm_sq = expected_noise_norm_sq(base_config.noise_model, base_config.n)

    s = base_config.covariance.spectrum
    cn = min(base_config.constants.cn(base_config.n), s.p)
    r_cn = s.tail_sum(cn)

    points = []
    for target in grid:
        beta_norm = math.sqrt(target * noise_norm_sq)
        cfg = replace(base_config, beta_norm=beta_norm, beta_values=None)
        result = run_experiment(cfg, threads=threads)
        diag = result.diagnostics
        if diag.regime is None:
            raise ValueError(
                "scan requires a finite effective-rank index; adjust the constants"
            )
        points.append(
            ScanPoint(
                snr_target=target,
                beta_norm=beta_norm,
                regime=diag.regime,
                snr_threshold=diag.snr_threshold,
                snr_threshold_cn=1.0 / r_cn,
                result=result,
            )
        )
    return points


@dataclass(frozen=True, eq=False)
class CertificateStudy:
    """Empirical frequency of sigma_min >= sqrt(r_kstar)/4 plus histogram data."""

    k_star: int
    r_kstar: float
    threshold: float
    trials: int
    pass_rate: float
    sigma_min: tuple
    hist_edges: tuple  # bins of sigma_min / sqrt(r_kstar)
    hist_counts: tuple


def certificate_study(
    spectrum, n: int, c0: float, trials: int, seed: int, bins: int = 20
) -> CertificateStudy:
    """Monte Carlo frequency of the smallest-singular-value certificate."""
    if not (isinstance(trials, int) and trials >= 1):
        raise ValueError(f"trials must be a positive integer, got {trials!r}")
    cov = spectrum if isinstance(spectrum, CovarianceModel) else CovarianceModel(spectrum)
    ks = effective_rank_index(cov.spectrum, n, c0)
    if math.isinf(ks):
        raise ValueError(
            "effective-rank index is infinite: the certificate threshold is undefined"
        )
    r_kstar = cov.spectrum.tail_sum(ks)
    sqrt_rk = math.sqrt(r_kstar)
    threshold = _CERT_FACTOR * sqrt_rk
    sigma_mins = np.empty(trials)
    for t in range(trials):
        design = sample_design(cov, n, trial_rng(seed, t))
        sigma_mins[t] = smallest_singular_value(design)
    rate = float(np.mean(sigma_mins >= threshold))
    ratios = sigma_mins / sqrt_rk
    hi = max(1.0, float(np.max(ratios)))
    edges = np.linspace(0.0, hi, bins + 1)
    counts, _ = np.histogram(ratios, bins=edges)
    return CertificateStudy(
        k_star=ks,
        r_kstar=r_kstar,
        threshold=threshold,
        trials=trials,
        pass_rate=rate,
        sigma_min=tuple(float(v) for v in sigma_mins),
        hist_edges=tuple(float(e) for e in edges),
        hist_counts=tuple(int(c) for c in counts),
    )


@dataclass(frozen=True, eq=False)
class LowerBoundStudy:
    """Distribution of pred_error / (||xi||^2 / (n ∧ k_bar)) across trials."""

    denominator_index: int  # n ∧ k_bar
    floor: float
    ratios: tuple
    flagged: tuple  # trial indices with ratio below the floor
    aggregates: dict
    out_of_hypothesis: str | None
    result: ExperimentResult


def lower_bound_study(
    config: ExperimentConfig, floor: float = 0.01, threads: int = 1
) -> LowerBoundStudy:
    """Noise-limited lower-bound study.

    Refuses design-dependent noise (the hypothesis requires rows i.i.d.
    Gaussian conditionally on the noise).  A run outside the low-SNR
    regime still executes but is tagged out-of-hypothesis.
    """
    if isinstance(config.noise_model, ZeroNoise):
        raise ValueError("lower-bound study undefined for zero noise")
    if not conditional_independence_tag(config.noise_model):
        raise ValueError(
            "lower-bound study refused: noise depends on the design, so rows "
            "conditionally on the noise are not i.i.d. Gaussian"
        )
    result = run_experiment(config, threads=threads)
    diag = result.diagnostics
    if diag.k_bar is None:
        raise ValueError(
            "lower-bound study requires a finite effective-rank index; "
            "adjust the constants"
        )
    denom_idx = min(config.n, diag.k_bar)
    ratios = tuple(
        (r.pred_error / (r.xi_norm_sq / denom_idx)) if r.xi_norm_sq > 0 else math.inf
        for r in result.records
    )
    flagged = tuple(
        r.trial_index for r, ratio in zip(result.records, ratios) if ratio < floor
    )
    warning = None
    if diag.regime == REGIME_HIGH:
        warning = (
            "signal-to-noise ratio above threshold: outside the low-SNR "
            "hypothesis; results are tagged, not guaranteed"
        )
    return LowerBoundStudy(
        denominator_index=denom_idx,
        floor=floor,
        ratios=ratios,
        flagged=flagged,
        aggregates=_aggregate(np.array(ratios)),
        out_of_hypothesis=warning,
        result=result,
    )


def config_to_dict(config: ExperimentConfig) -> dict:
    """Fully-resolved config echo, sufficient to re-run bit-identically.

    Deliberately excludes the worker count: results do not depend on it,
    and output files must be identical at any thread count.
    """
    if config.spectrum_spec is not None:
        spectrum = dict(config.spectrum_spec)
    else:
        spectrum = {
            "type": "values",
            "values": [float(v) for v in config.covariance.spectrum.values],
        }
    echo = {
        "schema": 1,
        "spectrum": spectrum,
        "n": config.n,
        "beta_norm": config.beta_norm,
        "beta_direction": config.beta_direction,
        "noise": noise_to_dict(config.noise_model),
        "trials": config.trials,
        "seed": config.seed,
        "constants": config.constants.to_dict(),
        "checks": sorted(config.checks),
        "rel_tol": config.rel_tol,
    }
    if config.beta_values is not None:
        echo["beta_values"] = [float(v) for v in config.beta_values]
    if config.covariance.rotation is not None:
        echo["rotation"] = [[float(v) for v in row] for row in config.covariance.rotation]
    return echo


def result_to_dict(result: ExperimentResult) -> dict:
    """Full JSON-ready view of an experiment result."""
    return {
        "config": result.config_echo,
        "diagnostics": result.diagnostics.to_dict(),
        "aggregates": result.aggregates,
        "rates": result.rates,
        "skipped": result.skipped,
        "records": [
            {
                "trial_index": r.trial_index,
                "xi_norm_sq": r.xi_norm_sq,
                "pred_error": r.pred_error,
                "est_error": r.est_error,
                "sigma_min": r.sigma_min,
                "deviation": r.deviation,
                "identity_residual": r.identity_residual,
                "certificate_pass": r.certificate_pass,
                "est_bound_pass": r.est_bound_pass,
            }
            for r in result.records
        ],
    }


def record_csv_header(extra=()) -> list:
    return list(extra) + [
        "trial_index",
        "xi_norm_sq",
        "pred_error",
        "est_error",
        "sigma_min",
        "deviation",
        "identity_residual",
        "certificate_pass",
        "est_bound_pass",
    ]


def record_csv_row(r: TrialRecord, extra=()) -> list:
    return list(extra) + [
        r.trial_index,
        r.xi_norm_sq,
        r.pred_error,
        r.est_error,
        r.sigma_min,
        r.deviation,
        r.identity_residual,
        r.certificate_pass,
        r.est_bound_pass,
    ]
