"""Deterministic complexity diagnostics for minimum-norm interpolation.

Everything here is a pure function of a covariance spectrum, the sample
count n, the norms of the true coefficient vector and the realized
noise, and a handful of tunable absolute constants:

  - the effective-rank index: the first rank at which the spectral tail
    dominates its leading eigenvalue by a factor c0 * n;
  - the localization radius bounding the estimation error;
  - two complexity radii (upper and lower) balancing truncated spectral
    sums against the sample count and the noise budget;
  - the tail-halving index entering the noise-limited lower bound;
  - squared prediction-error bounds, SNR regime classification, the
    Gaussian-mean-width bound of the localized ellipsoid, and
    sub-exponential tail-bound helpers.

Infinite results are math.inf in memory; serializers render them as the
string "inf".
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectra import Spectrum

__all__ = [
    "Constants",
    "DiagnosticsReport",
    "REGIME_HIGH",
    "REGIME_LOW",
    "effective_rank_index",
    "localization_radius",
    "complexity_radius",
    "lower_radius",
    "tail_halving_index",
    "gaussian_width_bound",
    "prediction_bounds",
    "regime_bounds",
    "snr_and_regime",
    "subexp_tail_bound",
    "subexp_combine",
    "diagnose",
]

REGIME_HIGH = "HighSNR"
REGIME_LOW = "LowSNR"

# Relative slack when testing whether a closed-form candidate lies in its
# segment: a crossing landing exactly on a segment boundary must not be
# lost to rounding.
_SEGMENT_SLACK = 1e-12


@dataclass(frozen=True)
class Constants:
    """Tunable absolute constants entering the diagnostics.

    c0      threshold in the effective-rank index (r_k >= c0 * n * lambda_k)
    eta     slack in the upper complexity radius
    gamma   slack in the lower radius and the tail-halving index
    c3      multiplier on the noise-floor term of the prediction bounds
    c_frac  fraction of n giving the upper-rate tail index cn = floor(c_frac * n)
    """

    c0: float = 10.0
    eta: float = 0.05
    gamma: float = 0.5
    c3: float = 1.0
    c_frac: float = 0.5

    def __post_init__(self):
        for name in ("c0", "eta", "gamma", "c3", "c_frac"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive finite number, got {v!r}")
        if self.c_frac > 1:
            raise ValueError(f"c_frac must be in (0, 1], got {self.c_frac!r}")

    def cn(self, n: int) -> int:
        """Tail index used by the upper rate bound: floor(c_frac * n), minimum 1."""
        return max(1, math.floor(self.c_frac * n))

    def to_dict(self) -> dict:
        return {
            "c0": self.c0,
            "eta": self.eta,
            "gamma": self.gamma,
            "c3": self.c3,
            "c_frac": self.c_frac,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Constants":
        known = {"c0", "eta", "gamma", "c3", "c_frac"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown constants keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in d.items()})


def effective_rank_index(s: Spectrum, n: int, c0: float) -> int | float:
    """Smallest 1-based k with r_k(s) >= c0 * n * lambda_k; math.inf when none.

    Once a zero eigenvalue is reached the whole remaining tail is zero
    (the sequence is non-increasing), so the ratio is 0/0 and the scan
    can stop.
    """
    if not n >= 1:
        raise ValueError(f"n must be >= 1, got {n!r}")
    if not c0 > 0:
        raise ValueError(f"c0 must be positive, got {c0!r}")
    threshold = c0 * n
    for k in range(1, s.p + 1):
        lam = float(s.values[k - 1])
        if lam == 0.0:
            break
        if s.tail_sum(k) >= threshold * lam:
            return k
    return math.inf


def localization_radius(beta_star_norm: float, xi_norm: float, r_kstar: float) -> float:
    """Estimation-error radius ||beta*|| + 4 ||xi|| / sqrt(r_kstar)."""
    if not r_kstar > 0:
        raise ValueError(
            f"degenerate spectral tail: r_kstar must be positive, got {r_kstar!r}"
        )
    if beta_star_norm < 0 or xi_norm < 0:
        raise ValueError("norms must be non-negative")
    return beta_star_norm + 4.0 * xi_norm / math.sqrt(r_kstar)


def complexity_radius(s: Spectrum, n: int, eta: float) -> float:
    """Smallest r > 0 with sum_i min(lambda_i, r^2) <= eta * n * r^2; 0 if p <= eta*n.

    Piecewise closed form: on the segment [lambda_{j+1}, lambda_j] of r^2
    (exactly j eigenvalues >= r^2, with lambda_0 = +inf and
    lambda_{p+1} = 0) the constraint reads j r^2 + r_{j+1} <= eta n r^2,
    so the candidate is r^2 = r_{j+1} / (eta n - j), valid only for
    j < eta n.  The result is the smallest accepted candidate.
    """
    if not n >= 1:
        raise ValueError(f"n must be >= 1, got {n!r}")
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta!r}")
    p = s.p
    en = eta * n
    if p <= en:
        return 0.0
    vals = s.values
    best = math.inf
    for j in range(0, p + 1):
        if j >= en:
            break
        cand = s.tail_sum(j + 1) / (en - j)
        hi = math.inf if j == 0 else float(vals[j - 1])
        lo = 0.0 if j == p else float(vals[j])
        if cand < lo * (1.0 - _SEGMENT_SLACK) or cand > hi * (1.0 + _SEGMENT_SLACK):
            continue
        best = min(best, cand)
    if not math.isfinite(best):
        raise ArithmeticError("no feasible segment for the complexity radius")
    return math.sqrt(best)


def lower_radius(s: Spectrum, rho: float, xi_norm: float, gamma: float) -> float:
    """Largest r with sum_i min(lambda_i rho^2, r^2) <= gamma ||xi||^2.

    Returns math.inf when the constraint holds for every r (trace * rho^2
    <= gamma ||xi||^2) and 0.0 when xi_norm == 0 (no positive radius
    satisfies the constraint; the supremum of the empty set is 0 by
    convention).  Same segment structure as complexity_radius with
    mu_i = lambda_i rho^2.
    """
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho!r}")
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma!r}")
    if xi_norm < 0:
        raise ValueError(f"xi_norm must be non-negative, got {xi_norm!r}")
    if xi_norm == 0.0:
        return 0.0
    budget = gamma * xi_norm * xi_norm
    rho2 = rho * rho
    if s.trace * rho2 <= budget:
        return math.inf
    p = s.p
    vals = s.values
    best = 0.0
    for j in range(1, p + 1):
        cand = (budget - rho2 * s.tail_sum(j + 1)) / j
        if cand <= 0.0:
            continue
        hi = rho2 * float(vals[j - 1])
        lo = 0.0 if j == p else rho2 * float(vals[j])
        if cand < lo * (1.0 - _SEGMENT_SLACK) or cand > hi * (1.0 + _SEGMENT_SLACK):
            continue
        best = max(best, cand)
    if best == 0.0:
        raise ArithmeticError("no feasible segment for the lower radius")
    return math.sqrt(best)


def tail_halving_index(s: Spectrum, k_star: int, gamma: float) -> int:
    """First k >= k_star with r_k <= (gamma/2) r_{k_star}; p + 1 when none."""
    if not (isinstance(k_star, int) and 1 <= k_star <= s.p):
        raise ValueError(f"k_star must be an integer in [1, {s.p}], got {k_star!r}")
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma!r}")
    target = 0.5 * gamma * s.tail_sum(k_star)
    for k in range(k_star, s.p + 1):
        if s.tail_sum(k) <= target:
            return k
    return s.p + 1


def gaussian_width_bound(s: Spectrum, r: float, rho: float) -> float:
    """Mean-width bound sqrt(2 sum_i min(lambda_i rho^2, r^2)) of the localized ellipsoid."""
    if r < 0 or rho < 0:
        raise ValueError("r and rho must be non-negative")
    if r == 0.0 or rho == 0.0:
        return 0.0
    total = math.fsum(map(float, np.minimum(s.values * (rho * rho), r * r)))
    return math.sqrt(2.0 * total)


def prediction_bounds(
    rho: float, r_star: float, r_bar: float, xi_norm: float, n: int, c3: float
) -> tuple[float, float]:
    """Squared prediction-error envelope (upper, lower).

    upper = max((rho * r_star)^2, c3^2 ||xi||^2 / n)
    lower = min(r_bar^2,          c3^2 ||xi||^2 / n)

    An infinite r_bar leaves the noise floor as the lower bound.
    """
    if not n >= 1:
        raise ValueError(f"n must be >= 1, got {n!r}")
    for name, v in (("rho", rho), ("r_star", r_star), ("xi_norm", xi_norm), ("c3", c3)):
        if v < 0:
            raise ValueError(f"{name} must be non-negative, got {v!r}")
    noise_floor = (c3 * xi_norm) ** 2 / n
    upper = max((rho * r_star) ** 2, noise_floor)
    lower = noise_floor if math.isinf(r_bar) else min(r_bar * r_bar, noise_floor)
    return upper, lower


def regime_bounds(
    s: Spectrum,
    beta_star_norm: float,
    xi_norm: float,
    n: int,
    k_bar: int,
    constants: Constants,
) -> tuple[float, float]:
    """Squared rate bounds tied to the SNR regimes.

    upper = max(||beta*||^2 r_cn / n, ||xi||^2 / n) with cn = floor(c_frac n) (min 1)
    lower = c3 ||xi||^2 / min(n, k_bar)
    """
    if not n >= 1:
        raise ValueError(f"n must be >= 1, got {n!r}")
    if not (isinstance(k_bar, int) and k_bar >= 1):
        raise ValueError(f"k_bar must be a positive integer, got {k_bar!r}")
    cn = min(constants.cn(n), s.p)  # clamp: the tail sum needs a valid rank
    upper = max(beta_star_norm**2 * s.tail_sum(cn) / n, xi_norm**2 / n)
    lower = constants.c3 * xi_norm**2 / min(n, k_bar)
    return upper, lower


def snr_and_regime(
    beta_star_norm: float, xi_norm: float, s: Spectrum, k_star: int
) -> tuple[float, float, str]:
    """SNR = ||beta*||^2 / ||xi||^2, the threshold 1 / r_{k_star}, and the regime.

    HighSNR exactly when snr > threshold; xi_norm == 0 gives snr = inf.
    """
    if not (isinstance(k_star, int) and 1 <= k_star <= s.p):
        raise ValueError(
            "effective-rank index must be a finite integer in range; "
            f"got {k_star!r} (regime undefined when it is infinite)"
        )
    threshold = 1.0 / s.tail_sum(k_star)
    snr = math.inf if xi_norm == 0.0 else (beta_star_norm / xi_norm) ** 2
    regime = REGIME_HIGH if snr > threshold else REGIME_LOW
    return snr, threshold, regime


def subexp_tail_bound(nu: float, b: float, t: float) -> float:
    """Two-regime sub-exponential tail bound, clamped to 1.

    2 exp(-t^2 / (2 nu^2)) for 0 < t <= nu^2 / b, else 2 exp(-t / (2 b)).
    The branches agree at t = nu^2 / b, where both give 2 exp(-nu^2 / (2 b^2)).
    """
    for name, v in (("nu", nu), ("b", b), ("t", t)):
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v!r}")
    if t <= nu * nu / b:
        raw = 2.0 * math.exp(-t * t / (2.0 * nu * nu))
    else:
        raw = 2.0 * math.exp(-t / (2.0 * b))
    return min(1.0, raw)


def subexp_combine(params) -> tuple[float, float]:
    """Combine independent (nu_i, b_i) sub-exponential parameters.

    The sum of independent variables with parameters (nu_i, b_i) has
    parameters (sqrt(sum nu_i^2), max b_i).
    """
    params = list(params)
    if not params:
        raise ValueError("empty parameter sequence")
    for nu, b in params:
        if not (nu > 0 and b > 0):
            raise ValueError(f"parameters must be positive, got ({nu!r}, {b!r})")
    nu_total = math.sqrt(math.fsum(nu * nu for nu, _ in params))
    b_total = max(b for _, b in params)
    return nu_total, b_total


@dataclass(frozen=True)
class DiagnosticsReport:
    """Every deterministic bound ingredient for one (spectrum, n, norms, constants).

    Fields mirror the serialized JSON names exactly.  k_star is math.inf
    when no rank qualifies; the fields that then cannot be computed are
    None and `error` explains why.  k_bar = p + 1 means the tail never
    halves at the configured gamma.
    """

    n: int
    p: int
    beta_star_norm: float
    xi_norm: float
    trace: float
    k_star: int | float
    r_kstar: float | None
    rho: float | None
    r_star: float
    r_bar: float | None
    k_bar: int | None
    snr: float | None
    snr_threshold: float | None
    regime: str | None
    upper_bound: float | None
    lower_bound: float | None
    corollary_upper: float | None
    corollary_lower: float | None
    constants: Constants
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "p": self.p,
            "beta_star_norm": self.beta_star_norm,
            "xi_norm": self.xi_norm,
            "trace": self.trace,
            "k_star": self.k_star,
            "r_kstar": self.r_kstar,
            "rho": self.rho,
            "r_star": self.r_star,
            "r_bar": self.r_bar,
            "k_bar": self.k_bar,
            "snr": self.snr,
            "snr_threshold": self.snr_threshold,
            "regime": self.regime,
            "upper_bound": self.upper_bound,
            "lower_bound": self.lower_bound,
            "corollary_upper": self.corollary_upper,
            "corollary_lower": self.corollary_lower,
            "constants": self.constants.to_dict(),
            "error": self.error,
        }


def diagnose(
    s: Spectrum,
    n: int,
    beta_star_norm: float,
    xi_norm: float,
    constants: Constants = Constants(),
) -> DiagnosticsReport:
    """Full diagnostics report, computed in dependency order.

    effective-rank index -> its tail sum -> localization radius -> the
    two complexity radii and the tail-halving index -> bounds -> regime.
    An infinite effective-rank index yields a report with only the
    spectrum-level fields (trace, complexity radius) filled and `error`
    set; callers surface that as degenerate rather than raising.
    """
    if beta_star_norm < 0 or xi_norm < 0:
        raise ValueError("norms must be non-negative")
    ks = effective_rank_index(s, n, constants.c0)
    r_star_val = complexity_radius(s, n, constants.eta)
    base = dict(
        n=n,
        p=s.p,
        beta_star_norm=beta_star_norm,
        xi_norm=xi_norm,
        trace=s.trace,
        r_star=r_star_val,
        constants=constants,
    )
    if math.isinf(ks):
        return DiagnosticsReport(
            k_star=math.inf,
            r_kstar=None,
            rho=None,
            r_bar=None,
            k_bar=None,
            snr=None,
            snr_threshold=None,
            regime=None,
            upper_bound=None,
            lower_bound=None,
            corollary_upper=None,
            corollary_lower=None,
            error=(
                "effective-rank index is infinite: no rank k has "
                f"r_k >= c0 * n * lambda_k (c0={constants.c0}, n={n})"
            ),
            **base,
        )
    r_kstar = s.tail_sum(ks)
    rho = localization_radius(beta_star_norm, xi_norm, r_kstar)
    if xi_norm == 0.0:
        r_bar_val = 0.0  # supremum of the empty constraint set, by convention
    else:
        r_bar_val = lower_radius(s, rho, xi_norm, constants.gamma)
    k_bar_val = tail_halving_index(s, ks, constants.gamma)
    upper, lower = prediction_bounds(
        rho, r_star_val, r_bar_val, xi_norm, n, constants.c3
    )
    cor_upper, cor_lower = regime_bounds(
        s, beta_star_norm, xi_norm, n, k_bar_val, constants
    )
    snr, threshold, regime = snr_and_regime(beta_star_norm, xi_norm, s, ks)
    return DiagnosticsReport(
        k_star=ks,
        r_kstar=r_kstar,
        rho=rho,
        r_bar=r_bar_val,
        k_bar=k_bar_val,
        snr=snr,
        snr_threshold=threshold,
        regime=regime,
        upper_bound=upper,
        lower_bound=lower,
        corollary_upper=cor_upper,
        corollary_lower=cor_lower,
        error=None,
        **base,
    )
