"""Gaussian design sampling and the minimum-norm interpolating fit.

Designs have i.i.d. centered Gaussian rows with covariance given by a
CovarianceModel.  Sampling is reproducible by construction: the
generator for trial t of a seeded run is a pure function of (seed, t)
(numpy SeedSequence with spawn_key), so results do not depend on
execution order or worker count.

The fit is the minimum Euclidean-norm solution of X beta = Y, computed
from a thin SVD of the n x p design; singular values below rel_tol
times the largest are treated as zero.  The high-dimensional regime
p >= n is enforced on construction; p < n is allowed only behind an
explicit override, used by low-dimensional oracle tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectra import CovarianceModel

__all__ = [
    "DesignMatrix",
    "FitResult",
    "trial_rng",
    "sample_design",
    "min_norm_fit",
    "smallest_singular_value",
    "prediction_error",
    "estimation_error",
    "deviation_term",
]


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    """Independent generator for one trial, a pure function of (seed, trial_index).

    Derivation: SeedSequence(entropy=seed, spawn_key=(trial_index,)) feeding
    PCG64.  Identical inputs give bit-identical streams on every platform,
    thread count, and execution order.
    """
    if not (isinstance(seed, int) and 0 <= seed < 2**64):
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    if not (isinstance(trial_index, int) and trial_index >= 0):
        raise ValueError(f"trial_index must be a non-negative integer, got {trial_index!r}")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(trial_index,))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """n x p design with one observation per row."""

    entries: np.ndarray
    override: bool = False  # permit p < n, for low-dimensional oracle tests only

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2:
            raise ValueError(f"entries must be a 2-d array, got shape {a.shape}")
        n, p = a.shape
        if n < 1 or p < 1:
            raise ValueError(f"design must be non-empty, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("design entries must be finite")
        if p < n and not self.override:
            raise ValueError(
                f"low-dimensional design (p={p} < n={n}) requires override=True"
            )
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return int(self.entries.shape[0])

    @property
    def p(self) -> int:
        return int(self.entries.shape[1])


def sample_design(cov: CovarianceModel, n: int, rng: np.random.Generator) -> DesignMatrix:
    """n i.i.d. Gaussian rows with covariance cov.

    Drawn as G diag(sqrt(lambda)) (then rotated into the eigenbasis when
    one is supplied) with G standard Gaussian.  The covariance must have
    rank at least n so that an interpolating fit exists almost surely.
    """
    if not n >= 1:
        raise ValueError(f"n must be >= 1, got {n!r}")
    rank = cov.spectrum.rank()
    if rank < n:
        raise ValueError(
            f"covariance rank {rank} is below the sample count n={n}: "
            "interpolation is impossible"
        )
    g = rng.standard_normal((n, cov.p))
    x = g * np.sqrt(cov.spectrum.values)
    if cov.rotation is not None:
        x = x @ cov.rotation.T
    return DesignMatrix(x)


@dataclass(frozen=True, eq=False)
class FitResult:
    """Minimum-norm least-squares fit of X beta = Y.

    sigma_min is the smallest singular value retained by the rank cutoff;
    rank < n means exact interpolation was impossible and residual_norm
    reports the remaining gap.
    """

    beta_hat: np.ndarray
    rank: int
    sigma_min: float
    residual_norm: float


def min_norm_fit(design: DesignMatrix, targets, rel_tol: float = 1e-10) -> FitResult:
    """Minimum Euclidean-norm solution of X beta = Y via thin SVD.

    Singular values below rel_tol * sigma_max are treated as zero.  The
    decomposition is thin (cost ~ n^2 p), so p-dimensional objects are
    never formed.
    """
    if not rel_tol > 0:
        raise ValueError(f"rel_tol must be positive, got {rel_tol!r}")
    y = np.asarray(targets, dtype=float)
    if y.shape != (design.n,):
        raise ValueError(f"targets must have shape ({design.n},), got {y.shape}")
    u, sv, vt = np.linalg.svd(design.entries, full_matrices=False)
    cut = rel_tol * float(sv[0])
    keep = sv > cut
    rank = int(np.count_nonzero(keep))
    if rank == 0:
        beta = np.zeros(design.p)
        sigma_min = 0.0
    else:
        sk = sv[:rank]
        beta = vt[:rank].T @ ((u[:, :rank].T @ y) / sk)
        sigma_min = float(sk[-1])
    residual = float(np.linalg.norm(design.entries @ beta - y))
    return FitResult(beta_hat=beta, rank=rank, sigma_min=sigma_min, residual_norm=residual)


def smallest_singular_value(design: DesignMatrix) -> float:
    """Smallest singular value of the design (the n-th when n <= p)."""
    sv = np.linalg.svd(design.entries, compute_uv=False)
    return float(sv[-1])


def prediction_error(cov: CovarianceModel, beta_hat, beta_star) -> float:
    """Squared prediction gap Delta^T Sigma Delta at a fresh Gaussian point.

    Evaluated in the eigenbasis as sum_i lambda_i d_i^2, a sum of
    non-negative terms, so the result is non-negative to rounding.
    """
    d = _delta(cov.p, beta_hat, beta_star)
    if cov.rotation is not None:
        d = cov.rotation.T @ d
    return float(math.fsum(map(float, cov.spectrum.values * d * d)))


def estimation_error(beta_hat, beta_star) -> float:
    """Squared Euclidean distance ||beta_hat - beta_star||^2."""
    a = np.asarray(beta_hat, dtype=float)
    b = np.asarray(beta_star, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"vectors must share one dimension, got {a.shape} and {b.shape}")
    d = a - b
    return float(math.fsum(map(float, d * d)))


def deviation_term(design: DesignMatrix, cov: CovarianceModel, beta_hat, beta_star) -> float:
    """Empirical-minus-population quadratic gap (1/n) sum_i <X_i, Delta>^2 - Delta^T Sigma Delta."""
    d = _delta(design.p, beta_hat, beta_star)
    xd = design.entries @ d
    empirical = float(xd @ xd) / design.n
    return empirical - prediction_error(cov, beta_hat, beta_star)


def _delta(p: int, beta_hat, beta_star) -> np.ndarray:
    a = np.asarray(beta_hat, dtype=float)
    b = np.asarray(beta_star, dtype=float)
    if a.shape != (p,) or b.shape != (p,):
        raise ValueError(
            f"coefficient vectors must have shape ({p},), got {a.shape} and {b.shape}"
        )
    return a - b


@dataclass(frozen=True, eq=False)
class RegressionInstance:
    """One fully-realized problem: targets = design @ beta_star + noise."""

    design: DesignMatrix
    targets: np.ndarray
    beta_star: np.ndarray
    noise: np.ndarray
    covariance: CovarianceModel
    seed: int

    def __post_init__(self):
        n, p = self.design.n, self.design.p
        for name, value, length in (
            ("targets", self.targets, n),
            ("beta_star", self.beta_star, p),
            ("noise", self.noise, n),
        ):
            arr = np.asarray(value, dtype=float)
            if arr.shape != (length,):
                raise ValueError(f"{name} must have shape ({length},), got {arr.shape}")
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.covariance.p != p:
            raise ValueError(
                f"covariance dimension {self.covariance.p} does not match design p={p}"
            )
        predicted = self.design.entries @ self.beta_star + self.noise
        scale = max(float(np.max(np.abs(self.targets))), 1.0)
        if float(np.max(np.abs(predicted - self.targets))) > 1e-12 * scale:
            raise ValueError("targets do not equal design @ beta_star + noise")


def dump_design(design: DesignMatrix) -> str:
    """Text dump: header line 'n p', then row-major whitespace-separated values."""
    lines = [f"{design.n} {design.p}\n"]
    for row in design.entries:
        lines.append(" ".join(f"{v:.17g}" for v in row) + "\n")
    return "".join(lines)


def parse_design(text: str, override: bool = False) -> DesignMatrix:
    """Inverse of dump_design; round-trips bit-exactly at 17 significant digits."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty design dump")
    header = lines[0].split()
    if len(header) != 2:
        raise ValueError(f"header must be 'n p', got {lines[0]!r}")
    n, p = int(header[0]), int(header[1])
    if len(lines) - 1 != n:
        raise ValueError(f"expected {n} rows, got {len(lines) - 1}")
    rows = []
    for ln in lines[1:]:
        row = [float(tok) for tok in ln.split()]
        if len(row) != p:
            raise ValueError(f"expected {p} columns, got {len(row)}")
        rows.append(row)
    return DesignMatrix(np.array(rows, dtype=float), override=override)
