"""Noise models for the regression targets.

The bounds verified by this package place no assumption on the noise:
it may be zero, random with any distribution (including heavy tails
with infinite variance), a fixed vector, aligned with the design's
weakest singular direction (the adversarial stress case, which
saturates the pseudo-inverse norm), or the residual of an arbitrary
prediction target.  Models whose realization depends on the sampled
design are flagged by conditional_independence_tag so that lower-bound
checks, whose hypothesis needs design rows independent of the noise,
can be skipped rather than silently misapplied.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .design import DesignMatrix

__all__ = [
    "ZeroNoise",
    "GaussianNoise",
    "StudentTNoise",
    "DeterministicNoise",
    "ScaledDirectionNoise",
    "ModelResidualNoise",
    "NoiseModel",
    "WORST_SINGULAR",
    "FIRST_COORDINATE",
    "UNIFORM",
    "realize_noise",
    "conditional_independence_tag",
    "noise_to_dict",
    "noise_from_dict",
]

WORST_SINGULAR = "worst_singular"
FIRST_COORDINATE = "first_coordinate"
UNIFORM = "uniform"
_DIRECTIONS = (WORST_SINGULAR, FIRST_COORDINATE, UNIFORM)


@dataclass(frozen=True)
class ZeroNoise:
    """No noise: the targets are exactly X beta*."""


@dataclass(frozen=True)
class GaussianNoise:
    """i.i.d. N(0, sigma^2) entries."""

    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma!r}")


@dataclass(frozen=True)
class StudentTNoise:
    """i.i.d. scaled Student-t entries.

    df <= 2 (infinite variance) is allowed: the verified bounds depend
    only on the realized noise norm, which reports always carry.
    """

    df: float
    scale: float

    def __post_init__(self):
        if not self.df > 0:
            raise ValueError(f"df must be positive, got {self.df!r}")
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale!r}")


@dataclass(frozen=True, eq=False)
class DeterministicNoise:
    """A fixed vector, independent of the design."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("values must be a non-empty 1-d vector")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class ScaledDirectionNoise:
    """A unit direction scaled to a fixed norm.

    worst_singular: the left singular vector of the design for its
    smallest singular value; among all noise of this norm it maximizes
    the pseudo-inverse image norm, making it the canonical adversarial
    stress case.  first_coordinate and uniform are fixed directions that
    do not look at the design.
    """

    target_norm: float
    direction: str = WORST_SINGULAR

    def __post_init__(self):
        if self.target_norm < 0:
            raise ValueError(f"target_norm must be non-negative, got {self.target_norm!r}")
        if self.direction not in _DIRECTIONS:
            raise ValueError(
                f"direction must be one of {_DIRECTIONS}, got {self.direction!r}"
            )


@dataclass(frozen=True, eq=False)
class ModelResidualNoise:
    """Noise making the targets equal an external predictor's values: xi_i = f_i - <X_i, beta*>."""

    f_values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.f_values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("f_values must be a non-empty 1-d vector")
        if not np.all(np.isfinite(v)):
            raise ValueError("f_values must be finite")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "f_values", v)


NoiseModel = Union[
    ZeroNoise,
    GaussianNoise,
    StudentTNoise,
    DeterministicNoise,
    ScaledDirectionNoise,
    ModelResidualNoise,
]


def realize_noise(
    model: NoiseModel,
    design: DesignMatrix,
    beta_star,
    rng: np.random.Generator,
) -> np.ndarray:
    """The length-n noise vector for one trial."""
    n = design.n
    if isinstance(model, ZeroNoise):
        return np.zeros(n)
    if isinstance(model, GaussianNoise):
        return model.sigma * rng.standard_normal(n)
    if isinstance(model, StudentTNoise):
        return model.scale * rng.standard_t(model.df, size=n)
    if isinstance(model, DeterministicNoise):
        if model.values.size != n:
            raise ValueError(
                f"deterministic noise has length {model.values.size}, expected n={n}"
            )
        return model.values.copy()
    if isinstance(model, ModelResidualNoise):
        if model.f_values.size != n:
            raise ValueError(
                f"residual noise targets have length {model.f_values.size}, expected n={n}"
            )
        b = np.asarray(beta_star, dtype=float)
        if b.shape != (design.p,):
            raise ValueError(f"beta_star must have shape ({design.p},), got {b.shape}")
        return model.f_values - design.entries @ b
    if isinstance(model, ScaledDirectionNoise):
        if model.direction == FIRST_COORDINATE:
            xi = np.zeros(n)
            xi[0] = model.target_norm
            return xi
        if model.direction == UNIFORM:
            return np.full(n, model.target_norm / np.sqrt(n))
        # worst_singular: left singular vector for the smallest singular value
        u, _, _ = np.linalg.svd(design.entries, full_matrices=False)
        return model.target_norm * u[:, -1]
    raise TypeError(f"unknown noise model {type(model).__name__}")


def conditional_independence_tag(model: NoiseModel) -> bool:
    """True when the design is sampled independently of the noise.

    Then, conditionally on the noise, the rows are still i.i.d. Gaussian
    with the model covariance, the hypothesis behind lower-bound checks.
    The design-aligned (worst_singular) and residual models fail it.
    """
    if isinstance(model, (ZeroNoise, GaussianNoise, StudentTNoise, DeterministicNoise)):
        return True
    if isinstance(model, ScaledDirectionNoise):
        return model.direction != WORST_SINGULAR
    if isinstance(model, ModelResidualNoise):
        return False
    raise TypeError(f"unknown noise model {type(model).__name__}")


def _load_vector(path) -> np.ndarray:
    """Whitespace/comma-separated numbers, order preserved, '#' comments allowed."""
    entries = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        for token in line.replace(",", " ").split():
            try:
                entries.append(float(token))
            except ValueError:
                raise ValueError(f"cannot parse vector entry {token!r}") from None
    if not entries:
        raise ValueError(f"empty vector file: {path}")
    return np.array(entries)


def noise_to_dict(model: NoiseModel) -> dict:
    """JSON-ready description of a noise model ({"type": ..., parameters...})."""
    if isinstance(model, ZeroNoise):
        return {"type": "zero"}
    if isinstance(model, GaussianNoise):
        return {"type": "gaussian", "sigma": model.sigma}
    if isinstance(model, StudentTNoise):
        return {"type": "student", "df": model.df, "scale": model.scale}
    if isinstance(model, DeterministicNoise):
        return {"type": "deterministic", "values": [float(v) for v in model.values]}
    if isinstance(model, ScaledDirectionNoise):
        return {
            "type": "scaled_direction",
            "target_norm": model.target_norm,
            "direction": model.direction,
        }
    if isinstance(model, ModelResidualNoise):
        return {
            "type": "model_residual",
            "f_values": [float(v) for v in model.f_values],
        }
    raise TypeError(f"unknown noise model {type(model).__name__}")


def noise_from_dict(d: dict) -> NoiseModel:
    """Inverse of noise_to_dict.

    For the deterministic and model_residual types the vector field may
    be an inline array or a string path to a text file of numbers.
    """
    if not isinstance(d, dict) or "type" not in d:
        raise ValueError(f"noise spec must be an object with a 'type' key, got {d!r}")
    kind = d["type"]
    extra = set(d) - {"type"}

    def expect(*keys):
        unknown = extra - set(keys)
        if unknown:
            raise ValueError(f"unknown keys for noise type {kind!r}: {sorted(unknown)}")
        missing = set(keys) - extra
        if missing:
            raise ValueError(f"missing keys for noise type {kind!r}: {sorted(missing)}")

    if kind == "zero":
        expect()
        return ZeroNoise()
    if kind == "gaussian":
        expect("sigma")
        return GaussianNoise(sigma=float(d["sigma"]))
    if kind == "student":
        expect("df", "scale")
        return StudentTNoise(df=float(d["df"]), scale=float(d["scale"]))
    if kind == "deterministic":
        expect("values")
        return DeterministicNoise(values=_vector_or_file(d["values"]))
    if kind == "scaled_direction":
        expect("target_norm", "direction")
        return ScaledDirectionNoise(
            target_norm=float(d["target_norm"]), direction=str(d["direction"])
        )
    if kind == "model_residual":
        expect("f_values")
        return ModelResidualNoise(f_values=_vector_or_file(d["f_values"]))
    raise ValueError(f"unknown noise type {kind!r}")


def _vector_or_file(value) -> np.ndarray:
    if isinstance(value, str):
        return _load_vector(value)
    return np.asarray(value, dtype=float)
