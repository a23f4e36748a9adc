"""Noise models: realization, independence tags, serialization."""

import math

import numpy as np
import pytest

from ridgeless.design import DesignMatrix, sample_design, trial_rng
from ridgeless.noise import (
    FIRST_COORDINATE,
    UNIFORM,
    WORST_SINGULAR,
    DeterministicNoise,
    GaussianNoise,
    ModelResidualNoise,
    ScaledDirectionNoise,
    StudentTNoise,
    ZeroNoise,
    conditional_independence_tag,
    noise_from_dict,
    noise_to_dict,
    realize_noise,
)
from ridgeless.spectra import CovarianceModel, make_flat_spectrum


def small_design(seed=0, n=4, p=9):
    cov = CovarianceModel(make_flat_spectrum(p, 1.0))
    return sample_design(cov, n, trial_rng(seed, 0))


def tall_placeholder(n):
    # realization target for models that only read design.n
    return DesignMatrix(np.zeros((n, 1)), override=True)


# ---------------------------------------------------------------------------
# realization


def test_zero_noise():
    xi = realize_noise(ZeroNoise(), small_design(), None, trial_rng(0, 0))
    assert np.all(xi == 0.0) and xi.shape == (4,)


def test_gaussian_scales_exactly():
    x = small_design()
    a = realize_noise(GaussianNoise(sigma=1.0), x, None, trial_rng(5, 1))
    b = realize_noise(GaussianNoise(sigma=2.5), x, None, trial_rng(5, 1))
    assert np.array_equal(b, 2.5 * a)


def test_gaussian_moment():
    xi = realize_noise(
        GaussianNoise(sigma=1.0), tall_placeholder(100_000), None, trial_rng(11, 0)
    )
    assert float(xi @ xi) / 100_000 == pytest.approx(1.0, rel=0.03)


def test_student_scales_exactly():
    x = small_design()
    a = realize_noise(StudentTNoise(df=2.0, scale=1.0), x, None, trial_rng(6, 2))
    b = realize_noise(StudentTNoise(df=2.0, scale=3.0), x, None, trial_rng(6, 2))
    assert np.array_equal(b, 3.0 * a)


def test_deterministic_copies_values():
    model = DeterministicNoise(values=np.array([1.0, -2.0, 3.0, 0.0]))
    xi = realize_noise(model, small_design(), None, trial_rng(0, 0))
    assert np.array_equal(xi, [1.0, -2.0, 3.0, 0.0])
    xi[0] = 99.0  # returned vector is a private copy
    assert model.values[0] == 1.0


def test_deterministic_length_mismatch():
    with pytest.raises(ValueError):
        realize_noise(
            DeterministicNoise(values=np.ones(3)), small_design(), None, trial_rng(0, 0)
        )


@pytest.mark.parametrize("direction", [WORST_SINGULAR, FIRST_COORDINATE, UNIFORM])
def test_scaled_direction_norm(direction):
    model = ScaledDirectionNoise(target_norm=2.5, direction=direction)
    xi = realize_noise(model, small_design(), None, trial_rng(0, 0))
    assert np.linalg.norm(xi) == pytest.approx(2.5, rel=1e-12)


def test_first_coordinate_direction():
    model = ScaledDirectionNoise(target_norm=3.0, direction=FIRST_COORDINATE)
    xi = realize_noise(model, small_design(), None, trial_rng(0, 0))
    assert np.array_equal(xi, [3.0, 0.0, 0.0, 0.0])


def test_uniform_direction():
    model = ScaledDirectionNoise(target_norm=4.0, direction=UNIFORM)
    xi = realize_noise(model, small_design(), None, trial_rng(0, 0))
    assert xi == pytest.approx(np.full(4, 2.0), rel=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_worst_singular_saturates_pseudo_inverse(seed):
    # ||X^+ xi|| = target / sigma_n: the adversarial direction maps to the
    # weakest right singular vector over sigma_n
    x = small_design(seed=seed)
    target = 1.75
    xi = realize_noise(
        ScaledDirectionNoise(target_norm=target, direction=WORST_SINGULAR),
        x, None, trial_rng(0, 0),
    )
    sv = np.linalg.svd(x.entries, compute_uv=False)
    want = target / sv[-1]
    assert np.linalg.norm(np.linalg.pinv(x.entries) @ xi) == pytest.approx(want, rel=1e-8)


def test_model_residual():
    x = small_design()
    beta = np.arange(9.0) / 10.0
    f = np.array([1.0, 2.0, 3.0, 4.0])
    xi = realize_noise(ModelResidualNoise(f_values=f), x, beta, trial_rng(0, 0))
    assert xi == pytest.approx(f - x.entries @ beta, rel=1e-14)
    # and targets X beta + xi recover f exactly
    assert x.entries @ beta + xi == pytest.approx(f, rel=1e-12)


def test_model_residual_shape_checks():
    x = small_design()
    with pytest.raises(ValueError):
        realize_noise(ModelResidualNoise(f_values=np.ones(3)), x, np.zeros(9), trial_rng(0, 0))
    with pytest.raises(ValueError):
        realize_noise(ModelResidualNoise(f_values=np.ones(4)), x, np.zeros(2), trial_rng(0, 0))


# ---------------------------------------------------------------------------
# validation


def test_parameter_validation():
    with pytest.raises(ValueError):
        GaussianNoise(sigma=0.0)
    with pytest.raises(ValueError):
        StudentTNoise(df=0.0, scale=1.0)
    with pytest.raises(ValueError):
        StudentTNoise(df=3.0, scale=-1.0)
    with pytest.raises(ValueError):
        ScaledDirectionNoise(target_norm=-1.0)
    with pytest.raises(ValueError):
        ScaledDirectionNoise(target_norm=1.0, direction="sideways")
    with pytest.raises(ValueError):
        DeterministicNoise(values=np.array([1.0, math.nan]))
    StudentTNoise(df=2.0, scale=1.0)  # infinite variance is allowed
    ScaledDirectionNoise(target_norm=0.0)  # zero norm is allowed


# ---------------------------------------------------------------------------
# independence tag


def test_independence_tags():
    independent = [
        ZeroNoise(),
        GaussianNoise(sigma=1.0),
        StudentTNoise(df=2.0, scale=1.0),
        DeterministicNoise(values=np.ones(3)),
        ScaledDirectionNoise(target_norm=1.0, direction=FIRST_COORDINATE),
        ScaledDirectionNoise(target_norm=1.0, direction=UNIFORM),
    ]
    for model in independent:
        assert conditional_independence_tag(model) is True
    dependent = [
        ScaledDirectionNoise(target_norm=1.0, direction=WORST_SINGULAR),
        ModelResidualNoise(f_values=np.ones(3)),
    ]
    for model in dependent:
        assert conditional_independence_tag(model) is False


# ---------------------------------------------------------------------------
# serialization


@pytest.mark.parametrize(
    "model",
    [
        ZeroNoise(),
        GaussianNoise(sigma=0.5),
        StudentTNoise(df=2.0, scale=1.5),
        DeterministicNoise(values=np.array([1.0, -2.0])),
        ScaledDirectionNoise(target_norm=3.0, direction=WORST_SINGULAR),
        ScaledDirectionNoise(target_norm=1.0, direction=UNIFORM),
        ModelResidualNoise(f_values=np.array([0.5, 0.25])),
    ],
)
def test_dict_round_trip(model):
    back = noise_from_dict(noise_to_dict(model))
    assert type(back) is type(model)
    assert noise_to_dict(back) == noise_to_dict(model)


def test_from_dict_errors():
    with pytest.raises(ValueError):
        noise_from_dict({"type": "pink"})
    with pytest.raises(ValueError):
        noise_from_dict({"type": "gaussian"})  # missing sigma
    with pytest.raises(ValueError):
        noise_from_dict({"type": "gaussian", "sigma": 1.0, "mean": 0.0})
    with pytest.raises(ValueError):
        noise_from_dict({"sigma": 1.0})
    with pytest.raises(ValueError):
        noise_from_dict("gaussian")


def test_vector_from_file(tmp_path):
    path = tmp_path / "noise.txt"
    path.write_text("# header comment\n3.0, 1.0\n2.0\n", encoding="utf-8")
    model = noise_from_dict({"type": "deterministic", "values": str(path)})
    assert np.array_equal(model.values, [3.0, 1.0, 2.0])  # order preserved


def test_vector_file_errors(tmp_path):
    empty = tmp_path / "empty.txt"
    empty.write_text("# nothing\n", encoding="utf-8")
    with pytest.raises(ValueError):
        noise_from_dict({"type": "deterministic", "values": str(empty)})
    bad = tmp_path / "bad.txt"
    bad.write_text("1.0 oops\n", encoding="utf-8")
    with pytest.raises(ValueError):
        noise_from_dict({"type": "model_residual", "f_values": str(bad)})
