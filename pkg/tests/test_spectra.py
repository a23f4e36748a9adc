"""Spectrum construction, tail sums, parsing, covariance models."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from ridgeless.spectra import (
    CovarianceModel,
    Spectrum,
    load_spectrum,
    make_exp_floor_spectrum,
    make_flat_spectrum,
    make_three_level_spectrum,
    parse_spectrum,
    tail_sum,
)


def sorted_values(min_size=1, max_size=60):
    return st.lists(
        st.floats(min_value=1e-9, max_value=1e6), min_size=min_size, max_size=max_size
    ).map(lambda v: np.sort(np.asarray(v, dtype=float))[::-1].copy())


# ---------------------------------------------------------------------------
# builders


def test_flat_examples():
    assert list(make_flat_spectrum(3, 1.0).values) == [1.0, 1.0, 1.0]
    assert list(make_flat_spectrum(1, 2.5).values) == [2.5]
    assert make_flat_spectrum(10, 1.0).tail_sum(3) == 8.0


@pytest.mark.parametrize("p,value", [(0, 1.0), (3, 0.0), (3, -1.0)])
def test_flat_rejects(p, value):
    with pytest.raises(ValueError):
        make_flat_spectrum(p, value)


def test_exp_floor_examples():
    s = make_exp_floor_spectrum(2, 1.0, 0.1)
    assert s.values[0] == pytest.approx(math.exp(-1) + 0.1, abs=1e-12)
    assert s.values[1] == pytest.approx(math.exp(-2) + 0.1, abs=1e-12)
    assert s.values[0] == pytest.approx(0.46788, abs=1e-5)
    assert s.values[1] == pytest.approx(0.23534, abs=1e-5)


def test_exp_floor_rejects_zero_eps():
    with pytest.raises(ValueError):
        make_exp_floor_spectrum(1, 10.0, 0.0)
    with pytest.raises(ValueError):
        make_exp_floor_spectrum(5, 0.0, 0.1)


def test_exp_floor_strictly_decreasing():
    s = make_exp_floor_spectrum(200, 7.5, 1e-3)
    assert np.all(np.diff(s.values) < 0)


def test_exp_floor_tail_bracket():
    # p=300, tau=20, eps=1e-4 at k=200: the tail holds (p-k+1) floor terms,
    # so the bracket is (p-k+1)*eps .. (p-k+1)*eps + (tau+1)*e^{-k/tau}.
    s = make_exp_floor_spectrum(300, 20.0, 1e-4)
    got = s.tail_sum(200)
    naive = oracles.naive_tail_sum(s.values, 200)
    assert got == pytest.approx(naive, rel=1e-12)
    floor_mass = (300 - 200 + 1) * 1e-4
    assert floor_mass <= got <= floor_mass + 21.0 * math.exp(-10.0)


def test_three_level_example():
    s = make_three_level_spectrum(2, 1, 5, 0.5, 0.1)
    assert list(s.values) == [1.0, 0.5, 0.5, 0.1, 0.1]


def test_three_level_no_leading_plateau():
    s = make_three_level_spectrum(1, 2, 6, 0.3, 0.2)
    assert s.values[0] == 0.3  # empty range i <= k1-1 = 0
    assert list(s.values) == [0.3, 0.3, 0.3, 0.2, 0.2, 0.2]


def test_three_level_rejects():
    with pytest.raises(ValueError):
        make_three_level_spectrum(2, 2, 4, 0.5, 0.1)  # p < k1 + c_times_n + 1
    with pytest.raises(ValueError):
        make_three_level_spectrum(2, 1, 5, 0.1, 0.5)  # eps2 > eps1
    with pytest.raises(ValueError):
        make_three_level_spectrum(2, 1, 5, 1.5, 0.1)  # eps1 > 1


# ---------------------------------------------------------------------------
# tail sums


def test_tail_sum_examples():
    s = make_flat_spectrum(10, 1.0)
    assert tail_sum(s, 1) == 10.0
    assert tail_sum(s, 3) == 8.0


def test_tail_sum_range():
    s = make_flat_spectrum(4, 1.0)
    with pytest.raises(ValueError):
        tail_sum(s, 0)
    with pytest.raises(ValueError):
        tail_sum(s, 5)
    # the method accepts the one-past-the-end convention r_{p+1} = 0
    assert s.tail_sum(5) == 0.0
    with pytest.raises(ValueError):
        s.tail_sum(6)


def test_tail_sum_matches_naive_example():
    s = make_exp_floor_spectrum(100, 5.0, 0.01)
    assert s.tail_sum(50) == pytest.approx(oracles.naive_tail_sum(s.values, 50), rel=1e-12)


@given(sorted_values())
@settings(deadline=None)
def test_tail_sum_matches_naive(values):
    s = Spectrum(values)
    for k in range(1, s.p + 1):
        assert s.tail_sum(k) == pytest.approx(oracles.naive_tail_sum(values, k), rel=1e-12)


@given(sorted_values(min_size=2))
@settings(deadline=None)
def test_telescoping(values):
    s = Spectrum(values)
    for k in range(1, s.p):
        diff = s.tail_sum(k) - s.tail_sum(k + 1)
        lam = float(values[k - 1])
        assert abs(diff - lam) <= 1e-12 * max(lam, s.tail_sum(k), 1e-30)


@given(sorted_values(min_size=2))
@settings(deadline=None)
def test_tail_sum_non_increasing(values):
    s = Spectrum(values)
    sums = [s.tail_sum(k) for k in range(1, s.p + 2)]
    assert all(a >= b for a, b in zip(sums, sums[1:]))


def test_tiny_floor_mass_not_lost():
    # compensated summation must keep the eps*p mass of a huge flat floor
    p = 100_000
    vals = np.full(p, 1e-8)
    vals[0] = 1.0
    s = Spectrum(vals)
    assert s.tail_sum(2) == pytest.approx((p - 1) * 1e-8, rel=1e-12)


# ---------------------------------------------------------------------------
# validation


def test_spectrum_rejects_bad_input():
    for bad in ([], [0.0, 0.0], [1.0, 2.0], [1.0, -0.5], [np.nan], [np.inf]):
        with pytest.raises(ValueError):
            Spectrum(np.asarray(bad, dtype=float))


def test_spectrum_allows_trailing_zeros():
    s = Spectrum(np.array([2.0, 1.0, 0.0]))
    assert s.p == 3
    assert s.tail_sum(3) == 0.0
    assert s.rank() == 2


def test_spectrum_values_read_only():
    s = make_flat_spectrum(3, 1.0)
    with pytest.raises(ValueError):
        s.values[0] = 5.0


def test_trace_and_scaled():
    s = make_exp_floor_spectrum(30, 3.0, 0.05)
    assert s.trace == pytest.approx(oracles.naive_tail_sum(s.values, 1), rel=1e-12)
    doubled = s.scaled(2.0)
    assert doubled.trace == pytest.approx(2.0 * s.trace, rel=1e-12)
    with pytest.raises(ValueError):
        s.scaled(0.0)


def test_rank_tolerance():
    s = Spectrum(np.array([1.0, 1e-15]))
    assert s.rank() == 1
    assert s.rank(rel_tol=1e-16) == 2


# ---------------------------------------------------------------------------
# parsing


def test_parse_sorted_input():
    loaded = parse_spectrum("1.0, 0.5, 0.25")
    assert list(loaded.spectrum.values) == [1.0, 0.5, 0.25]
    assert loaded.reordered is False


def test_parse_unsorted_input_sets_flag():
    loaded = parse_spectrum("0.5, 1.0")
    assert list(loaded.spectrum.values) == [1.0, 0.5]
    assert loaded.reordered is True


def test_parse_rejects():
    for bad in ("1.0, -0.1", "", "abc", "1.0\ninf"):
        with pytest.raises(ValueError):
            parse_spectrum(bad)


def test_parse_comments_and_newlines():
    text = "# eigenvalues\n3.0\n2.0, 1.0\n# done\n"
    loaded = parse_spectrum(text)
    assert list(loaded.spectrum.values) == [3.0, 2.0, 1.0]


def test_load_spectrum_roundtrip(tmp_path):
    path = tmp_path / "spec.txt"
    path.write_text("0.25\n1.0\n0.5\n")
    loaded = load_spectrum(path)
    assert list(loaded.spectrum.values) == [1.0, 0.5, 0.25]
    assert loaded.reordered is True


# ---------------------------------------------------------------------------
# covariance model


def test_covariance_diagonal_matrix():
    s = Spectrum(np.array([2.0, 1.0]))
    cov = CovarianceModel(s)
    assert np.array_equal(cov.matrix(), np.diag([2.0, 1.0]))


def test_covariance_rotation_matrix(rng):
    s = Spectrum(np.sort(rng.uniform(0.5, 3.0, 6))[::-1].copy())
    q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    cov = CovarianceModel(s, q)
    sigma = cov.matrix()
    assert np.allclose(sigma, sigma.T, atol=1e-12)
    eigs = np.sort(np.linalg.eigvalsh(sigma))[::-1]
    assert np.allclose(eigs, s.values, rtol=1e-10, atol=1e-12)


def test_covariance_rejects_non_orthogonal():
    s = make_flat_spectrum(3, 1.0)
    with pytest.raises(ValueError):
        CovarianceModel(s, np.eye(3) * 1.5)
    with pytest.raises(ValueError):
        CovarianceModel(s, np.eye(2))
