import numpy as np
import pytest
from scipy import linalg, signal

from analog_matching.core import spectrum
from analog_matching.core.factorization import (
    FirFilter,
    optimal_predictor,
    prediction_residual,
    spectral_factorize,
    zero_phase_fir,
)
from analog_matching.core.spectrum import entropy_power
from analog_matching.exceptions import DomainError


def test_flat_spectrum_factorizes_trivially():
    q, pe = spectral_factorize(spectrum.flat(2.0), 16)
    assert pe == pytest.approx(2.0, rel=1e-12)
    assert q.taps[0] == 1.0
    np.testing.assert_allclose(q.taps[1:], 0.0, atol=1e-10)


def test_ma1_factor():
    q, pe = spectral_factorize(spectrum.moving_average([1.0, -0.5]), 8)
    np.testing.assert_allclose(q.taps[:2], [1.0, -0.5], atol=1e-6)
    np.testing.assert_allclose(q.taps[2:], 0.0, atol=1e-6)
    assert pe == pytest.approx(1.0, rel=1e-6)


def test_factor_reconstructs_ar1(ar1_source):
    q, pe = spectral_factorize(ar1_source, 256)
    rebuilt = pe * q.power_response(ar1_source.size)
    assert np.max(np.abs(rebuilt - ar1_source.values) / ar1_source.values) < 1e-3
    assert pe == pytest.approx(entropy_power(ar1_source), rel=1e-9)


def test_factor_length_limit(ar1_source):
    with pytest.raises(DomainError):
        spectral_factorize(ar1_source, ar1_source.size // 4 + 1)


def test_flat_predictor_is_zero():
    p = optimal_predictor(spectrum.flat(1.0), 32)
    assert p.is_zero
    assert p.delay == 1


def test_ar1_predictor_matches_yule_walker(ar1_source):
    p = optimal_predictor(ar1_source, 16)
    lags = np.arange(17)
    autocorrelation = 0.9**lags / (1 - 0.81)
    yule_walker = linalg.solve_toeplitz(autocorrelation[:16], autocorrelation[1:])
    np.testing.assert_allclose(p.taps, yule_walker, atol=1e-6)
    assert p.taps[0] == pytest.approx(0.9, abs=1e-6)


def test_ar1_predictor_residual(ar1_source, rng):
    p = optimal_predictor(ar1_source, 64)
    assert prediction_residual(p, ar1_source) == pytest.approx(1.0, rel=0.02)

    x = signal.lfilter([1.0], [1.0, -0.9], rng.standard_normal(200_000))
    error = x - p.apply(x)
    assert np.var(error[200:]) == pytest.approx(1.0, rel=0.02)


def test_predictor_is_first_order_optimal():
    s = spectrum.moving_average([1.0, -0.5])
    p = optimal_predictor(s, 64)
    baseline = prediction_residual(p, s)
    for i in range(5):
        for step in (-1e-3, 1e-3):
            taps = p.taps.copy()
            taps[i] += step
            candidate = FirFilter(taps, delay=1)
            assert prediction_residual(candidate, s) > baseline - 1e-9


def test_causal_apply_honors_delay():
    np.testing.assert_allclose(FirFilter([1.0], delay=1).apply([1.0, 2.0, 3.0]), [0.0, 1.0, 2.0])


def test_centered_apply_keeps_alignment():
    x = np.zeros((2, 21))
    x[:, 10] = 1.0
    taps = np.array([0.25, 0.5, 0.25])
    y = FirFilter(taps, centered=True).apply(x, axis=1)
    np.testing.assert_allclose(y[:, 9:12], np.tile(taps, (2, 1)), atol=1e-12)
    np.testing.assert_allclose(y[:, :9], 0.0, atol=1e-12)


def test_centered_filter_requires_odd_length():
    with pytest.raises(DomainError):
        FirFilter(np.ones(4), centered=True)


def test_zero_phase_fir_constant_amplitude_is_a_gain():
    fir = zero_phase_fir(np.full(4096, 0.7), 257)
    assert fir.is_scalar
    assert fir.taps[0] == pytest.approx(0.7)


def test_zero_phase_fir_matches_smooth_amplitude():
    f = np.fft.fftfreq(4096)
    amplitude = 1.0 / np.abs(1.0 - 0.5 * np.exp(-2j * np.pi * f))
    fir = zero_phase_fir(amplitude, 257)
    assert fir.centered and fir.length == 257
    np.testing.assert_allclose(fir.power_response(4096), amplitude**2, rtol=0.01)


def test_filter_dict_round_trip():
    fir = FirFilter(np.array([0.1, -0.2, 0.3]), delay=1)
    again = FirFilter.from_dict(fir.to_dict())
    assert again.delay == 1 and not again.centered
    np.testing.assert_array_equal(again.taps, fir.taps)
