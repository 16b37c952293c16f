import numpy as np
import pytest

from analog_matching.core import spectrum
from analog_matching.core.spectrum import (
    Spectrum,
    entropy_power,
    noisy_prediction_error,
    prediction_gain,
)
from analog_matching.exceptions import DomainError


def test_flat_entropy_power():
    assert entropy_power(spectrum.flat(2.0)) == pytest.approx(2.0, rel=1e-12)
    assert prediction_gain(spectrum.flat(2.0)) == pytest.approx(1.0, rel=1e-12)


def test_two_level_entropy_power_and_gain():
    s = spectrum.two_level(4.0, 1.0)
    assert s.band_mean == pytest.approx(2.5, rel=1e-12)
    assert entropy_power(s) == pytest.approx(2.0, rel=1e-3)
    assert prediction_gain(s) == pytest.approx(1.25, rel=1e-3)


def test_ar1_entropy_power_and_gain(ar1_source):
    assert entropy_power(ar1_source) == pytest.approx(1.0, abs=1e-3)
    assert prediction_gain(ar1_source) == pytest.approx(1.0 / (1.0 - 0.81), rel=1e-3)


def test_entropy_power_below_mean(ar1_source, two_level_noise):
    for s in (ar1_source, two_level_noise):
        assert entropy_power(s) < s.band_mean


def test_noisy_prediction_error_collapses_without_noise(ar1_source):
    assert noisy_prediction_error(ar1_source, 0.0) == entropy_power(ar1_source)


def test_noisy_prediction_error_flat():
    assert noisy_prediction_error(spectrum.flat(3.0), 1.0) == pytest.approx(3.0, rel=1e-12)


def test_noisy_prediction_error_ar1_matches_dense_grid(ar1_source):
    dense = 1.0 / np.abs(1.0 - 0.9 * np.exp(-2j * np.pi * np.arange(2**20) / 2**20)) ** 2
    expected = np.exp(np.mean(np.log(dense + 1.0))) - 1.0
    assert noisy_prediction_error(ar1_source, 1.0) == pytest.approx(expected, rel=1e-6)


def test_noisy_prediction_error_rejects_negative_noise(ar1_source):
    with pytest.raises(DomainError):
        noisy_prediction_error(ar1_source, -1.0)


def test_band_limited_integrals_are_exact():
    s = spectrum.flat(1.0, band_limit=0.5)
    assert s.variance == pytest.approx(0.5, rel=1e-12)
    assert s.bandwidth == 0.5
    assert entropy_power(s) == pytest.approx(1.0, rel=1e-12)
    assert not s.in_band[s.size // 2]


def test_validation_errors():
    with pytest.raises(DomainError):
        Spectrum(np.ones(100))
    with pytest.raises(DomainError):
        Spectrum(-np.ones(64))
    asymmetric = np.ones(64)
    asymmetric[1] = 2.0
    with pytest.raises(DomainError):
        Spectrum(asymmetric)
    with pytest.raises(DomainError):
        Spectrum(np.ones(64), band_limit=0.5)
    with pytest.raises(DomainError):
        spectrum.ar1(1.0)


def test_mirrored_swaps_low_and_high_frequencies():
    s = spectrum.two_level(4.0, 1.0)
    m = s.mirrored()
    assert m.values[0] == pytest.approx(1.0)
    assert m.values[s.size // 2] == pytest.approx(4.0)
    assert m.variance == pytest.approx(s.variance, rel=1e-3)


def test_moving_average_matches_response():
    s = spectrum.moving_average([1.0, -0.5], innovation_var=2.0)
    f = s.frequencies
    expected = 2.0 * np.abs(1.0 - 0.5 * np.exp(-2j * np.pi * f)) ** 2
    np.testing.assert_allclose(s.values, expected, rtol=1e-12)


def test_from_csv(tmp_path):
    path = tmp_path / "flat.csv"
    path.write_text("# f,density\n0.0,2.0\n0.5,2.0\n")
    s = spectrum.from_csv(path)
    np.testing.assert_allclose(s.values, 2.0)


def test_from_csv_missing_file(tmp_path):
    with pytest.raises(DomainError):
        spectrum.from_csv(tmp_path / "missing.csv")
