import numpy as np
import pytest
from scipy.signal import freqz

from neosleep.filtering import FirFilter, apply, default_taps, design_bandpass, frequency_response, write_coefficients


def db(x):
    return 20 * np.log10(x)


@pytest.fixture(scope="module")
def default_filter():
    return design_bandpass(500.0, 0.3, 35.0, 4001)


def test_default_taps():
    assert default_taps(500.0) == 4001
    assert default_taps(100.0) % 2 == 1


def test_symmetric(default_filter):
    h = default_filter.taps
    assert len(h) == 4001
    assert np.array_equal(h, h[::-1])


@pytest.mark.parametrize("n_taps", [3, 51, 257])
def test_symmetric_small(n_taps):
    h = design_bandpass(100.0, 1.0, 20.0, n_taps).taps
    assert all(h[k] == h[n_taps - 1 - k] for k in range(n_taps))


@pytest.mark.parametrize("kwargs", [
    dict(low_hz=35, high_hz=0.3),
    dict(low_hz=0, high_hz=35),
    dict(low_hz=0.3, high_hz=250),
    dict(low_hz=0.3, high_hz=35, n_taps=4000),
    dict(low_hz=0.3, high_hz=35, n_taps=1),
])
def test_design_errors(kwargs):
    with pytest.raises(ValueError):
        design_bandpass(500.0, **kwargs)


def test_stopband_at_powerline(default_filter):
    assert db(frequency_response(default_filter, 50.0)) <= -40


def test_passband_at_10hz(default_filter):
    assert abs(db(frequency_response(default_filter, 10.0))) <= 0.5


def test_dc_gain_is_coefficient_sum(default_filter):
    dc = frequency_response(default_filter, 0.0)
    assert dc == pytest.approx(abs(default_filter.taps.sum()), rel=1e-9, abs=1e-15)
    assert db(dc) <= -20


def test_half_amplitude_near_edges(default_filter):
    for edge in (0.3, 35.0):
        assert frequency_response(default_filter, edge) == pytest.approx(0.5, abs=0.05)


def test_response_matches_freqz(default_filter):
    freqs = np.array([0.0, 0.2, 1.0, 10.0, 34.0, 40.0, 50.0, 120.0, 250.0])
    _, h = freqz(default_filter.taps, worN=freqs, fs=500.0)
    np.testing.assert_allclose(frequency_response(default_filter, freqs), np.abs(h), rtol=1e-7, atol=1e-12)


def test_identity_filter_response():
    ident = FirFilter(np.array([1.0]), 500.0, 0.3, 35.0)
    np.testing.assert_array_equal(frequency_response(ident, np.linspace(0, 250, 11)), 1.0)


def test_response_range_error(default_filter):
    with pytest.raises(ValueError):
        frequency_response(default_filter, 251.0)
    with pytest.raises(ValueError):
        frequency_response(default_filter, -1.0)


def test_response_deterministic():
    a, b = design_bandpass(500.0), design_bandpass(500.0)
    f = np.linspace(0, 250, 50)
    assert np.array_equal(frequency_response(a, f), frequency_response(b, f))


def test_identity_apply():
    x = np.random.default_rng(0).normal(size=123)
    ident = FirFilter(np.array([1.0]), 500.0, 0.3, 35.0)
    assert np.array_equal(apply(ident, x), x)


def _sine(freq, seconds=10.0, fs=500.0):
    t = np.arange(int(seconds * fs)) / fs
    return np.sin(2 * np.pi * freq * t)


def _central_rms(y, fs=500.0):
    return np.sqrt(np.mean(y[int(fs):-int(fs)] ** 2))


def test_powerline_sine_suppressed(default_filter):
    y = apply(default_filter, _sine(50.0))
    assert len(y) == 5000
    assert _central_rms(y) <= 0.01


def test_passband_sine_preserved(default_filter):
    y = apply(default_filter, _sine(10.0))
    assert _central_rms(y) == pytest.approx(1 / np.sqrt(2), rel=0.06)


def test_phase_alignment(default_filter):
    x = _sine(7.3)
    y = apply(default_filter, x)
    xc, yc = x[500:-500], y[500:-500]
    lags = np.arange(-20, 21)
    corr = [np.dot(xc[20:-20], np.roll(yc, lag)[20:-20]) for lag in lags]
    assert lags[int(np.argmax(corr))] == 0


def test_linearity(default_filter):
    rng = np.random.default_rng(1)
    x, y = rng.normal(size=3000), rng.normal(size=3000)
    a, b = 2.5, -0.75
    lhs = apply(default_filter, a * x + b * y)
    rhs = a * apply(default_filter, x) + b * apply(default_filter, y)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-9 * np.max(np.abs(rhs)))


def test_short_signals(default_filter):
    assert len(apply(default_filter, [1.0])) == 1
    assert len(apply(default_filter, np.arange(7.0))) == 7


def test_empty_signal_rejected(default_filter):
    with pytest.raises(ValueError):
        apply(default_filter, [])


def test_coefficient_dump(tmp_path):
    filt = design_bandpass(100.0, 1.0, 20.0, 31)
    write_coefficients(filt, tmp_path / "c.txt")
    back = np.array([float(v) for v in (tmp_path / "c.txt").read_text().split()])
    assert np.array_equal(back, filt.taps)
