"""Linear-phase FIR bandpass design (windowed sinc) and delay-compensated filtering."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import oaconvolve


@dataclass(frozen=True, eq=False)
class FirFilter:
    taps: np.ndarray
    fs: float
    low_hz: float
    high_hz: float

    @property
    def n_taps(self) -> int:
        return len(self.taps)

    @property
    def delay(self) -> int:
        return (len(self.taps) - 1) // 2


def default_taps(fs: float) -> int:
    """8 s of impulse response, forced odd (4001 taps at 500 Hz)."""
    return int(round(8.0 * fs)) | 1


def _lowpass_sinc(cutoff_hz: float, fs: float, n: np.ndarray) -> np.ndarray:
    fc = cutoff_hz / fs
    return 2.0 * fc * np.sinc(2.0 * fc * n)


def design_bandpass(fs: float, low_hz: float = 0.3, high_hz: float = 35.0, n_taps: int | None = None) -> FirFilter:
    """Hamming-windowed difference of two ideal lowpass kernels."""
    if n_taps is None:
        n_taps = default_taps(fs)
    if n_taps < 3 or n_taps % 2 == 0:
        raise ValueError(f"n_taps must be odd and >= 3, got {n_taps}")
    if not (0 < low_hz < high_hz < fs / 2):
        raise ValueError(
            f"cutoffs must satisfy 0 < low_hz < high_hz < fs/2, got low={low_hz}, high={high_hz}, fs={fs}"
        )
    half = (n_taps - 1) // 2
    n = np.arange(-half, half + 1, dtype=np.float64)
    ideal = _lowpass_sinc(high_hz, fs, n) - _lowpass_sinc(low_hz, fs, n)
    taps = ideal * np.hamming(n_taps)
    # enforce exact symmetry against rounding in sinc evaluation
    taps = 0.5 * (taps + taps[::-1])
    return FirFilter(taps, float(fs), float(low_hz), float(high_hz))


def frequency_response(filt: FirFilter, freq_hz) -> np.ndarray | float:
    """Magnitude of the filter's DTFT at ``freq_hz`` (scalar or array)."""
    f = np.asarray(freq_hz, dtype=np.float64)
    if np.any(f < 0) or np.any(f > filt.fs / 2):
        raise ValueError(f"frequencies must lie in [0, {filt.fs / 2}]")
    k = np.arange(filt.n_taps)
    phase = -2j * np.pi * np.multiply.outer(f, k) / filt.fs
    mag = np.abs(np.exp(phase) @ filt.taps)
    return float(mag) if mag.ndim == 0 else mag


def apply(filt: FirFilter, signal) -> np.ndarray:
    """Filter with reflection padding; output is time-aligned and length-matched."""
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1 or len(x) < 1:
        raise ValueError("signal must be a non-empty 1-D sequence")
    d = filt.delay
    if d == 0:
        return x * filt.taps[0]
    mode = "reflect" if len(x) > 1 else "edge"
    padded = np.pad(x, d, mode=mode)
    return oaconvolve(padded, filt.taps, mode="valid")


def write_coefficients(filt: FirFilter, path) -> None:
    with open(path, "w") as fh:
        fh.write("\n".join(repr(float(c)) for c in filt.taps))
        fh.write("\n")
