"""Per-epoch EEG features: time-domain statistics, Hjorth parameters, spectral shape."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .dataio import Epoch, Stage


class DegenerateSignalError(ValueError):
    """A feature is undefined for the given signal (e.g. zero variance)."""


FEATURE_NAMES = (
    "minimum",
    "maximum",
    "mean_amplitude",
    "standard_deviation",
    "skewness",
    "kurtosis",
    "rms",
    "energy",
    "hjorth_activity",
    "hjorth_mobility",
    "hjorth_complexity",
    "spectral_centroid",
    "spectral_spread",
    "spectral_flatness",
)

# standard_deviation duplicates hjorth_activity (its square)
PAPER_13_NAMES = tuple(n for n in FEATURE_NAMES if n != "standard_deviation")

FEATURE_MODES = {"all-14": FEATURE_NAMES, "paper-13": PAPER_13_NAMES}


@dataclass(frozen=True)
class FeatureVector:
    minimum: float
    maximum: float
    mean_amplitude: float
    standard_deviation: float
    skewness: float
    kurtosis: float
    rms: float
    energy: float
    hjorth_activity: float
    hjorth_mobility: float
    hjorth_complexity: float
    spectral_centroid: float
    spectral_spread: float
    spectral_flatness: float

    def as_array(self, names=FEATURE_NAMES) -> np.ndarray:
        return np.array([getattr(self, n) for n in names], dtype=np.float64)


def _as_signal(signal, min_len: int) -> np.ndarray:
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1 or len(x) < min_len:
        raise ValueError(f"signal must be 1-D with at least {min_len} samples")
    return x


def hjorth(signal) -> tuple[float, float, float]:
    """Return (activity, mobility, complexity).

    Derivatives are first differences; mobility and complexity are ratios, so
    a constant derivative scale cancels.
    """
    x = _as_signal(signal, 3)
    dx = np.diff(x)
    ddx = np.diff(dx)
    var_x = np.var(x)
    var_dx = np.var(dx)
    if var_x <= 0:
        raise DegenerateSignalError("zero-variance signal has undefined Hjorth mobility")
    if var_dx <= 0:
        raise DegenerateSignalError("zero-variance first difference has undefined Hjorth complexity")
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        mobility = np.sqrt(var_dx / var_x)
        complexity = np.sqrt(np.var(ddx) / var_dx) / mobility
    if not (np.isfinite(mobility) and np.isfinite(complexity)) or mobility == 0:
        raise DegenerateSignalError("signal variance too small for finite Hjorth parameters")
    return float(var_x), float(mobility), float(complexity)


def time_features(signal) -> tuple[float, float, float, float, float, float, float, float]:
    """Return (min, max, mean, sd, skewness, kurtosis, rms, energy).

    Moments are population (divide-by-n); kurtosis is Pearson (non-excess).
    """
    x = _as_signal(signal, 2)
    mean = x.mean()
    dev = x - mean
    m2 = np.mean(dev**2)
    if m2 <= 0:
        raise DegenerateSignalError("zero-variance signal has undefined skewness/kurtosis")
    m3 = np.mean(dev**3)
    m4 = np.mean(dev**4)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        skew, kurt = m3 / m2**1.5, m4 / m2**2
    if not (np.isfinite(skew) and np.isfinite(kurt)):
        raise DegenerateSignalError("variance too small for finite skewness/kurtosis")
    sq = x**2
    energy = sq.sum()
    return (
        float(x.min()),
        float(x.max()),
        float(mean),
        float(np.sqrt(m2)),
        float(skew),
        float(kurt),
        float(np.sqrt(sq.mean())),
        float(energy),
    )


def power_spectrum(signal, fs: float) -> tuple[np.ndarray, np.ndarray]:
    """One-sided periodogram without the DC bin: (freqs, power)."""
    x = np.asarray(signal, dtype=np.float64)
    n = len(x)
    power = np.abs(np.fft.rfft(x)) ** 2 / (fs * n)
    if n % 2 == 0:
        power[1:-1] *= 2.0
    else:
        power[1:] *= 2.0
    freqs = np.fft.rfftfreq(n, d=1.0 / fs)
    return freqs[1:], power[1:]


def spectral_features(signal, fs: float) -> tuple[float, float, float]:
    """Return (centroid Hz, spread Hz, flatness) of the DC-free periodogram."""
    x = _as_signal(signal, 4)
    if not fs > 0:
        raise ValueError("fs must be positive")
    freqs, p = power_spectrum(x, fs)
    total = p.sum()
    if total <= 0:
        raise DegenerateSignalError("signal has no non-DC spectral power")
    centroid = np.dot(freqs, p) / total
    spread = np.sqrt(np.dot((freqs - centroid) ** 2, p) / total)
    if np.any(p == 0):
        flatness = 0.0
    else:
        flatness = np.exp(np.mean(np.log(p))) / p.mean()
    return float(centroid), float(spread), float(min(flatness, 1.0))


def featurize(epoch, fs: float | None = None) -> FeatureVector:
    """Compute every feature for one epoch (an ``Epoch`` or a bare signal with ``fs``)."""
    if isinstance(epoch, Epoch):
        signal, fs = epoch.samples, epoch.fs if fs is None else fs
        where = f"{epoch.record_id}#{epoch.index}"
    else:
        signal, where = epoch, "signal"
    if fs is None:
        raise ValueError("fs is required for bare signals")
    try:
        mn, mx, mean, sd, skew, kurt, rms, energy = time_features(signal)
        activity, mobility, complexity = hjorth(signal)
        centroid, spread, flatness = spectral_features(signal, fs)
    except DegenerateSignalError as exc:
        raise DegenerateSignalError(f"{where}: {exc}") from None
    return FeatureVector(
        mn, mx, mean, sd, skew, kurt, rms, energy,
        activity, mobility, complexity,
        centroid, spread, flatness,
    )


# ---------------------------------------------------------------------------
# feature table


@dataclass
class FeatureTable:
    record_ids: list[str]
    epoch_indices: list[int]
    labels: np.ndarray  # 1 = wake, 0 = sleep
    X: np.ndarray
    feature_names: tuple[str, ...]

    def __len__(self):
        return len(self.labels)


def label_to_int(label: Stage) -> int:
    if label is Stage.WAKE:
        return 1
    if label is Stage.SLEEP:
        return 0
    raise ValueError(f"epoch label must be wake or sleep, got {label}")


def build_table(rows, mode: str = "all-14") -> FeatureTable:
    """Assemble (epoch, FeatureVector) pairs into a table with the mode's columns."""
    names = FEATURE_MODES[mode]
    rows = list(rows)
    X = np.array([fv.as_array(names) for _, fv in rows], dtype=np.float64).reshape(len(rows), len(names))
    return FeatureTable(
        [ep.record_id for ep, _ in rows],
        [ep.index for ep, _ in rows],
        np.array([label_to_int(ep.label) for ep, _ in rows], dtype=np.int64),
        X,
        names,
    )


def write_table(table: FeatureTable, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["record_id", "epoch_index", "label", *table.feature_names])
        for rid, idx, y, row in zip(table.record_ids, table.epoch_indices, table.labels, table.X):
            label = Stage.WAKE.value if y == 1 else Stage.SLEEP.value
            writer.writerow([rid, idx, label, *(repr(float(v)) for v in row)])


def read_table(path) -> FeatureTable:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:3] != ["record_id", "epoch_index", "label"]:
            raise ValueError(f"{path}: expected leading columns record_id,epoch_index,label")
        names = tuple(header[3:])
        unknown = set(names) - set(FEATURE_NAMES)
        if unknown:
            raise ValueError(f"{path}: unknown feature columns {sorted(unknown)}")
        rids, idxs, labels, X = [], [], [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}")
            rids.append(row[0])
            idxs.append(int(row[1]))
            labels.append(label_to_int(Stage.parse(row[2])))
            X.append([float(v) for v in row[3:]])
    return FeatureTable(rids, idxs, np.array(labels, dtype=np.int64),
                        np.array(X, dtype=np.float64).reshape(len(labels), len(names)), names)
