"""EEG record ingestion, epoch segmentation, artifact rejection and synthetic corpora.

Record files are plain text: a ``fs=<float>`` header followed by one
amplitude (microvolts) per line.  Stage and artifact annotations live in a
companion CSV next to the record (``<stem>.ann.csv``) with the header
``start_s,end_s,kind``.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

ANNOTATION_SUFFIX = ".ann.csv"
RECORD_SUFFIX = ".txt"

# float slack when comparing annotation spans against epoch boundaries
_SPAN_EPS = 1e-9


class Stage(enum.Enum):
    WAKE = "wake"
    SLEEP = "sleep"
    ARTIFACT = "artifact"

    @classmethod
    def parse(cls, text: str) -> "Stage":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"unknown annotation kind {text!r}") from None


class RecordParseError(ValueError):
    """Raised for malformed record or annotation files."""

    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line


@dataclass(frozen=True)
class Annotation:
    start_s: float
    end_s: float
    kind: Stage

    def __post_init__(self):
        if not self.start_s < self.end_s:
            raise ValueError(
                f"annotation must have start < end, got [{self.start_s}, {self.end_s}]"
            )


@dataclass(frozen=True, eq=False)
class EegRecord:
    record_id: str
    fs: float
    samples: np.ndarray
    annotations: tuple[Annotation, ...] = ()

    def __post_init__(self):
        if not self.fs > 0:
            raise ValueError(f"fs must be positive, got {self.fs}")
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "annotations", tuple(self.annotations))
        duration = self.duration
        for ann in self.annotations:
            if ann.start_s < 0 or ann.end_s > duration:
                raise ValueError(
                    f"annotation [{ann.start_s}, {ann.end_s}] outside record "
                    f"duration {duration}"
                )
        stages = sorted(
            (a for a in self.annotations if a.kind is not Stage.ARTIFACT),
            key=lambda a: a.start_s,
        )
        for prev, cur in zip(stages, stages[1:]):
            if cur.start_s < prev.end_s and cur.kind is not prev.kind:
                raise ValueError(
                    f"wake/sleep annotations overlap at {cur.start_s}s"
                )

    @property
    def duration(self) -> float:
        return len(self.samples) / self.fs


@dataclass(frozen=True, eq=False)
class Epoch:
    record_id: str
    index: int
    samples: np.ndarray
    fs: float
    label: Stage | None = None

    @property
    def start_s(self) -> float:
        return self.index * len(self.samples) / self.fs

    @property
    def end_s(self) -> float:
        return (self.index + 1) * len(self.samples) / self.fs


@dataclass(frozen=True)
class SynthConfig:
    n_records: int = 19
    record_seconds: float = 7200.0
    fs: float = 500.0
    wake_fraction: float = 0.4
    noise_level: float = 0.0
    seed: int = 0
    epoch_seconds: float = 30.0
    # fraction of epochs that receive an annotated movement-like burst
    artifact_fraction: float = 0.0

    def __post_init__(self):
        if self.n_records < 1:
            raise ValueError("n_records must be positive")
        if not self.record_seconds > 0 or not self.fs > 0 or not self.epoch_seconds > 0:
            raise ValueError("record_seconds, fs and epoch_seconds must be positive")
        if round(self.record_seconds * self.fs) < 1:
            raise ValueError("configuration yields zero-length records")
        if not 0.0 <= self.wake_fraction <= 1.0:
            raise ValueError("wake_fraction must lie in [0, 1]")
        if not 0.0 <= self.artifact_fraction <= 1.0:
            raise ValueError("artifact_fraction must lie in [0, 1]")
        if self.noise_level < 0:
            raise ValueError("noise_level must be non-negative")


# ---------------------------------------------------------------------------
# file I/O


def annotation_path(record_path) -> Path:
    record_path = Path(record_path)
    return record_path.with_name(record_path.name.removesuffix(RECORD_SUFFIX) + ANNOTATION_SUFFIX)


def _parse_header(path, line: str) -> float:
    key, sep, value = line.strip().partition("=")
    if sep != "=" or key.strip().lower() != "fs":
        raise RecordParseError(path, 1, f"expected header 'fs=<float>', got {line.strip()!r}")
    try:
        fs = float(value)
    except ValueError:
        raise RecordParseError(path, 1, f"non-numeric sampling rate {value.strip()!r}") from None
    if not (fs > 0 and math.isfinite(fs)):
        raise RecordParseError(path, 1, f"sampling rate must be positive, got {fs}")
    return fs


def _parse_samples(path, lines: list[str]) -> np.ndarray:
    try:
        samples = np.array([float(s) for s in lines], dtype=np.float64)
    except ValueError:
        for lineno, text in enumerate(lines, start=2):
            try:
                float(text)
            except ValueError:
                raise RecordParseError(
                    path, lineno, f"non-numeric sample {text.strip()!r}"
                ) from None
        raise
    bad = np.flatnonzero(~np.isfinite(samples))
    if bad.size:
        raise RecordParseError(path, int(bad[0]) + 2, "non-finite sample")
    return samples


def read_annotations(path, duration: float | None = None) -> list[Annotation]:
    """Parse an annotation CSV; spans are checked against ``duration`` if given."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["start_s", "end_s", "kind"]:
            raise RecordParseError(path, 1, "expected header 'start_s,end_s,kind'")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise RecordParseError(path, lineno, f"expected 3 columns, got {len(row)}")
            try:
                start, end = float(row[0]), float(row[1])
            except ValueError:
                raise RecordParseError(path, lineno, "non-numeric annotation bound") from None
            try:
                kind = Stage.parse(row[2])
            except ValueError as exc:
                raise RecordParseError(path, lineno, str(exc)) from None
            if not start < end:
                raise RecordParseError(
                    path, lineno, f"annotation end {end} is not after start {start}"
                )
            if start < 0 or (duration is not None and end > duration):
                raise RecordParseError(
                    path, lineno, f"annotation [{start}, {end}] outside record duration {duration}"
                )
            out.append(Annotation(start, end, kind))
    return out


def load_record(path, annotations=None) -> EegRecord:
    """Load a record file and its companion annotations.

    ``annotations`` overrides the companion path; when omitted and no
    ``<stem>.ann.csv`` exists the record is returned unannotated.
    """
    path = Path(path)
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise RecordParseError(path, 1, "empty record file")
    fs = _parse_header(path, lines[0])
    body = lines[1:]
    while body and not body[-1].strip():
        body.pop()
    samples = _parse_samples(path, body)
    ann_path = Path(annotations) if annotations is not None else annotation_path(path)
    anns = read_annotations(ann_path, len(samples) / fs) if ann_path.exists() else []
    record_id = path.name.removesuffix(RECORD_SUFFIX)
    try:
        return EegRecord(record_id, fs, samples, tuple(anns))
    except ValueError as exc:
        raise RecordParseError(ann_path, 1, str(exc)) from None


def save_record(record: EegRecord, directory) -> Path:
    """Write ``<record_id>.txt`` plus its annotation CSV into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{record.record_id}{RECORD_SUFFIX}"
    with open(path, "w") as fh:
        fh.write(f"fs={record.fs!r}\n")
        fh.write("\n".join(map("{:.6f}".format, record.samples.tolist())))
        fh.write("\n")
    with open(annotation_path(path), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["start_s", "end_s", "kind"])
        for ann in record.annotations:
            writer.writerow([repr(float(ann.start_s)), repr(float(ann.end_s)), ann.kind.value])
    return path


def write_labels(path, rows) -> None:
    """Write ``record_id,epoch_index,label`` rows from (id, index, Stage|None) tuples."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["record_id", "epoch_index", "label"])
        for record_id, index, label in rows:
            writer.writerow([record_id, index, "" if label is None else label.value])


def read_labels(path) -> list[tuple[str, int, Stage | None]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [
            (row["record_id"], int(row["epoch_index"]), Stage.parse(row["label"]) if row["label"] else None)
            for row in reader
        ]


# ---------------------------------------------------------------------------
# segmentation and labeling


def segment(record: EegRecord, epoch_seconds: float = 30.0, samples=None) -> list[Epoch]:
    """Cut a record into consecutive non-overlapping epochs from sample 0.

    The trailing partial epoch is dropped. ``samples`` substitutes a processed
    (e.g. filtered) copy of the record's signal.
    """
    if not epoch_seconds > 0:
        raise ValueError("epoch_seconds must be positive")
    n = int(round(epoch_seconds * record.fs))
    if n < 2:
        raise ValueError(f"epoch of {epoch_seconds}s at {record.fs} Hz has fewer than 2 samples")
    signal = record.samples if samples is None else np.asarray(samples, dtype=np.float64)
    if len(signal) != len(record.samples):
        raise ValueError("substitute samples must match the record length")
    n_epochs = len(signal) // n
    return [
        Epoch(record.record_id, i, signal[i * n:(i + 1) * n], record.fs)
        for i in range(n_epochs)
    ]


def _covered(intervals: list[tuple[float, float]], start: float, end: float) -> float:
    """Length of ``[start, end]`` covered by the union of ``intervals``."""
    clipped = sorted((max(a, start), min(b, end)) for a, b in intervals if a < end and b > start)
    total = 0.0
    cur_a = cur_b = None
    for a, b in clipped:
        if cur_b is None or a > cur_b:
            if cur_b is not None:
                total += cur_b - cur_a
            cur_a, cur_b = a, b
        else:
            cur_b = max(cur_b, b)
    if cur_b is not None:
        total += cur_b - cur_a
    return total


def artifact_fraction(epoch: Epoch, record: EegRecord) -> float:
    spans = [(a.start_s, a.end_s) for a in record.annotations if a.kind is Stage.ARTIFACT]
    return _covered(spans, epoch.start_s, epoch.end_s) / (epoch.end_s - epoch.start_s)


def majority_stage(epoch: Epoch, record: EegRecord) -> Stage | None:
    span = epoch.end_s - epoch.start_s
    for kind in (Stage.WAKE, Stage.SLEEP):
        spans = [(a.start_s, a.end_s) for a in record.annotations if a.kind is kind]
        if _covered(spans, epoch.start_s, epoch.end_s) > 0.5 * span:
            return kind
    return None


def label_and_filter(epochs, record: EegRecord, artifact_threshold: float = 0.05) -> list[Epoch]:
    """Drop artifact-contaminated epochs and label the rest by majority stage.

    An epoch is excluded once its artifact-covered fraction reaches
    ``artifact_threshold`` (inclusive), or when neither Wake nor Sleep covers
    more than half of it.
    """
    if not 0.0 < artifact_threshold <= 1.0:
        raise ValueError("artifact_threshold must lie in (0, 1]")
    kept = []
    for ep in epochs:
        if artifact_fraction(ep, record) >= artifact_threshold - _SPAN_EPS:
            continue
        label = majority_stage(ep, record)
        if label is None:
            continue
        kept.append(Epoch(ep.record_id, ep.index, ep.samples, ep.fs, label))
    return kept


# ---------------------------------------------------------------------------
# synthetic corpus

# component amplitudes in microvolts
_SLEEP_AMP = 40.0
_WAKE_AMP = 12.0
_WAKE_BROADBAND = 8.0
_NOISE_UNIT = 20.0
_ARTIFACT_AMP = 400.0


def _synth_epoch(rng: np.random.Generator, t: np.ndarray, wake: bool, noise_level: float) -> np.ndarray:
    # per-epoch gain spread keeps class feature distributions from being point masses
    gain = rng.lognormal(0.0, 0.35)
    if wake:
        freqs = rng.uniform(5.0, 30.0, size=4)
        amps = _WAKE_AMP * gain * rng.uniform(0.6, 1.4, size=4)
    else:
        freqs = rng.uniform(0.5, 3.5, size=3)
        amps = _SLEEP_AMP * gain * rng.uniform(0.6, 1.4, size=3)
    phases = rng.uniform(0.0, 2 * np.pi, size=len(freqs))
    x = (amps[:, None] * np.sin(2 * np.pi * freqs[:, None] * t[None, :] + phases[:, None])).sum(axis=0)
    if wake:
        x += _WAKE_BROADBAND * gain * rng.standard_normal(len(t))
    if noise_level > 0:
        x += noise_level * _NOISE_UNIT * rng.standard_normal(len(t))
    return x


def _runs(labels: list[Stage], epoch_seconds: float, duration: float) -> list[Annotation]:
    out = []
    start = 0
    for i in range(1, len(labels) + 1):
        if i == len(labels) or labels[i] is not labels[start]:
            end_s = duration if i == len(labels) else i * epoch_seconds
            out.append(Annotation(start * epoch_seconds, end_s, labels[start]))
            start = i
    return out


def generate_synthetic(cfg: SynthConfig) -> tuple[list[EegRecord], dict[str, list[Stage]]]:
    """Build seeded sleep/wake records whose annotations reproduce the returned truth.

    Sleep epochs are sums of 0.5-3.5 Hz sinusoids; wake epochs mix 5-30 Hz
    sinusoids with broadband noise.  ``noise_level`` adds white noise of
    ``20 * noise_level`` microvolts to every epoch.
    """
    n_total = int(round(cfg.record_seconds * cfg.fs))
    n_ep = int(round(cfg.epoch_seconds * cfg.fs))
    n_epochs = n_total // n_ep
    duration = n_total / cfg.fs
    records, truth = [], {}
    for r in range(cfg.n_records):
        rng = np.random.default_rng([cfg.seed, r])
        record_id = f"rec{r:02d}"
        n_wake = int(round(cfg.wake_fraction * n_epochs))
        is_wake = np.zeros(n_epochs, dtype=bool)
        is_wake[:n_wake] = True
        is_wake = rng.permutation(is_wake)
        labels = [Stage.WAKE if w else Stage.SLEEP for w in is_wake]

        samples = np.empty(n_total)
        t = np.arange(n_ep) / cfg.fs
        for i, w in enumerate(is_wake):
            samples[i * n_ep:(i + 1) * n_ep] = _synth_epoch(rng, t, bool(w), cfg.noise_level)
        tail = n_total - n_epochs * n_ep
        tail_wake = bool(is_wake[-1]) if n_epochs else cfg.wake_fraction >= 0.5
        if tail:
            samples[n_epochs * n_ep:] = _synth_epoch(rng, np.arange(tail) / cfg.fs, tail_wake, cfg.noise_level)
        if n_epochs:
            anns = _runs(labels, n_ep / cfg.fs, duration)
        else:
            anns = [Annotation(0.0, duration, Stage.WAKE if tail_wake else Stage.SLEEP)]

        n_art = int(round(cfg.artifact_fraction * n_epochs))
        if n_art:
            burst_s = 0.1 * cfg.epoch_seconds
            nb = int(round(burst_s * cfg.fs))
            for i in np.sort(rng.choice(n_epochs, size=n_art, replace=False)):
                offset = rng.integers(0, n_ep - nb + 1)
                lo = int(i) * n_ep + int(offset)
                samples[lo:lo + nb] += _ARTIFACT_AMP * np.hanning(nb) * rng.choice([-1.0, 1.0])
                anns.append(Annotation(lo / cfg.fs, (lo + nb) / cfg.fs, Stage.ARTIFACT))

        records.append(EegRecord(record_id, cfg.fs, samples, tuple(anns)))
        truth[record_id] = labels
    return records, truth
