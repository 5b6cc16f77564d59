"""Confusion-matrix metrics, ROC analysis and the k-fold cross-validation harness.

Wake is the positive class throughout: labels are ints with 1 = wake, 0 = sleep.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import boosting
from .boosting import Hyperparams
from .dataio import Stage

MEAN_ROC_GRID = np.linspace(0.0, 1.0, 101)


class UndefinedMetricError(ZeroDivisionError):
    def __init__(self, metric: str, reason: str):
        super().__init__(f"{metric} is undefined: {reason}")
        self.metric = metric


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def swapped(self) -> "ConfusionMatrix":
        """The same counts with sleep taken as the positive class."""
        return ConfusionMatrix(self.tn, self.tp, self.fn, self.fp)

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.tp + other.tp, self.tn + other.tn, self.fp + other.fp, self.fn + other.fn)


@dataclass(frozen=True)
class Metrics:
    sensitivity: float
    specificity: float
    accuracy: float
    kappa: float
    p_agree: float
    p_chance: float


@dataclass(frozen=True)
class RocCurve:
    fp_rate: np.ndarray
    tp_rate: np.ndarray
    auc: float


@dataclass
class FoldResult:
    fold: int
    confusion: ConfusionMatrix
    metrics: Metrics
    roc: RocCurve


@dataclass
class CvResult:
    folds: list[FoldResult]
    assignment: np.ndarray
    pooled_confusion: ConfusionMatrix
    pooled: Metrics
    pooled_roc: RocCurve
    mean_roc: RocCurve
    mean: dict[str, float] = field(default_factory=dict)
    sd: dict[str, float] = field(default_factory=dict)
    probabilities: np.ndarray | None = None


def _as_labels(y) -> np.ndarray:
    y = np.asarray(y)
    if y.dtype == object:
        y = np.array([1 if v is Stage.WAKE else 0 for v in y])
    return y.astype(np.int64)


def confusion(y_true, y_pred) -> ConfusionMatrix:
    t, p = _as_labels(y_true), _as_labels(y_pred)
    if len(t) != len(p):
        raise ValueError(f"length mismatch: {len(t)} true vs {len(p)} predicted labels")
    if len(t) == 0:
        raise ValueError("confusion matrix needs at least one label")
    return ConfusionMatrix(
        int(np.sum((t == 1) & (p == 1))),
        int(np.sum((t == 0) & (p == 0))),
        int(np.sum((t == 0) & (p == 1))),
        int(np.sum((t == 1) & (p == 0))),
    )


def _ratio(metric: str, num: float, den: float, reason: str) -> float:
    if den == 0:
        raise UndefinedMetricError(metric, reason)
    return num / den


def metrics(cm: ConfusionMatrix) -> Metrics:
    """Sensitivity, specificity and accuracy (percent) plus Cohen's kappa."""
    n = cm.total
    se = 100.0 * _ratio("sensitivity", cm.tp, cm.tp + cm.fn, "no positive (wake) samples")
    sp = 100.0 * _ratio("specificity", cm.tn, cm.tn + cm.fp, "no negative (sleep) samples")
    acc = 100.0 * _ratio("accuracy", cm.tp + cm.tn, n, "empty confusion matrix")
    p_agree = (cm.tp + cm.tn) / n
    p_chance = ((cm.tp + cm.fn) * (cm.tp + cm.fp) + (cm.tn + cm.fp) * (cm.tn + cm.fn)) / n**2
    if cm.fp == 0 and cm.fn == 0:
        kappa = 1.0
    else:
        kappa = _ratio("kappa", p_agree - p_chance, 1.0 - p_chance, "chance agreement is 1")
    return Metrics(se, sp, acc, kappa, p_agree, p_chance)


def roc(y_true, scores) -> RocCurve:
    """ROC by descending-threshold sweep; tied scores form a single step."""
    y = _as_labels(y_true)
    s = np.asarray(scores, dtype=np.float64)
    if len(y) != len(s):
        raise ValueError("labels and scores differ in length")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both classes present")
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    last_of_group = np.r_[np.flatnonzero(np.diff(s) != 0), len(s) - 1]
    tps = np.cumsum(y)[last_of_group]
    fps = (last_of_group + 1) - tps
    tpr = np.r_[0.0, tps / n_pos]
    fpr = np.r_[0.0, fps / n_neg]
    return RocCurve(fpr, tpr, float(np.trapezoid(tpr, fpr)))


def _vertical_average(curves: list[RocCurve]) -> RocCurve:
    """Mean tp_rate on a fixed fp_rate grid; each curve read as its upper step envelope."""
    rows = []
    for c in curves:
        pos = np.searchsorted(c.fp_rate, MEAN_ROC_GRID, side="right") - 1
        running_max = np.maximum.accumulate(c.tp_rate)
        rows.append(running_max[pos])
    tpr = np.mean(rows, axis=0)
    fpr = np.r_[0.0, MEAN_ROC_GRID]
    tpr = np.r_[0.0, tpr]
    return RocCurve(fpr, tpr, float(np.trapezoid(tpr, fpr)))


def kfold_split(n: int, k: int, labels=None, seed: int = 0, stratify: bool = True, groups=None) -> np.ndarray:
    """Fold index (0..k-1) per sample.

    Stratified by default: each class is shuffled and dealt round-robin,
    continuing the deal across classes so fold sizes also stay within one.
    With ``groups`` whole groups (e.g. records) are dealt instead.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    rng = np.random.default_rng(seed)
    if groups is not None:
        groups = np.asarray(groups)
        if len(groups) != n:
            raise ValueError("groups length does not match n")
        uniq = np.unique(groups)
        if len(uniq) < k:
            raise ValueError(f"{len(uniq)} groups cannot fill {k} folds")
        group_fold = dict(zip(rng.permutation(uniq).tolist(), (np.arange(len(uniq)) % k).tolist()))
        return np.array([group_fold[g] for g in groups.tolist()], dtype=np.int64)
    if not stratify or labels is None:
        if n < k:
            raise ValueError(f"{n} samples cannot fill {k} folds")
        out = np.empty(n, dtype=np.int64)
        out[rng.permutation(n)] = np.arange(n) % k
        return out
    y = _as_labels(labels)
    if len(y) != n:
        raise ValueError("labels length does not match n")
    out = np.empty(n, dtype=np.int64)
    offset = 0
    for cls in np.unique(y):
        members = np.flatnonzero(y == cls)
        if len(members) < k:
            raise ValueError(f"class {cls} has {len(members)} members, fewer than k={k}")
        members = rng.permutation(members)
        out[members] = (offset + np.arange(len(members))) % k
        offset = (offset + len(members)) % k
    return out


_METRIC_KEYS = ("sensitivity", "specificity", "accuracy", "kappa", "auc")


def cross_validate(features, labels, hp: Hyperparams = Hyperparams(), k: int = 5, seed: int = 0,
                   stratify: bool = True, groups=None, feature_names=None) -> CvResult:
    """Train k models, each scored only on its held-out fold."""
    X = np.asarray(features, dtype=np.float64)
    y = _as_labels(labels)
    assignment = kfold_split(len(y), k, y, seed, stratify=stratify, groups=groups)
    proba = np.empty(len(y))
    folds = []
    for f in range(k):
        test = assignment == f
        model = boosting.train(X[~test], y[~test], hp, seed=seed, feature_names=feature_names)
        p = boosting.predict_proba(model, X[test])
        proba[test] = p
        pred = (p >= 0.5).astype(np.int64)
        cm = confusion(y[test], pred)
        folds.append(FoldResult(f, cm, metrics(cm), roc(y[test], p)))
    pooled_cm = confusion(y, (proba >= 0.5).astype(np.int64))
    table = {key: np.array([getattr(fr.metrics, key) if key != "auc" else fr.roc.auc for fr in folds])
             for key in _METRIC_KEYS}
    return CvResult(
        folds=folds,
        assignment=assignment,
        pooled_confusion=pooled_cm,
        pooled=metrics(pooled_cm),
        pooled_roc=roc(y, proba),
        mean_roc=_vertical_average([fr.roc for fr in folds]),
        mean={key: float(v.mean()) for key, v in table.items()},
        sd={key: float(v.std(ddof=1)) for key, v in table.items()},
        probabilities=proba,
    )


# ---------------------------------------------------------------------------
# reports


def format_report(result: CvResult) -> str:
    """Plain-text table: per-fold Se/Sp/Acc/Kappa/AUC, mean +/- sd, pooled."""
    head = f"{'fold':<8}{'Se%':>10}{'Sp%':>10}{'Acc%':>10}{'Kappa':>10}{'AUC':>10}{'n':>8}"
    lines = [head, "-" * len(head)]
    for fr in result.folds:
        m = fr.metrics
        lines.append(
            f"{fr.fold + 1:<8}{m.sensitivity:>10.2f}{m.specificity:>10.2f}{m.accuracy:>10.2f}"
            f"{m.kappa:>10.4f}{fr.roc.auc:>10.4f}{fr.confusion.total:>8d}"
        )
    lines.append("-" * len(head))
    mu, sd = result.mean, result.sd
    lines.append(
        f"{'mean':<8}{mu['sensitivity']:>10.2f}{mu['specificity']:>10.2f}{mu['accuracy']:>10.2f}"
        f"{mu['kappa']:>10.4f}{mu['auc']:>10.4f}"
    )
    lines.append(
        f"{'sd':<8}{sd['sensitivity']:>10.2f}{sd['specificity']:>10.2f}{sd['accuracy']:>10.2f}"
        f"{sd['kappa']:>10.4f}{sd['auc']:>10.4f}"
    )
    p, cm = result.pooled, result.pooled_confusion
    lines.append(
        f"{'pooled':<8}{p.sensitivity:>10.2f}{p.specificity:>10.2f}{p.accuracy:>10.2f}"
        f"{p.kappa:>10.4f}{result.pooled_roc.auc:>10.4f}{cm.total:>8d}"
    )
    lines.append("")
    lines.append(f"pooled confusion: tp={cm.tp} tn={cm.tn} fp={cm.fp} fn={cm.fn}")
    lines.append(f"mean ROC AUC (vertical average): {result.mean_roc.auc:.4f}")
    return "\n".join(lines) + "\n"


def write_roc(result: CvResult, path) -> None:
    """``section,fp_rate,tp_rate`` rows: one section per fold, then pooled and mean."""
    sections = [(f"fold{fr.fold + 1}", fr.roc) for fr in result.folds]
    sections += [("pooled", result.pooled_roc), ("mean", result.mean_roc)]
    with open(path, "w") as fh:
        fh.write("section,fp_rate,tp_rate\n")
        for name, curve in sections:
            for x, y in zip(curve.fp_rate, curve.tp_rate):
                fh.write(f"{name},{float(x)!r},{float(y)!r}\n")
