"""Seeded random search over boosting hyperparameters scored by k-fold CV."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .boosting import Hyperparams
from .evaluation import cross_validate


@dataclass(frozen=True)
class SearchSpace:
    n_estimators: tuple[int, int] = (50, 300)
    max_depth: tuple[int, int] = (2, 12)
    learning_rate: tuple[float, float] = (0.01, 0.3)
    n_candidates: int = 50
    seed: int = 0
    min_samples_leaf: int = 5

    def __post_init__(self):
        for name in ("n_estimators", "max_depth", "learning_rate"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"empty {name} range [{lo}, {hi}]")
        if self.n_estimators[0] < 0 or self.max_depth[0] < 1:
            raise ValueError("n_estimators must be >= 0 and max_depth >= 1")
        lo, hi = self.learning_rate
        if not (0 < lo and hi <= 1):
            raise ValueError("learning_rate range must lie within (0, 1]")
        if self.n_candidates < 1:
            raise ValueError("n_candidates must be >= 1")

    def contains(self, hp: Hyperparams) -> bool:
        lr_lo, lr_hi = self.learning_rate
        in_lr = (lr_lo < hp.learning_rate <= lr_hi) or (lr_lo == lr_hi == hp.learning_rate)
        return (self.n_estimators[0] <= hp.n_estimators <= self.n_estimators[1]
                and self.max_depth[0] <= hp.max_depth <= self.max_depth[1] and in_lr)


@dataclass(frozen=True)
class LeaderboardEntry:
    hyperparams: Hyperparams
    mean_acc: float
    sd_acc: float
    mean_kappa: float
    sd_kappa: float
    fold_acc: tuple[float, ...]


def sample_candidates(space: SearchSpace) -> list[Hyperparams]:
    """Uniform integers (inclusive) and a log-uniform learning rate on (lo, hi]."""
    rng = np.random.default_rng(space.seed)
    lr_lo, lr_hi = space.learning_rate
    log_ratio = math.log(lr_lo / lr_hi)
    out = []
    for _ in range(space.n_candidates):
        m = int(rng.integers(space.n_estimators[0], space.n_estimators[1], endpoint=True))
        depth = int(rng.integers(space.max_depth[0], space.max_depth[1], endpoint=True))
        # u in [0, 1) maps to (lo, hi]
        lr = lr_hi * math.exp(rng.random() * log_ratio)
        lr = min(lr, lr_hi)
        out.append(Hyperparams(m, depth, lr, space.min_samples_leaf))
    return out


def _sort_key(entry: LeaderboardEntry, metric: str):
    score = entry.mean_acc if metric == "accuracy" else entry.mean_kappa
    hp = entry.hyperparams
    return (-score, hp.n_estimators, hp.max_depth, hp.learning_rate)


def rank(entries, metric: str = "accuracy") -> list[LeaderboardEntry]:
    """Best first; ties prefer fewer estimators, then shallower, then lower learning rate."""
    if metric not in ("accuracy", "kappa"):
        raise ValueError(f"unknown selection metric {metric!r}")
    return sorted(entries, key=lambda e: _sort_key(e, metric))


def random_search(features, labels, space: SearchSpace, k: int = 5, seed: int = 0,
                  metric: str = "accuracy", stratify: bool = True, groups=None,
                  candidates=None) -> tuple[Hyperparams, list[LeaderboardEntry]]:
    """Score every sampled candidate by k-fold CV and return (best, ranked leaderboard).

    All candidates share the fold assignment drawn from ``seed``, so each is
    compared on identical train/test partitions.
    """
    if candidates is None:
        candidates = sample_candidates(space)
    entries = []
    for hp in candidates:
        cv = cross_validate(features, labels, hp, k=k, seed=seed, stratify=stratify, groups=groups)
        accs = tuple(fr.metrics.accuracy for fr in cv.folds)
        entries.append(LeaderboardEntry(
            hp, cv.mean["accuracy"], cv.sd["accuracy"], cv.mean["kappa"], cv.sd["kappa"], accs,
        ))
    board = rank(entries, metric)
    return board[0].hyperparams, board


def write_leaderboard(board, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["rank", "n_estimators", "max_depth", "learning_rate", "mean_acc", "sd_acc"])
        for i, e in enumerate(board, start=1):
            hp = e.hyperparams
            writer.writerow([i, hp.n_estimators, hp.max_depth, repr(hp.learning_rate),
                             f"{e.mean_acc:.4f}", f"{e.sd_acc:.4f}"])


def write_best(hp: Hyperparams, path) -> None:
    """Config fragment readable by ``neosleep train --config``."""
    with open(path, "w") as fh:
        json.dump(asdict(hp), fh, indent=2, sort_keys=True)
        fh.write("\n")
