"""Gradient-boosted regression trees for binary (wake vs sleep) classification.

The model is the additive expansion ``F(x) = F0 + sum_m v * h_m(x)``: ``F0``
is the log-odds of the training prior, each ``h_m`` is a regression tree fit
to the negative gradient of the binomial deviance, and its leaves carry
Newton steps ``sum(r) / sum(p (1 - p))``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import expit

from .dataio import Stage

MODEL_FORMAT = "neosleep-gbt/1"

# leaf denominators are floored here to avoid division blowup
_HESSIAN_FLOOR = 1e-12


class SingleClassError(ValueError):
    """Training labels contain only one class."""


@dataclass(frozen=True)
class Hyperparams:
    n_estimators: int = 149
    max_depth: int = 10
    learning_rate: float = 0.104
    min_samples_leaf: int = 5

    def __post_init__(self):
        if self.n_estimators < 0:
            raise ValueError("n_estimators must be >= 0")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must lie in (0, 1]")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")


@dataclass(frozen=True)
class TreeNode:
    """Internal node (``feature_index`` >= 0) routing ``x[f] <= threshold`` left, or a leaf."""

    feature_index: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    value: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.feature_index < 0

    @property
    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth, self.right.depth)

    @property
    def n_internal(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + self.left.n_internal + self.right.n_internal

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"value": self.value}
        return {
            "feature": self.feature_index,
            "threshold": self.threshold,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TreeNode":
        if "value" in d:
            return cls(value=float(d["value"]))
        return cls(
            feature_index=int(d["feature"]),
            threshold=float(d["threshold"]),
            left=cls.from_dict(d["left"]),
            right=cls.from_dict(d["right"]),
        )


class _FlatTree:
    """Array form of a TreeNode for vectorised routing."""

    def __init__(self, root: TreeNode):
        feature, threshold, left, right, value = [], [], [], [], []

        def add(node):
            i = len(feature)
            feature.append(node.feature_index)
            threshold.append(node.threshold)
            value.append(node.value)
            left.append(-1)
            right.append(-1)
            if not node.is_leaf:
                left[i] = add(node.left)
                right[i] = add(node.right)
            return i

        add(root)
        self.feature = np.array(feature, dtype=np.int64)
        self.threshold = np.array(threshold, dtype=np.float64)
        self.left = np.array(left, dtype=np.int64)
        self.right = np.array(right, dtype=np.int64)
        self.value = np.array(value, dtype=np.float64)

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        active = self.feature[node] >= 0
        while active.any():
            idx = rows[active]
            cur = node[idx]
            go_left = X[idx, self.feature[cur]] <= self.threshold[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.feature[node] >= 0
        return self.value[node]


@dataclass(frozen=True, eq=True)
class GbtModel:
    initial_score: float
    stages: tuple[tuple[TreeNode, float], ...]
    hyperparams: Hyperparams
    feature_names: tuple[str, ...]
    _flat: tuple = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple((t, float(s)) for t, s in self.stages))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "_flat", tuple(_FlatTree(t) for t, _ in self.stages))

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def truncated(self, m: int) -> "GbtModel":
        return GbtModel(self.initial_score, self.stages[:m], self.hyperparams, self.feature_names)


@dataclass
class TrainState:
    """Per-stage training trace: scores F_m on the training rows and mean deviance."""

    scores: list[np.ndarray] = field(default_factory=list)
    deviance: list[float] = field(default_factory=list)


# ---------------------------------------------------------------------------
# loss


def sigmoid(score):
    return expit(score)


def deviance(y: np.ndarray, score: np.ndarray) -> float:
    """Mean binomial deviance (logistic loss) of log-odds ``score`` against y in {0,1}."""
    return float(np.mean(np.logaddexp(0.0, score) - y * score))


def initial_score(labels) -> float:
    """Log-odds of the positive fraction, the constant minimising logistic loss."""
    y = np.asarray(labels, dtype=np.float64)
    if y.size == 0:
        raise SingleClassError("no labels given")
    p = y.mean()
    if p <= 0 or p >= 1:
        raise SingleClassError("labels contain a single class")
    return float(np.log(p / (1 - p)))


# ---------------------------------------------------------------------------
# tree fitting


def _best_split(X: np.ndarray, r: np.ndarray, min_samples_leaf: int):
    """Best (gain, feature, threshold, left_mask) over midpoint candidates, or None."""
    n, d = X.shape
    order = np.argsort(X, axis=0, kind="stable")
    xs = np.take_along_axis(X, order, axis=0)
    rs = r[order]
    s_left = np.cumsum(rs, axis=0)[:-1]
    total = r.sum()
    n_left = np.arange(1, n, dtype=np.float64)[:, None]
    n_right = n - n_left
    gain = s_left**2 / n_left + (total - s_left) ** 2 / n_right - total**2 / n
    valid = (xs[:-1] < xs[1:]) & (n_left >= min_samples_leaf) & (n_right >= min_samples_leaf)
    gain = np.where(valid, gain, -np.inf)
    # feature-major flattening: argmax picks lowest feature, then smallest threshold
    flat = gain.T.ravel()
    best = int(np.argmax(flat))
    best_gain = flat[best]
    tol = 1e-10 * float(np.dot(r, r))
    if not np.isfinite(best_gain) or best_gain <= tol:
        return None
    f, pos = divmod(best, n - 1)
    lo, hi = xs[pos, f], xs[pos + 1, f]
    thr = lo + (hi - lo) / 2.0
    if not lo <= thr < hi:
        thr = lo
    return best_gain, f, float(thr), X[:, f] <= thr


def fit_tree(features, residuals, hessian_weights, depth_limit: int, min_samples_leaf: int = 5,
             leaf_out: list | None = None) -> TreeNode:
    """Greedy least-squares regression tree on ``residuals`` with Newton leaf values.

    If ``leaf_out`` is a list it receives ``(row_indices, leaf_value)`` for
    every leaf, in left-to-right order.
    """
    X = np.asarray(features, dtype=np.float64)
    r = np.asarray(residuals, dtype=np.float64)
    w = np.asarray(hessian_weights, dtype=np.float64)
    if X.ndim != 2 or len(r) != len(X) or len(w) != len(X):
        raise ValueError("features must be N x d with residuals/weights of length N")
    if len(X) < 1:
        raise ValueError("cannot fit a tree on zero rows")

    def grow(idx: np.ndarray, depth: int) -> TreeNode:
        rn = r[idx]
        split = None
        if depth < depth_limit and len(idx) >= 2 * min_samples_leaf:
            split = _best_split(X[idx], rn, min_samples_leaf)
        if split is None:
            value = float(rn.sum() / max(w[idx].sum(), _HESSIAN_FLOOR))
            if leaf_out is not None:
                leaf_out.append((idx, value))
            return TreeNode(value=value)
        _, f, thr, left_mask = split
        return TreeNode(
            feature_index=int(f),
            threshold=thr,
            left=grow(idx[left_mask], depth + 1),
            right=grow(idx[~left_mask], depth + 1),
        )

    return grow(np.arange(len(X)), 0)


# ---------------------------------------------------------------------------
# training and prediction


def _check_features(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("features must be a 2-D matrix")
    bad = ~np.isfinite(X).all(axis=1)
    if bad.any():
        raise ValueError(f"non-finite feature value in row {int(np.flatnonzero(bad)[0])}")
    return X


def train_with_state(features, labels, hp: Hyperparams = Hyperparams(), seed: int = 0,
                     feature_names=None) -> tuple[GbtModel, TrainState]:
    """Fit the boosted ensemble and return it with its per-stage training trace.

    ``seed`` is accepted for interface stability; fitting uses no randomness.
    """
    X = _check_features(features)
    y = np.asarray(labels, dtype=np.float64)
    if len(y) != len(X):
        raise ValueError("labels and features differ in length")
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("labels must be 0 (sleep) or 1 (wake)")
    if feature_names is None:
        feature_names = tuple(f"f{i}" for i in range(X.shape[1]))
    if len(feature_names) != X.shape[1]:
        raise ValueError("feature_names length does not match feature count")

    f0 = initial_score(y)
    F = np.full(len(y), f0)
    state = TrainState([F.copy()], [deviance(y, F)])
    v = hp.learning_rate
    stages = []
    for _ in range(hp.n_estimators):
        p = sigmoid(F)
        resid = y - p
        hess = p * (1.0 - p)
        leaves = []
        tree = fit_tree(X, resid, hess, hp.max_depth, hp.min_samples_leaf, leaf_out=leaves)
        step = np.empty(len(y))
        for idx, value in leaves:
            step[idx] = value
        F = F + v * step
        stages.append((tree, v))
        state.scores.append(F.copy())
        state.deviance.append(deviance(y, F))
    return GbtModel(f0, tuple(stages), hp, tuple(feature_names)), state


def train(features, labels, hp: Hyperparams = Hyperparams(), seed: int = 0, feature_names=None) -> GbtModel:
    return train_with_state(features, labels, hp, seed, feature_names)[0]


def _rows(model: GbtModel, x) -> tuple[np.ndarray, bool]:
    X = np.asarray(x, dtype=np.float64)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(
            f"expected {model.n_features} features per row, got shape {np.shape(x)}"
        )
    return X, single


def stage_contributions(model: GbtModel, x) -> np.ndarray:
    """Per-stage terms ``v * h_m(x)`` as an (M, N) array."""
    X, _ = _rows(model, x)
    return np.array([s * flat.predict(X) for (_, s), flat in zip(model.stages, model._flat)]).reshape(-1, len(X))


def predict_score(model: GbtModel, x):
    """Log-odds ``F0 + sum_m v * h_m(x)`` for one row (float) or a matrix (array)."""
    X, single = _rows(model, x)
    F = np.full(len(X), model.initial_score)
    for (_, s), flat in zip(model.stages, model._flat):
        F = F + s * flat.predict(X)
    return float(F[0]) if single else F


def predict_proba(model: GbtModel, x):
    """Wake probability."""
    return sigmoid(predict_score(model, x))


def predict_label(model: GbtModel, x, threshold: float = 0.5):
    """Wake iff probability >= threshold.

    A single row yields a ``Stage``; a matrix yields an int array (1 = wake).
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    p = predict_proba(model, x)
    if np.ndim(p) == 0:
        return Stage.WAKE if p >= threshold else Stage.SLEEP
    return (p >= threshold).astype(np.int64)


# ---------------------------------------------------------------------------
# serialization


def dumps(model: GbtModel) -> str:
    doc = {
        "format": MODEL_FORMAT,
        "initial_score": model.initial_score,
        "hyperparams": asdict(model.hyperparams),
        "feature_names": list(model.feature_names),
        "stages": [{"scale": s, "tree": t.to_dict()} for t, s in model.stages],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def loads(text: str) -> GbtModel:
    doc = json.loads(text)
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"unsupported model format {doc.get('format')!r}")
    return GbtModel(
        float(doc["initial_score"]),
        tuple((TreeNode.from_dict(st["tree"]), float(st["scale"])) for st in doc["stages"]),
        Hyperparams(**doc["hyperparams"]),
        tuple(doc["feature_names"]),
    )


def save(model: GbtModel, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(model))


def load(path) -> GbtModel:
    with open(path) as fh:
        return loads(fh.read())
