"""Fit the boosted-tree classifier and watch the training deviance fall.

Run:  python3 demos/03_boosting.py
"""

import numpy as np

from neosleep import boosting
from neosleep.boosting import Hyperparams

rng = np.random.default_rng(0)
n = 600
y = (rng.random(n) < 0.4).astype(int)
X = rng.normal(size=(n, 3))
X[:, 0] += 1.5 * y          # one informative feature
X[:, 1] += 0.5 * y * X[:, 2]  # a weak interaction

hp = Hyperparams(n_estimators=149, max_depth=3, learning_rate=0.104)
model, state = boosting.train_with_state(X, y, hp, feature_names=["a", "b", "c"])

print(f"F0 = {model.initial_score:.4f} (log-odds of the 40% prior)")
for m in (0, 1, 5, 20, 50, 100, 149):
    print(f"  stage {m:3d}  deviance {state.deviance[m]:.4f}")

# the logged scores replay exactly from the truncated model
m = 37
assert np.array_equal(state.scores[m], boosting.predict_score(model.truncated(m), X))

pred = boosting.predict_label(model, X)
print(f"training accuracy {100 * np.mean(pred == y):.1f}%")
print("single epoch ->", boosting.predict_label(model, X[0]))

text = boosting.dumps(model)
assert boosting.loads(text) == model
print(f"serialized model: {len(text)} bytes")
