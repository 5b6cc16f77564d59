"""Random-search the three boosting hyperparameters with shared CV folds.

Run:  python3 demos/05_random_search.py   (a few seconds)
"""

import numpy as np

from neosleep.tuning import SearchSpace, random_search

rng = np.random.default_rng(5)
n = 400
y = (np.arange(n) % 5 < 2).astype(int)
X = rng.normal(size=(n, 4))
X[:, 0] += 0.9 * y
X[:, 1] += 0.6 * y * np.sign(X[:, 2])

space = SearchSpace(n_estimators=(10, 120), max_depth=(1, 6), learning_rate=(0.01, 0.3),
                    n_candidates=12, seed=1)
best, board = random_search(X, y, space, k=5, seed=0)

print(f"{'rank':>4} {'M':>4} {'depth':>5} {'lr':>7} {'acc %':>14}")
for i, e in enumerate(board, 1):
    hp = e.hyperparams
    print(f"{i:>4} {hp.n_estimators:>4} {hp.max_depth:>5} {hp.learning_rate:>7.4f} "
          f"{e.mean_acc:>7.2f} +/- {e.sd_acc:<5.2f}")
print("best:", best)
