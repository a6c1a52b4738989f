"""Bagged regression forest used as the production data rate predictor.

Standard bagged forest: per-tree bootstrap sampling, random feature subset
of size 3 at each split, variance-reduction split criterion.  Per-tree seeds
are derived as seed + tree_index so that growing the forest never changes
the prediction of already-built trees.
"""

from __future__ import annotations

import numpy as np
from sklearn.tree import DecisionTreeRegressor


class ForestRatePredictor:
    """sklearn-style estimator: fit(X, y) / predict(X) / get_params()."""

    def __init__(self, n_trees=100, max_depth=15, max_features=3, seed=0):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.max_features = max_features
        self.seed = seed
        self.trees_ = None
        self.n_features_ = None

    def get_params(self, deep=True):
        return {"n_trees": self.n_trees, "max_depth": self.max_depth,
                "max_features": self.max_features, "seed": self.seed}

    def set_params(self, **params):
        for k, v in params.items():
            if k not in self.get_params():
                raise ValueError(f"unknown parameter {k!r}")
            setattr(self, k, v)
        return self

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if X.shape[0] == 0:
            raise ValueError("empty dataset")
        if not np.all(np.isfinite(y)) or np.any(y < 0):
            raise ValueError("targets must be finite and non-negative")
        self.n_features_ = X.shape[1]
        n = X.shape[0]
        self.trees_ = []
        for i in range(self.n_trees):
            rng = np.random.default_rng(self.seed + i)
            idx = rng.integers(0, n, size=n)
            tree = DecisionTreeRegressor(
                max_depth=self.max_depth,
                max_features=min(self.max_features, self.n_features_),
                random_state=int(rng.integers(0, 2**31 - 1)),
            )
            tree.fit(X[idx], y[idx])
            self.trees_.append(tree)
        return self

    def _check_arity(self, X):
        if self.trees_ is None:
            raise RuntimeError("forest is not fitted")
        if X.ndim != 2 or X.shape[1] != self.n_features_:
            raise ValueError(
                f"feature arity mismatch: expected {self.n_features_}, "
                f"got {X.shape[1] if X.ndim == 2 else X.shape}")

    def predict(self, X):
        """Mean of per-tree predictions, clamped at >= 0."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        self._check_arity(X)
        acc = np.zeros(X.shape[0])
        for tree in self.trees_:
            acc += tree.predict(X)
        return np.maximum(acc / len(self.trees_), 0.0)

    def tree_predictions(self, X):
        """Per-tree predictions, shape (n_trees, n_samples)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        self._check_arity(X)
        return np.array([t.predict(X) for t in self.trees_])

    def save(self, path):
        """Versioned self-describing text dump (per-tree node arrays)."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("opptrans-forest v1\n")
            fh.write(f"n_features {self.n_features_}\n")
            fh.write(f"n_trees {len(self.trees_)}\n")
            for tree in self.trees_:
                t = tree.tree_
                fh.write(f"tree {t.node_count}\n")
                for j in range(t.node_count):
                    fh.write(
                        f"{t.children_left[j]} {t.children_right[j]} "
                        f"{t.feature[j]} {float(t.threshold[j])!r} "
                        f"{float(t.value[j][0][0])!r}\n")


class ArrayTreeEnsemble:
    """Forest reloaded from a save() dump; predicts via array tree walks."""

    def __init__(self, n_features, trees):
        self.n_features_ = n_features
        self.trees_ = trees     # list of (left, right, feature, thresh, value)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip()
            if header != "opptrans-forest v1":
                raise ValueError(f"unknown forest file header: {header}")
            n_features = int(fh.readline().split()[1])
            n_trees = int(fh.readline().split()[1])
            trees = []
            for _ in range(n_trees):
                node_count = int(fh.readline().split()[1])
                arr = np.array([fh.readline().split()
                                for _ in range(node_count)], dtype=float)
                trees.append((arr[:, 0].astype(int), arr[:, 1].astype(int),
                              arr[:, 2].astype(int), arr[:, 3], arr[:, 4]))
        return cls(n_features, trees)

    def predict(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features_:
            raise ValueError("feature arity mismatch")
        out = np.zeros(X.shape[0])
        for left, right, feat, thresh, value in self.trees_:
            for i, x in enumerate(X):
                j = 0
                while left[j] != -1:
                    j = left[j] if x[feat[j]] <= thresh[j] else right[j]
                out[i] += value[j]
        return np.maximum(out / len(self.trees_), 0.0)
