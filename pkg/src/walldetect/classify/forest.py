"""Random forest: bagged CART trees with per-split feature subsampling."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numba
import numpy as np

from .cart import Tree, fit_tree, presort, sorted_values
from .seeding import derive_seed


def fit_forest(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    n_trees: int,
    max_depth: int | None,
    max_features: int,
    seed: int,
    n_jobs: int = 1,
) -> list[Tree]:
    """Tree ``i`` draws its bootstrap and feature choices from ``(seed, i)``
    alone, so the forest does not depend on ``n_jobs``."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    n = len(X)
    base = presort(X)
    base_x = sorted_values(X, base)
    d = X.shape[1]

    def one(i: int) -> Tree:
        rng = np.random.default_rng(derive_seed(seed, i))
        counts = np.bincount(rng.integers(0, n, n), minlength=n).astype(np.float64)
        tree_seed = int(rng.integers(0, 2**63))
        # in-bag rows only, resample multiplicity as weights
        inbag = counts[base] > 0
        orders = base[inbag].reshape(d, -1)
        sorted_x = base_x[inbag].reshape(d, -1)
        return fit_tree(
            X, y, n_classes=n_classes, max_depth=max_depth, max_features=max_features,
            seed=tree_seed, orders=orders, weights=counts, sorted_x=sorted_x, full_x=base_x,
        )

    if n_jobs == 1:
        return [one(i) for i in range(n_trees)]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(one, range(n_trees)))


@numba.njit(cache=True, nogil=True)
def _forest_votes(feature, threshold, left, right, leaf_class, roots, X, n_classes):
    n = X.shape[0]
    votes = np.zeros((n, n_classes), dtype=np.int64)
    for t in range(roots.shape[0]):
        root = roots[t]
        for i in range(n):
            node = root
            while left[node] != -1:
                if X[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            votes[i, leaf_class[node]] += 1
    return votes


class PackedForest:
    """All trees concatenated into flat arrays for fast voting."""

    def __init__(self, trees: list[Tree], n_classes: int):
        offsets = np.cumsum([0] + [t.n_nodes for t in trees[:-1]]).astype(np.int64)
        def shift(a, off):
            return np.where(a == -1, -1, a + off)
        self.roots = offsets
        self.feature = np.concatenate([t.feature for t in trees])
        self.threshold = np.concatenate([t.threshold for t in trees])
        self.left = np.concatenate([shift(t.left, o) for t, o in zip(trees, offsets)])
        self.right = np.concatenate([shift(t.right, o) for t, o in zip(trees, offsets)])
        # each leaf votes for its majority class, lowest index on ties
        self.leaf_class = np.concatenate([np.argmax(t.value, axis=1) for t in trees]).astype(np.int64)
        self.n_classes = n_classes

    def votes(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        return _forest_votes(
            self.feature, self.threshold, self.left, self.right, self.leaf_class,
            self.roots, X, self.n_classes,
        )

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.votes(X), axis=1)
