"""Multiclass gradient boosting with a softmax link.

Each stage fits one shallow regression tree per class to the residuals
``onehot - softmax(F)`` and sets leaf outputs with a single Newton step,
``(K - 1) / K * sum(r) / sum(|r| (1 - |r|))``. Scores start at the log
class priors.

If a full-size stage would raise the training deviance, its step is halved
until it does not (down to zero). The per-stage multiplier is stored, so the
training deviance never increases from one stage to the next.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import log_softmax, softmax

from .cart import Tree, fit_shallow_regression_tree, presort, sorted_values

MAX_HALVINGS = 30


def deviance(F: np.ndarray, y: np.ndarray) -> float:
    """Mean multinomial deviance ``-log p_y``."""
    return float(-np.mean(log_softmax(F, axis=1)[np.arange(len(y)), y]))


@dataclass(frozen=True, eq=False)
class BoostedModel:
    init: np.ndarray  # (K,)
    stages: list[list[Tree]]  # stage -> per-class trees
    scales: np.ndarray  # per-stage multiplier applied on top of the learning rate
    learning_rate: float
    train_deviance: np.ndarray  # after init, then after each stage

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        F = np.tile(self.init, (len(X), 1))
        for trees, s in zip(self.stages, self.scales):
            if s == 0.0:
                continue
            step = self.learning_rate * s
            for k, tree in enumerate(trees):
                F[:, k] += step * tree.predict_value(X)
        return F

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.decision_function(X), axis=1)


def _newton_leaves(tree: Tree, leaf_of_row: np.ndarray, r: np.ndarray, n_classes: int) -> np.ndarray:
    n_nodes = tree.n_nodes
    num = np.bincount(leaf_of_row, weights=r, minlength=n_nodes)
    den = np.bincount(leaf_of_row, weights=np.abs(r) * (1.0 - np.abs(r)), minlength=n_nodes)
    out = np.zeros(n_nodes)
    ok = den > 1e-150
    out[ok] = (n_classes - 1) / n_classes * num[ok] / den[ok]
    return out


def fit_boosting(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    n_stages: int,
    learning_rate: float,
    max_depth: int,
) -> BoostedModel:
    """Deterministic: every tree sees all rows and all features."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = len(X)
    counts = np.bincount(y, minlength=n_classes)
    if np.any(counts == 0):
        raise ValueError("every class needs at least one training row")
    init = np.log(counts / n)
    F = np.tile(init, (n, 1))
    Y = np.eye(n_classes)[y]
    base = presort(X)
    base_x = sorted_values(X, base)
    xt = np.ascontiguousarray(X.T)

    stages: list[list[Tree]] = []
    scales = []
    dev = [deviance(F, y)]
    for m in range(n_stages):
        P = softmax(F, axis=1)
        trees = []
        delta = np.zeros_like(F)
        for k in range(n_classes):
            r = Y[:, k] - P[:, k]
            tree, leaves = fit_shallow_regression_tree(xt, base, base_x, r, max_depth)
            tree = tree.with_values(_newton_leaves(tree, leaves, r, n_classes)[:, None])
            trees.append(tree)
            delta[:, k] = tree.value[leaves, 0]

        scale = 1.0
        for _ in range(MAX_HALVINGS):
            cand = deviance(F + learning_rate * scale * delta, y)
            if cand <= dev[-1]:
                break
            scale /= 2.0
        else:
            scale = 0.0
            cand = dev[-1]
        if scale:
            F = F + learning_rate * scale * delta
        stages.append(trees)
        scales.append(scale)
        dev.append(cand)
    return BoostedModel(init, stages, np.array(scales), learning_rate, np.array(dev))
