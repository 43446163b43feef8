"""Brute-force k-nearest neighbours with deterministic tie handling.

Neighbours are ranked by exact squared Euclidean distance, then by class
index, so rows that tie on both are interchangeable and the training-row
order never matters. The vote goes to the most frequent class among the k
nearest; tied classes are separated by the smaller summed distance, then by
class index.

Candidate neighbours are screened with the fast expansion
``|q|^2 + |x|^2 - 2 q.x`` (one matrix product per query block). Every row
whose screened value could still fall within the true k-th distance is
re-measured exactly, accumulating squared differences feature by feature.
"""

from __future__ import annotations

import numba
import numpy as np

BLOCK = 512
# relative rounding bound on the expansion, with a wide safety factor
SCREEN_TOL = 1e-12


@numba.njit(cache=True, nogil=True)
def _exact_sq(X, i, q):
    acc = 0.0
    for j in range(X.shape[1]):
        diff = X[i, j] - q[j]
        acc += diff * diff
    return acc


@numba.njit(cache=True, nogil=True)
def _knn_block(G, sq_q, sq_train, Q, X, y, k, n_classes, max_sq, out, offset):
    n = X.shape[0]
    top = np.empty(k)
    cand_d = np.empty(n)
    cand_c = np.empty(n, dtype=np.int64)
    counts = np.zeros(n_classes, dtype=np.int64)
    sums = np.zeros(n_classes)
    for i in range(Q.shape[0]):
        # k smallest screened values; top[0] tracks their maximum
        for j in range(k):
            top[j] = np.inf
        worst = 0
        for r in range(n):
            a = sq_q[i] + sq_train[r] - 2.0 * G[i, r]
            if a < top[worst]:
                top[worst] = a
                for j in range(k):
                    if top[j] > top[worst]:
                        worst = j
        kth = top[worst]
        tol = SCREEN_TOL * (sq_q[i] + max_sq) + 1e-300
        m = 0
        for r in range(n):
            a = sq_q[i] + sq_train[r] - 2.0 * G[i, r]
            if a <= kth + 2.0 * tol:
                cand_d[m] = _exact_sq(X, r, Q[i])
                cand_c[m] = y[r]
                m += 1
        # insertion sort by (distance, class); the candidate set is small
        for a in range(1, m):
            d = cand_d[a]
            c = cand_c[a]
            b = a - 1
            while b >= 0 and (cand_d[b] > d or (cand_d[b] == d and cand_c[b] > c)):
                cand_d[b + 1] = cand_d[b]
                cand_c[b + 1] = cand_c[b]
                b -= 1
            cand_d[b + 1] = d
            cand_c[b + 1] = c
        for c in range(n_classes):
            counts[c] = 0
            sums[c] = 0.0
        for a in range(k):
            counts[cand_c[a]] += 1
            sums[cand_c[a]] += np.sqrt(cand_d[a])
        best = 0
        for c in range(1, n_classes):
            if counts[c] > counts[best] or (counts[c] == counts[best] and sums[c] < sums[best]):
                best = c
        out[offset + i] = best


def knn_predict(
    X_train: np.ndarray, y_train: np.ndarray, X_query: np.ndarray, k: int, n_classes: int
) -> np.ndarray:
    X_train = np.ascontiguousarray(X_train, dtype=np.float64)
    y_train = np.ascontiguousarray(y_train, dtype=np.int64)
    X_query = np.ascontiguousarray(X_query, dtype=np.float64)
    n = len(X_train)
    if not 1 <= k <= n:
        raise ValueError(f"k={k} must be between 1 and the training size {n}")
    sq_train = np.einsum("ij,ij->i", X_train, X_train)
    max_sq = float(sq_train.max())
    out = np.empty(len(X_query), dtype=np.int64)
    for b in range(0, len(X_query), BLOCK):
        Q = X_query[b : b + BLOCK]
        G = Q @ X_train.T
        sq_q = np.einsum("ij,ij->i", Q, Q)
        _knn_block(G, sq_q, sq_train, Q, X_train, y_train, k, n_classes, max_sq, out, b)
    return out
