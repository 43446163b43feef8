"""Greedy binary decision trees (CART).

One builder serves both ensembles: Gini impurity on class labels for the
random forest, squared error on real targets for gradient boosting.

The builder works on presorted row orders. ``orders[f]`` lists the training
rows (repeated for bootstrap duplicates) sorted by feature ``f``; every node
owns the same contiguous slice of each order, and a split stable-partitions
those slices so children stay sorted without re-sorting.

Split thresholds are midpoints between consecutive distinct values of the
training set (rows outside a bootstrap sample included); a sample goes left
when ``x[feature] <= threshold``. A node becomes a leaf when it is
pure, hits the depth limit, or has no feature with two distinct values.
Zero-gain splits of impure nodes are taken, so unlimited-depth trees fit any
training set whose rows are distinct.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

LEAF = -1


@numba.njit(cache=True, nogil=True)
def _splitmix64(state):
    state = (state + np.uint64(0x9E3779B97F4A7C15)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = state
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = z ^ (z >> np.uint64(31))
    return state, z


@numba.njit(cache=True, nogil=True)
def _build(xs, ws, ts, cs, orders, full_x, n_rows, n_classes, regression, max_depth, max_features, seed):
    # xs, ws, ts, cs hold each feature's values, weights, targets
    # (regression) and classes (classification) in that feature's sorted
    # order. They move together with ``orders``, so split scans read memory
    # sequentially. All five arrays are consumed in place. ``full_x`` holds
    # every training value of each feature in ascending order.
    d = xs.shape[0]
    m = orders.shape[1]
    n_out = 1 if regression else n_classes
    cap = 2 * m + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros((cap, n_out))
    weight = np.zeros(cap)

    goes_left = np.zeros(n_rows, dtype=np.bool_)
    buf = np.empty(m, dtype=np.int64)
    xbuf = np.empty(m)
    wbuf = np.empty(m)
    tbuf = np.empty(m)
    cbuf = np.empty(m, dtype=np.int64)
    feats = np.arange(d)
    cl = np.zeros(n_classes)
    ctot = np.zeros(n_classes)
    state = np.uint64(seed)

    # explicit stack: node id, start, end, depth
    stack = np.empty((cap, 4), dtype=np.int64)
    top = 0
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = m
    stack[0, 3] = 0
    top = 1
    n_nodes = 1

    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]

        # node totals
        w0 = ws[0]
        wtot = 0.0
        sq = 0.0
        if regression:
            t0 = ts[0]
            s = 0.0
            pure = True
            for p in range(start, end):
                s += w0[p] * t0[p]
                wtot += w0[p]
                if t0[p] != t0[start]:
                    pure = False
            value[node, 0] = s / wtot
        else:
            c0 = cs[0]
            for k in range(n_classes):
                ctot[k] = 0.0
            for p in range(start, end):
                ctot[c0[p]] += w0[p]
                wtot += w0[p]
            nz = 0
            for k in range(n_classes):
                value[node, k] = ctot[k]
                if ctot[k] > 0:
                    nz += 1
                sq += ctot[k] * ctot[k]
            pure = nz <= 1
            s = 0.0
        weight[node] = wtot

        if pure or end - start < 2 or (max_depth >= 0 and depth >= max_depth):
            continue

        # Fisher-Yates over features; visit until max_features non-constant ones
        for i in range(d - 1, 0, -1):
            state, z = _splitmix64(state)
            j = np.int64(z % np.uint64(i + 1))
            tmp = feats[i]
            feats[i] = feats[j]
            feats[j] = tmp

        best_score = -np.inf
        best_f = -1
        best_xv = 0.0
        visited = 0
        for fi in range(d):
            if visited >= max_features:
                break
            f = feats[fi]
            xf = xs[f]
            wf = ws[f]
            if xf[start] == xf[end - 1]:
                continue
            visited += 1
            wl = 0.0
            if regression:
                tf = ts[f]
                sl = 0.0
                for p in range(start, end - 1):
                    wl += wf[p]
                    sl += wf[p] * tf[p]
                    xv = xf[p]
                    xn = xf[p + 1]
                    if xn > xv:
                        sr = s - sl
                        wr = wtot - wl
                        score = sl * sl / wl + sr * sr / wr
                        if score > best_score:
                            best_score = score
                            best_f = f
                            best_xv = xv
            else:
                cf = cs[f]
                # running sums of squared class weights on each side
                a = 0.0
                b = sq
                for k in range(n_classes):
                    cl[k] = 0.0
                for p in range(start, end - 1):
                    wp = wf[p]
                    c = cf[p]
                    cr = ctot[c] - cl[c]
                    a += (2.0 * cl[c] + wp) * wp
                    b += (wp - 2.0 * cr) * wp
                    cl[c] += wp
                    wl += wp
                    xv = xf[p]
                    xn = xf[p + 1]
                    if xn > xv:
                        score = a / wl + b / (wtot - wl)
                        if score > best_score:
                            best_score = score
                            best_f = f
                            best_xv = xv

        if best_f < 0:
            continue
        # midpoint up to the next value anywhere in the training set, so rows
        # absent from this node's sample (out-of-bag) still route by rank
        col = full_x[best_f]
        upper = col[np.searchsorted(col, best_xv, side="right")]
        best_thr = best_xv + (upper - best_xv) / 2.0
        if best_thr >= upper:
            best_thr = best_xv

        # route rows, then stable-partition every feature's slice
        ob = orders[best_f]
        xb = xs[best_f]
        n_left = 0
        for p in range(start, end):
            gl = xb[p] <= best_thr
            goes_left[ob[p]] = gl
            if gl:
                n_left += 1
        # children at the depth limit become leaves, whose totals only read
        # feature 0's slice
        n_part = 1 if (max_depth >= 0 and depth + 1 >= max_depth) else d
        for f in range(n_part):
            of = orders[f]
            xf = xs[f]
            wf = ws[f]
            tf = ts[f] if regression else ts[0]
            cf = cs[0] if regression else cs[f]
            il = start
            ir = 0
            # branchless: write to both sides, advance only the taken one
            if regression:
                for p in range(start, end):
                    r = of[p]
                    g = np.int64(goes_left[r])
                    x = xf[p]
                    wv = wf[p]
                    tv = tf[p]
                    of[il] = r
                    xf[il] = x
                    wf[il] = wv
                    tf[il] = tv
                    buf[ir] = r
                    xbuf[ir] = x
                    wbuf[ir] = wv
                    tbuf[ir] = tv
                    il += g
                    ir += 1 - g
            else:
                for p in range(start, end):
                    r = of[p]
                    g = np.int64(goes_left[r])
                    x = xf[p]
                    wv = wf[p]
                    cv = cf[p]
                    of[il] = r
                    xf[il] = x
                    wf[il] = wv
                    cf[il] = cv
                    buf[ir] = r
                    xbuf[ir] = x
                    wbuf[ir] = wv
                    cbuf[ir] = cv
                    il += g
                    ir += 1 - g
            for p in range(ir):
                of[il + p] = buf[p]
                xf[il + p] = xbuf[p]
                wf[il + p] = wbuf[p]
                if regression:
                    tf[il + p] = tbuf[p]
                else:
                    cf[il + p] = cbuf[p]

        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = lid
        right[node] = rid
        # push right first so the left subtree is expanded first
        stack[top, 0] = rid
        stack[top, 1] = start + n_left
        stack[top, 2] = end
        stack[top, 3] = depth + 1
        top += 1
        stack[top, 0] = lid
        stack[top, 1] = start
        stack[top, 2] = start + n_left
        stack[top, 3] = depth + 1
        top += 1

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
        weight[:n_nodes].copy(),
    )


@numba.njit(cache=True, nogil=True)
def _apply(feature, threshold, left, right, X):
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        node = 0
        while left[node] != -1:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


@dataclass(frozen=True, eq=False)
class Tree:
    """Flat node arrays; node 0 is the root and ``left == -1`` marks a leaf.

    ``value`` holds weighted class counts (classification) or the leaf
    output (regression) for every node, internal ones included.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.left == LEAF))

    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.left[i] != LEAF:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row of ``X``."""
        X = np.ascontiguousarray(X, dtype=np.float64)
        return _apply(self.feature, self.threshold, self.left, self.right, X)

    def predict_class(self, X: np.ndarray) -> np.ndarray:
        """Majority class of the reached leaf; ties go to the lower class index."""
        return np.argmax(self.value[self.apply(X)], axis=1)

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X), 0]

    def with_values(self, value: np.ndarray) -> "Tree":
        return Tree(self.feature, self.threshold, self.left, self.right, np.asarray(value, dtype=np.float64))

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        t = cls(
            np.asarray(d["feature"], dtype=np.int64),
            np.asarray(d["threshold"], dtype=np.float64),
            np.asarray(d["left"], dtype=np.int64),
            np.asarray(d["right"], dtype=np.int64),
            np.asarray(d["value"], dtype=np.float64),
        )
        n = len(t.feature)
        if not (len(t.threshold) == len(t.left) == len(t.right) == len(t.value) == n) or n == 0:
            raise ValueError("tree arrays have inconsistent lengths")
        if t.value.ndim != 2:
            raise ValueError("tree value must be a 2-D array")
        internal = t.left != LEAF
        kids = np.concatenate([t.left[internal], t.right[internal]])
        if kids.size and (kids.min() <= 0 or kids.max() >= n):
            raise ValueError("tree child index out of range")
        if np.any(t.right[~internal] != LEAF) or np.any(t.feature[internal] < 0):
            raise ValueError("tree node links are inconsistent")
        return t


@numba.njit(cache=True, nogil=True)
def _build_levelwise(XT, orders, xs, y, max_depth):
    d, n = XT.shape
    cap = 2 ** (max_depth + 1)
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    total = np.zeros(cap)
    count = np.zeros(cap)
    ymin = np.full(cap, np.inf)
    ymax = np.full(cap, -np.inf)
    nid = np.zeros(n, dtype=np.int64)
    row_slot = np.zeros(n, dtype=np.int32)
    for r in range(n):
        total[0] += y[r]
        count[0] += 1.0
        ymin[0] = min(ymin[0], y[r])
        ymax[0] = max(ymax[0], y[r])

    slot = np.full(cap, -1, dtype=np.int64)
    best = np.empty(cap)
    best_f = np.empty(cap, dtype=np.int64)
    best_thr = np.empty(cap)
    acc = np.empty(cap)
    accw = np.empty(cap)
    last = np.empty(cap)
    node_total = np.empty(cap)
    node_count = np.empty(cap)
    n_nodes = 1
    lo = 0  # first node id of the current level
    for depth in range(max_depth):
        hi = n_nodes
        n_open = 0
        for node in range(lo, hi):
            slot[node] = -1
            if count[node] >= 2 and ymin[node] < ymax[node]:
                slot[node] = n_open
                node_total[n_open] = total[node]
                node_count[n_open] = count[node]
                best[n_open] = -np.inf
                best_f[n_open] = -1
                n_open += 1
        if n_open == 0:
            break
        for r in range(n):
            node = nid[r]
            row_slot[r] = slot[node] if node >= lo else -1
        for f in range(d):
            of = orders[f]
            xf = xs[f]
            for k in range(n_open):
                acc[k] = 0.0
                accw[k] = 0.0
                last[k] = np.nan
            for p in range(n):
                r = of[p]
                k = row_slot[r]
                if k < 0:
                    continue
                x = xf[p]
                xv = last[k]
                if x > xv:  # false while last is nan
                    wl = accw[k]
                    sl = acc[k]
                    sr = node_total[k] - sl
                    wr = node_count[k] - wl
                    score = sl * sl / wl + sr * sr / wr
                    if score > best[k]:
                        best[k] = score
                        best_f[k] = f
                        thr = xv + (x - xv) / 2.0
                        if thr >= x:
                            thr = xv
                        best_thr[k] = thr
                acc[k] += y[r]
                accw[k] += 1.0
                last[k] = x
        for node in range(lo, hi):
            k = slot[node]
            if k < 0 or best_f[k] < 0:
                slot[node] = -1
                continue
            feature[node] = best_f[k]
            threshold[node] = best_thr[k]
            left[node] = n_nodes
            right[node] = n_nodes + 1
            n_nodes += 2
        for r in range(n):
            node = nid[r]
            if node < lo or slot[node] < 0:
                continue
            if XT[feature[node], r] <= threshold[node]:
                c = left[node]
            else:
                c = right[node]
            nid[r] = c
            total[c] += y[r]
            count[c] += 1.0
            ymin[c] = min(ymin[c], y[r])
            ymax[c] = max(ymax[c], y[r])
        lo = hi
    value = np.zeros((n_nodes, 1))
    for node in range(n_nodes):
        value[node, 0] = total[node] / count[node]
    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value,
        nid,
    )


def fit_shallow_regression_tree(
    xt: np.ndarray, orders: np.ndarray, sorted_x: np.ndarray, y: np.ndarray, max_depth: int
) -> tuple[Tree, np.ndarray]:
    """Squared-error tree grown level by level over every feature.

    Takes ``X.T`` in C order plus :func:`presort` orders and
    :func:`sorted_values`, none of which are modified, so boosting can
    reuse them for every tree. Splits follow the same rules as
    :func:`fit_tree`; equal-score candidates go to the lowest feature index,
    then the lowest threshold. Returns the tree and the leaf of each row.
    """
    if max_depth < 0:
        raise ValueError("max_depth must be non-negative")
    out = _build_levelwise(xt, orders, sorted_x, np.ascontiguousarray(y, dtype=np.float64), int(max_depth))
    return Tree(*out[:5]), out[5]


def presort(X: np.ndarray) -> np.ndarray:
    """Row indices sorted by each feature, shape ``(n_features, n_rows)``."""
    return np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T.astype(np.int64))


def sorted_values(X: np.ndarray, orders: np.ndarray) -> np.ndarray:
    """``X[orders[f], f]`` for every feature, shape ``(n_features, len)``."""
    return np.take_along_axis(np.ascontiguousarray(X.T), orders, axis=1)


def expand_orders(orders: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Orders of a resample where row ``i`` appears ``counts[i]`` times."""
    return np.ascontiguousarray(np.stack([np.repeat(o, counts[o]) for o in orders]))


def fit_tree(
    X: np.ndarray,
    y: np.ndarray,
    *,
    n_classes: int | None = None,
    regression: bool = False,
    max_depth: int | None = None,
    max_features: int | None = None,
    seed: int = 0,
    orders: np.ndarray | None = None,
    weights: np.ndarray | None = None,
    sorted_x: np.ndarray | None = None,
    full_x: np.ndarray | None = None,
) -> Tree:
    """Fit one tree.

    ``y`` holds class indices in ``[0, n_classes)`` or, with
    ``regression=True``, real targets. ``orders`` may be a precomputed
    (possibly resampled) :func:`presort` result; it is consumed in place.
    ``weights`` scale each row's contribution (used for resample counts that
    were not expanded into ``orders``). ``sorted_x`` optionally supplies
    ``X[orders[f], f]`` for every feature, for callers that fit many trees
    on the same rows; like ``orders`` it is consumed in place.

    Thresholds sit halfway between the split's left value and the next
    larger value of that feature anywhere in ``X``, so rows left out of a
    resample are still routed by rank. ``full_x`` (each feature of ``X``
    sorted, shape ``(n_features, n_rows)``) can be passed to skip the sort;
    it is only read.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    n, d = X.shape
    if n == 0:
        raise ValueError("cannot fit a tree on zero rows")
    if orders is None:
        orders = presort(X)
    if weights is None:
        weights = np.ones(n)
    weights = np.asarray(weights, dtype=np.float64)
    if sorted_x is None:
        sorted_x = sorted_values(X, orders)
    if full_x is None:
        full_x = np.sort(X.T, axis=1)
    xs = sorted_x
    ws = weights[orders]
    if regression:
        ts = np.asarray(y, dtype=np.float64)[orders]
        cs = np.zeros((1, 1), dtype=np.int64)
        k = 1
    else:
        y_cls = np.asarray(y, dtype=np.int64)
        ts = np.zeros((1, 1))
        cs = y_cls[orders]
        k = int(n_classes if n_classes is not None else y_cls.max() + 1)
    mf = d if max_features is None else int(max_features)
    md = -1 if max_depth is None else int(max_depth)
    feature, threshold, left, right, value, _ = _build(
        xs, ws, ts, cs, orders, full_x, n, k, regression, md, mf, np.uint64(seed % 2**64),
    )
    return Tree(feature, threshold, left, right, value)


def build_cart_tree(rows, labels, depth_limit=None, feature_subset=None, seed=0, n_classes=None):
    """Classification tree on ``rows`` with integer ``labels``."""
    return fit_tree(
        np.asarray(rows, dtype=np.float64).reshape(len(labels), -1),
        np.asarray(labels),
        n_classes=n_classes,
        max_depth=depth_limit,
        max_features=feature_subset,
        seed=seed,
    )
