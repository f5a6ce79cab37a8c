"""Binary regression trees (CART, squared error) stored as flat arrays.

Split search is vectorized across candidate features: each node sorts its
rows per feature in one argsort call and scans prefix sums for the best
variance reduction. Thresholds are midpoints of adjacent observed values,
so every threshold lies strictly inside the feature's training range.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["RegressionTree", "grow_tree"]

_NO_FEATURE = -1


@dataclass
class RegressionTree:
    """Flat-array tree: node i is a leaf iff feature[i] == -1."""

    feature: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    threshold: np.ndarray = field(default_factory=lambda: np.empty(0))
    left: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    right: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    value: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def is_leaf(self, node: int) -> bool:
        return self.feature[node] == _NO_FEATURE

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Vectorized traversal of all rows at once."""
        X = np.asarray(X, dtype=float)
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] != _NO_FEATURE
        while np.any(active):
            idx = np.nonzero(active)[0]
            cur = node[idx]
            feat = self.feature[cur]
            go_left = X[idx, feat] <= self.threshold[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])
            active[idx] = self.feature[node[idx]] != _NO_FEATURE
        return self.value[node]

    def used_features(self) -> set[int]:
        return set(int(f) for f in self.feature if f != _NO_FEATURE)


class _Builder:
    def __init__(self, X, y, max_depth, min_samples_split, min_samples_leaf, max_features, rng):
        self.X = X
        self.y = y
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.rng = rng
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []

    def _new_node(self) -> int:
        self.feature.append(_NO_FEATURE)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feature) - 1

    def _candidate_features(self, p: int) -> np.ndarray:
        k = self.max_features
        if k is None or k >= p:
            return np.arange(p)
        # sorted subsample keeps the tie-break (lowest feature index wins)
        # independent of the draw order
        return np.sort(self.rng.choice(p, size=k, replace=False))

    def _best_split(self, rows: np.ndarray):
        """Return (feature, threshold, gain) or None if no valid split."""
        Xn = self.X[rows]
        yn = self.y[rows]
        m, p = Xn.shape
        feats = self._candidate_features(p)
        Xc = Xn[:, feats]
        order = np.argsort(Xc, axis=0, kind="stable")
        xs = np.take_along_axis(Xc, order, axis=0)
        ys = yn[order]

        csum = np.cumsum(ys, axis=0)
        total = csum[-1]
        # candidate boundary after position i (1-based count i+1 on the left)
        nl = np.arange(1, m, dtype=float)[:, None]
        nr = m - nl
        sl = csum[:-1]
        sr = total[None, :] - sl
        gain = sl**2 / nl + sr**2 / nr  # constant offset dropped
        valid = xs[:-1] < xs[1:]  # can only cut between distinct values
        if self.min_samples_leaf > 1:
            k = self.min_samples_leaf
            valid[: k - 1] = False
            if k > 1:
                valid[m - k :] = False
        gain = np.where(valid, gain, -np.inf)
        if not np.isfinite(gain).any():
            return None
        flat = int(np.argmax(gain))
        row, colpos = divmod(flat, gain.shape[1])
        feat = int(feats[colpos])
        thr = 0.5 * (xs[row, colpos] + xs[row + 1, colpos])
        return feat, float(thr), float(gain[row, colpos])

    def grow(self, rows: np.ndarray, depth: int) -> int:
        node = self._new_node()
        yn = self.y[rows]
        self.value[node] = float(yn.mean())
        if (
            (self.max_depth is not None and depth >= self.max_depth)
            or len(rows) < self.min_samples_split
            or len(rows) < 2 * self.min_samples_leaf
            or np.all(yn == yn[0])
        ):
            return node
        found = self._best_split(rows)
        if found is None:
            return node
        feat, thr, _ = found
        mask = self.X[rows, feat] <= thr
        left_rows = rows[mask]
        right_rows = rows[~mask]
        if len(left_rows) < self.min_samples_leaf or len(right_rows) < self.min_samples_leaf:
            return node
        self.feature[node] = feat
        self.threshold[node] = thr
        self.left[node] = self.grow(left_rows, depth + 1)
        self.right[node] = self.grow(right_rows, depth + 1)
        return node

    def build(self) -> RegressionTree:
        self.grow(np.arange(len(self.y)), 0)
        return RegressionTree(
            feature=np.array(self.feature, dtype=np.int64),
            threshold=np.array(self.threshold),
            left=np.array(self.left, dtype=np.int64),
            right=np.array(self.right, dtype=np.int64),
            value=np.array(self.value),
        )


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    max_depth: int | None = None,
    min_samples_split: int = 2,
    min_samples_leaf: int = 1,
    max_features: int | None = None,
    rng: np.random.Generator | None = None,
) -> RegressionTree:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if rng is None:
        rng = np.random.default_rng(0)
    builder = _Builder(X, y, max_depth, min_samples_split, min_samples_leaf, max_features, rng)
    return builder.build()
