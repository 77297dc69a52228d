"""Bagged CART regression forests.

Trees are grown to purity by default on bootstrap resamples; each split
maximises the reduction in within-node variance. The forest predicts the
plain mean of its trees' outputs.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numba
import numpy as np
import pandas as pd

FORMAT_VERSION = 1


class ForestSchemaError(ValueError):
    pass


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int | None = None
    min_samples_leaf: int = 1
    min_samples_split: int = 2
    max_features: str | float = "all"  # "all", "sqrt", or a fraction in (0, 1]
    bootstrap: bool = True
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be positive")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be positive or None")
        if self.min_samples_leaf < 1 or self.min_samples_split < 2:
            raise ValueError("min_samples_leaf >= 1 and min_samples_split >= 2 required")
        if isinstance(self.max_features, str):
            if self.max_features not in ("all", "sqrt"):
                raise ValueError(f"bad max_features {self.max_features!r}")
        elif not 0 < float(self.max_features) <= 1:
            raise ValueError("fractional max_features must be in (0, 1]")

    def n_candidates(self, n_features: int) -> int:
        if self.max_features == "all":
            return n_features
        if self.max_features == "sqrt":
            return max(1, int(math.sqrt(n_features)))
        return max(1, int(math.ceil(float(self.max_features) * n_features)))


@numba.njit(cache=True, nogil=True)
def _grow(X, y, max_depth, min_split, min_leaf, n_candidates, seed):
    n, n_feat = X.shape
    order = np.empty((n_feat, n), dtype=np.int64)
    for f in range(n_feat):
        order[f] = np.argsort(X[:, f], kind="mergesort")

    cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)
    n_samples = np.zeros(cap, dtype=np.int64)
    impurity = np.zeros(cap)

    goes_left = np.zeros(n, dtype=np.bool_)
    buf = np.empty(n, dtype=np.int64)
    feats = np.arange(n_feat)
    np.random.seed(seed)

    st_node = np.empty(cap, dtype=np.int64)
    st_start = np.empty(cap, dtype=np.int64)
    st_end = np.empty(cap, dtype=np.int64)
    st_depth = np.empty(cap, dtype=np.int64)
    top = 0
    st_node[0], st_start[0], st_end[0], st_depth[0] = 0, 0, n, 0
    top = 1
    n_nodes = 1

    while top > 0:
        top -= 1
        node, start, end, depth = st_node[top], st_start[top], st_end[top], st_depth[top]
        m = end - start
        seg = order[0, start:end]

        total = 0.0
        lo = y[seg[0]]
        hi = lo
        for i in range(m):
            v = y[seg[i]]
            total += v
            if v < lo:
                lo = v
            if v > hi:
                hi = v
        mean = total / m
        sq = 0.0
        for i in range(m):
            d = y[seg[i]] - mean
            sq += d * d
        value[node] = mean
        n_samples[node] = m
        impurity[node] = sq / m

        if m < min_split or m < 2 * min_leaf or depth == max_depth or lo == hi:
            continue

        # candidate features: all in index order, or a random subset sorted by index
        if n_candidates < n_feat:
            for i in range(n_feat):
                j = i + np.random.randint(n_feat - i)
                feats[i], feats[j] = feats[j], feats[i]
            feats[:n_candidates] = np.sort(feats[:n_candidates])

        best_score = -np.inf
        best_f = -1
        best_pos = -1
        k = 0
        while k < n_feat:
            if k >= n_candidates and best_f >= 0:
                break
            f = feats[k] if n_candidates < n_feat else k
            k += 1
            row = order[f]
            s_left = 0.0
            for i in range(start, end - 1):
                s_left += y[row[i]]
                n_left = i - start + 1
                n_right = m - n_left
                if n_left < min_leaf:
                    continue
                if n_right < min_leaf:
                    break
                if X[row[i + 1], f] <= X[row[i], f]:
                    continue
                s_right = total - s_left
                score = s_left * s_left / n_left + s_right * s_right / n_right
                if score > best_score:
                    best_score = score
                    best_f = f
                    best_pos = i

        if best_f < 0:
            continue

        row = order[best_f]
        a = X[row[best_pos], best_f]
        b = X[row[best_pos + 1], best_f]
        thr = 0.5 * (a + b)
        if thr >= b:
            thr = a
        n_left = best_pos - start + 1
        for i in range(start, end):
            goes_left[row[i]] = i <= best_pos
        for f in range(n_feat):
            r = order[f]
            li = start
            ri = 0
            for i in range(start, end):
                s = r[i]
                if goes_left[s]:
                    r[li] = s
                    li += 1
                else:
                    buf[ri] = s
                    ri += 1
            for i in range(ri):
                r[li + i] = buf[i]

        feature[node] = best_f
        threshold[node] = thr
        lc = n_nodes
        rc = n_nodes + 1
        n_nodes += 2
        left[node] = lc
        right[node] = rc
        # right pushed first so the left subtree is numbered first
        st_node[top], st_start[top], st_end[top], st_depth[top] = rc, start + n_left, end, depth + 1
        top += 1
        st_node[top], st_start[top], st_end[top], st_depth[top] = lc, start, start + n_left, depth + 1
        top += 1

    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy(), n_samples[:n_nodes].copy(),
            impurity[:n_nodes].copy())


@numba.njit(cache=True, nogil=True)
def _apply(feature, threshold, left, right, X):
    out = np.empty(X.shape[0], dtype=np.int64)
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


@dataclass
class RegressionTree:
    """Flat node arrays; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    impurity: np.ndarray

    ARRAYS = ("feature", "threshold", "left", "right", "value", "n_samples", "impurity")

    @classmethod
    def grow(cls, X, y, params: ForestParams, seed: int = 0) -> "RegressionTree":
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.ascontiguousarray(y, dtype=np.float64)
        depth = -1 if params.max_depth is None else params.max_depth
        arrays = _grow(X, y, depth, params.min_samples_split, params.min_samples_leaf,
                       params.n_candidates(X.shape[1]), seed)
        return cls(*arrays)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for node in range(self.n_nodes):
            if self.feature[node] >= 0:
                depth[self.left[node]] = depth[self.right[node]] = depth[node] + 1
        return int(depth.max())

    def apply(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        return _apply(self.feature, self.threshold, self.left, self.right, X)

    def predict(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def impurity_decrease(self, n_features: int) -> np.ndarray:
        """Per-feature variance decrease weighted by node sample fraction."""
        out = np.zeros(n_features)
        internal = np.flatnonzero(self.feature >= 0)
        if internal.size == 0:
            return out
        l, r = self.left[internal], self.right[internal]
        dec = (self.n_samples[internal] * self.impurity[internal]
               - self.n_samples[l] * self.impurity[l]
               - self.n_samples[r] * self.impurity[r])
        np.add.at(out, self.feature[internal], dec)
        return out / self.n_samples[0]


def _check_matrix(X, y=None):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise ValueError(f"expected a non-empty 2-D feature matrix, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise ValueError("feature matrix contains NaN or infinite values")
    if y is not None:
        y = np.asarray(y, dtype=np.float64).ravel()
        if y.shape[0] != X.shape[0]:
            raise ValueError(f"{X.shape[0]} feature rows but {y.shape[0]} targets")
        if not np.isfinite(y).all():
            raise ValueError("target contains NaN or infinite values")
    return X, y


@dataclass
class ForestModel:
    trees: list
    feature_names: list
    params: ForestParams
    target: str = ""
    all_leaf: bool = field(default=False, init=False)

    @classmethod
    def fit(cls, X, y, params: ForestParams = ForestParams(), feature_names=None, target: str = "") -> "ForestModel":
        if feature_names is None:
            feature_names = list(X.columns) if isinstance(X, pd.DataFrame) else None
        X, y = _check_matrix(X, y)
        if feature_names is None:
            feature_names = [f"x{i}" for i in range(X.shape[1])]
        n = X.shape[0]
        streams = np.random.SeedSequence(params.seed).spawn(params.n_trees)

        def one(stream):
            rng = np.random.default_rng(stream)
            tree_seed = int(rng.integers(2**31 - 1))
            if params.bootstrap:
                idx = rng.integers(0, n, size=n)
                return RegressionTree.grow(X[idx], y[idx], params, tree_seed)
            return RegressionTree.grow(X, y, params, tree_seed)

        if params.n_jobs > 1:
            with ThreadPoolExecutor(params.n_jobs) as pool:
                trees = list(pool.map(one, streams))
        else:
            trees = [one(s) for s in streams]
        return cls(trees, [str(c) for c in feature_names], params, target)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def _matrix(self, X) -> np.ndarray:
        if isinstance(X, pd.DataFrame):
            missing = [c for c in self.feature_names if c not in X.columns]
            if missing:
                raise ForestSchemaError(f"missing feature columns {missing}")
            X = X[self.feature_names]
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[1] != self.n_features:
            raise ForestSchemaError(f"model expects {self.n_features} features, got {X.shape[1]}")
        return np.ascontiguousarray(X)

    def predict_per_tree(self, X) -> np.ndarray:
        X = self._matrix(X)
        return np.stack([t.predict(X) for t in self.trees])

    def predict(self, X) -> np.ndarray:
        """Unweighted mean of the per-tree predictions."""
        return self.predict_per_tree(X).mean(axis=0)

    def feature_importances(self) -> np.ndarray:
        """Mean impurity decrease per feature, normalised to sum to one.

        A forest with no splits at all returns zeros and sets ``all_leaf``.
        """
        total = np.mean([t.impurity_decrease(self.n_features) for t in self.trees], axis=0)
        s = total.sum()
        self.all_leaf = not s > 0
        return total / s if s > 0 else total

    def importance_series(self) -> pd.Series:
        return pd.Series(self.feature_importances(), index=self.feature_names, name=self.target)

    def save(self, path) -> None:
        meta = {
            "format_version": FORMAT_VERSION,
            "params": asdict(self.params),
            "feature_names": self.feature_names,
            "target": self.target,
            "n_trees": len(self.trees),
        }
        np.savez_compressed(path, **_pack(self.trees), meta=np.array(json.dumps(meta)))

    @classmethod
    def load(cls, path) -> "ForestModel":
        with np.load(path, allow_pickle=False) as z:
            meta = json.loads(str(z["meta"]))
            if meta["format_version"] != FORMAT_VERSION:
                raise ForestSchemaError(f"unsupported model format {meta['format_version']}")
            trees = _unpack(z, "")
        return cls(trees, meta["feature_names"], ForestParams(**meta["params"]), meta["target"])


def _pack(trees, prefix: str = "") -> dict:
    sizes = np.array([t.n_nodes for t in trees], dtype=np.int64)
    out = {f"{prefix}sizes": sizes}
    for name in RegressionTree.ARRAYS:
        out[prefix + name] = np.concatenate([getattr(t, name) for t in trees])
    return out


def _unpack(z, prefix: str) -> list:
    sizes = z[f"{prefix}sizes"]
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    arrays = {name: z[prefix + name] for name in RegressionTree.ARRAYS}
    return [
        RegressionTree(*(arrays[name][a:b] for name in RegressionTree.ARRAYS))
        for a, b in zip(bounds[:-1], bounds[1:])
    ]
