"""CART decision trees and random forests with Gini splits.

Tree growth runs in numba-compiled kernels. Splits are evaluated at midpoints
between consecutive distinct values; ties in impurity decrease go to the
lower feature index, then the lower threshold. A row goes left when its
value is ``<= threshold``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

# Gains at or below this are round-off, not an impurity decrease.
MIN_GAIN = 1e-12
# gains closer than this are ties (mathematically equal gains can differ by an ulp)
TIE_EPS = 1e-12


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    impurity_decrease: float


def gini_impurity(class_counts) -> float:
    counts = [int(c) for c in class_counts]
    if any(c < 0 for c in counts):
        raise ValueError("class counts must be non-negative")
    total = sum(counts)
    if total == 0:
        raise ValueError("gini impurity of an empty node is undefined")
    acc = 0.0
    for c in counts:
        p = c / total
        acc = acc + p * p
    return 1.0 - acc


@njit(cache=True)
def _gini2(a, b):
    t = a + b
    pa = a / t
    pb = b / t
    return 1.0 - (pa * pa + pb * pb)


@njit(cache=True)
def _next_random(state):
    # xorshift64*
    x = state[0]
    x ^= x >> np.uint64(12)
    x ^= x << np.uint64(25)
    x ^= x >> np.uint64(27)
    state[0] = x
    return x * np.uint64(2685821657736338717)


@njit(cache=True)
def _rand_below(state, k):
    return np.int64((_next_random(state) >> np.uint64(11)) % np.uint64(k))


@njit(cache=True)
def _seed_state(seed):
    # splitmix64 so that small seeds still give a well-mixed non-zero state
    z = np.uint64(seed) + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    if z == np.uint64(0):
        z = np.uint64(1)
    state = np.empty(1, dtype=np.uint64)
    state[0] = z
    return state


@njit(cache=True)
def _tally_binary(y, work, start, end, indptr, indices, ones, ones1, touched):
    """Per binary feature, count rows in the node with value 1 (and label 1)."""
    nt = 0
    for i in range(start, end):
        r = work[i]
        for p in range(indptr[r], indptr[r + 1]):
            f = indices[p]
            if ones[f] == 0:
                touched[nt] = f
                nt += 1
            ones[f] += 1
            ones1[f] += y[r]
    return nt


@njit(cache=True)
def _better(gain, f, t, best_gain, best_f, best_t):
    if gain > best_gain + TIE_EPS:
        return True
    if gain < best_gain - TIE_EPS:
        return False
    return f < best_f or (f == best_f and t < best_t)


@njit(cache=True)
def _find_split(X, y, work, start, end, binary, indptr, indices, ones, ones1, touched,
                order, limit, sample, state, min_leaf, vals, labs):
    """Best (feature, threshold, gain) over the node ``work[start:end]``.

    Features are taken from ``order`` (shuffled lazily when ``sample``);
    features constant within the node are skipped without counting toward
    ``limit``. Returns feature -1 when nothing decreases impurity.
    """
    m = end - start
    n1 = 0
    for i in range(start, end):
        n1 += y[work[i]]
    n0 = m - n1
    parent = _gini2(float(n0), float(n1))
    nt = _tally_binary(y, work, start, end, indptr, indices, ones, ones1, touched)
    best_f = -1
    best_t = 0.0
    best_gain = -1.0
    d = order.shape[0]
    counted = 0
    for k in range(d):
        if counted >= limit:
            break
        if sample:
            j = k + _rand_below(state, d - k)
            tmp = order[k]
            order[k] = order[j]
            order[j] = tmp
        f = order[k]
        if binary[f]:
            # left child holds the zeros
            nl = m - ones[f]
            if nl == 0 or nl == m:
                continue
            counted += 1
            nr = m - nl
            if nl < min_leaf or nr < min_leaf:
                continue
            l1 = n1 - ones1[f]
            l0 = nl - l1
            gain = parent - (nl / m) * _gini2(float(l0), float(l1)) \
                - (nr / m) * _gini2(float(n0 - l0), float(n1 - l1))
            if _better(gain, f, 0.5, best_gain, best_f, best_t):
                best_gain = gain
                best_f = f
                best_t = 0.5
        else:
            for i in range(m):
                r = work[start + i]
                vals[i] = X[r, f]
                labs[i] = y[r]
            idx = np.argsort(vals[:m], kind="mergesort")
            if vals[idx[0]] == vals[idx[m - 1]]:
                continue
            counted += 1
            l0 = 0
            l1 = 0
            for p in range(m - 1):
                if labs[idx[p]] == 1:
                    l1 += 1
                else:
                    l0 += 1
                a = vals[idx[p]]
                b = vals[idx[p + 1]]
                if a == b:
                    continue
                nl = p + 1
                nr = m - nl
                if nl < min_leaf or nr < min_leaf:
                    continue
                gain = parent - (nl / m) * _gini2(float(l0), float(l1)) \
                    - (nr / m) * _gini2(float(n0 - l0), float(n1 - l1))
                t = (a + b) / 2.0
                if t == b:
                    t = a
                if _better(gain, f, t, best_gain, best_f, best_t):
                    best_gain = gain
                    best_f = f
                    best_t = t
    for i in range(nt):
        ones[touched[i]] = 0
        ones1[touched[i]] = 0
    if best_f < 0 or best_gain <= MIN_GAIN:
        return -1, 0.0, 0.0
    return best_f, best_t, best_gain


@njit(cache=True)
def _grow(X, y, samples, binary, indptr, indices, max_features, min_leaf, max_depth, seed):
    n = samples.shape[0]
    d = X.shape[1]
    cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    counts = np.zeros((cap, 2), dtype=np.int64)
    st_start = np.empty(cap, dtype=np.int64)
    st_end = np.empty(cap, dtype=np.int64)
    st_node = np.empty(cap, dtype=np.int64)
    st_depth = np.empty(cap, dtype=np.int64)
    work = samples.copy()
    scratch = np.empty(n, dtype=np.int64)
    vals = np.empty(n, dtype=np.float64)
    labs = np.empty(n, dtype=np.int8)
    ones = np.zeros(d, dtype=np.int64)
    ones1 = np.zeros(d, dtype=np.int64)
    touched = np.empty(d, dtype=np.int64)
    order = np.arange(d)
    sample = max_features < d
    limit = max_features if sample else d
    state = _seed_state(seed)

    n_nodes = 1
    st_start[0] = 0
    st_end[0] = n
    st_node[0] = 0
    st_depth[0] = 0
    top = 1
    while top > 0:
        top -= 1
        start = st_start[top]
        end = st_end[top]
        node = st_node[top]
        depth = st_depth[top]
        m = end - start
        n1 = 0
        for i in range(start, end):
            n1 += y[work[i]]
        counts[node, 0] = m - n1
        counts[node, 1] = n1
        if n1 == 0 or n1 == m or m < 2 * min_leaf or m < 2:
            continue
        if max_depth >= 0 and depth >= max_depth:
            continue
        if not sample:
            for k in range(d):
                order[k] = k
        f, t, gain = _find_split(X, y, work, start, end, binary, indptr, indices, ones, ones1,
                                 touched, order, limit, sample, state, min_leaf, vals, labs)
        if f < 0:
            continue
        # partition the node's rows in place: left block first, order kept
        nl = 0
        for i in range(start, end):
            if X[work[i], f] <= t:
                nl += 1
        li = 0
        ri = nl
        for i in range(start, end):
            r = work[i]
            if X[r, f] <= t:
                scratch[li] = r
                li += 1
            else:
                scratch[ri] = r
                ri += 1
        for i in range(m):
            work[start + i] = scratch[i]
        feature[node] = f
        threshold[node] = t
        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        left[node] = lid
        right[node] = rid
        st_start[top] = start + nl
        st_end[top] = end
        st_node[top] = rid
        st_depth[top] = depth + 1
        top += 1
        st_start[top] = start
        st_end[top] = start + nl
        st_node[top] = lid
        st_depth[top] = depth + 1
        top += 1
    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), counts[:n_nodes].copy())


@njit(cache=True)
def _apply(X, feature, threshold, left, right):
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        node = 0
        while left[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


def binary_columns(X: np.ndarray) -> np.ndarray:
    """True for columns whose values are all exactly 0 or 1."""
    if X.shape[0] == 0:
        return np.zeros(X.shape[1], dtype=np.bool_)
    return np.all((X == 0.0) | (X == 1.0), axis=0)


def active_binary(X: np.ndarray, binary: np.ndarray):
    """CSR (indptr, indices) of the binary columns equal to 1 in each row."""
    cols = np.flatnonzero(binary)
    rows, j = np.nonzero(X[:, cols] == 1.0)
    indptr = np.zeros(X.shape[0] + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=X.shape[0]), out=indptr[1:])
    return indptr, cols[j].astype(np.int64)


def best_split(X, y, candidate_features=None, min_samples_leaf: int = 1):
    """Exhaustive best Gini split of ``(X, y)`` restricted to some features."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int8)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be 2-D with one label per row")
    if X.shape[0] < 2:
        return None
    if candidate_features is None:
        candidate_features = range(X.shape[1])
    feats = np.array(sorted(set(int(f) for f in candidate_features)), dtype=np.int64)
    if feats.size == 0:
        return None
    n, d = X.shape
    binary = binary_columns(X)
    indptr, indices = active_binary(X, binary)
    f, t, gain = _find_split(
        X, y, np.arange(n, dtype=np.int64), 0, n, binary, indptr, indices,
        np.zeros(d, dtype=np.int64), np.zeros(d, dtype=np.int64), np.empty(d, dtype=np.int64),
        feats, feats.size, False, _seed_state(0), min_samples_leaf, np.empty(n),
        np.empty(n, dtype=np.int8))
    if f < 0:
        return None
    return Split(int(f), float(t), float(gain))


@dataclass
class DecisionTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # (n_nodes, 2) class counts of training rows reaching each node

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    def apply(self, X) -> np.ndarray:
        return _apply(np.asarray(X, dtype=np.float64), self.feature, self.threshold,
                      self.left, self.right)

    def predict_proba(self, X) -> np.ndarray:
        c = self.counts[self.apply(X)]
        return c[:, 1] / c.sum(axis=1)

    def predict(self, X) -> np.ndarray:
        # an evenly split leaf predicts success
        c = self.counts[self.apply(X)]
        return (c[:, 1] > c[:, 0]).astype(np.int8)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "counts": self.counts.tolist(),
        }

    @classmethod
    def from_dict(cls, doc) -> "DecisionTree":
        tree = cls(
            np.asarray(doc["feature"], dtype=np.int64),
            np.asarray(doc["threshold"], dtype=np.float64),
            np.asarray(doc["left"], dtype=np.int64),
            np.asarray(doc["right"], dtype=np.int64),
            np.asarray(doc["counts"], dtype=np.int64).reshape(-1, 2),
        )
        tree.check()
        return tree

    def check(self) -> None:
        n = self.n_nodes
        if n == 0 or not (self.threshold.shape[0] == self.left.shape[0]
                          == self.right.shape[0] == self.counts.shape[0] == n):
            raise ValueError("inconsistent tree arrays")
        internal = self.left >= 0
        if np.any(self.right[internal] < 0) or np.any(self.left >= n) or np.any(self.right >= n):
            raise ValueError("bad child index")
        if np.any(self.left[internal] <= np.flatnonzero(internal)):
            raise ValueError("child index must follow its parent")


def grow_tree(X, y, samples=None, binary=None, max_features=None, min_samples_leaf=1,
              max_depth=None, seed=0, active=None) -> DecisionTree:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int8)
    n, d = X.shape
    if samples is None:
        samples = np.arange(n, dtype=np.int64)
    if binary is None:
        binary = binary_columns(X)
    if active is None:
        active = active_binary(X, binary)
    k = d if max_features is None else int(max_features)
    k = max(1, min(k, d))
    arrays = _grow(X, y, np.asarray(samples, dtype=np.int64), binary, active[0], active[1], k,
                   int(min_samples_leaf), -1 if max_depth is None else int(max_depth),
                   np.uint64(seed))
    return DecisionTree(*arrays)


def sqrt_features(d: int) -> int:
    return max(1, math.ceil(math.sqrt(d)))


def tree_seeds(seed: int, n_trees: int) -> list:
    """(bootstrap seed, feature-sampling seed) for each tree, from (seed, tree index)."""
    out = []
    for i in range(n_trees):
        a, b = np.random.SeedSequence([int(seed), i]).generate_state(2, dtype=np.uint64)
        out.append((int(a), int(b)))
    return out


@dataclass
class RandomForest:
    trees: list
    seeds: list

    def votes(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        v = np.zeros(X.shape[0], dtype=np.int64)
        for t in self.trees:
            v += t.predict(X)
        return v

    def predict_proba(self, X) -> np.ndarray:
        return self.votes(X) / len(self.trees)

    def predict(self, X) -> np.ndarray:
        # exact ties (score 0.5) predict success
        return (2 * self.votes(X) > len(self.trees)).astype(np.int8)


def grow_forest(X, y, n_trees=100, max_features="sqrt", bootstrap=True, seed=0,
                min_samples_leaf=1, max_depth=None) -> RandomForest:
    X = np.asfortranarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int8)
    n, d = X.shape
    if max_features == "sqrt":
        k = sqrt_features(d)
    elif max_features is None:
        k = d
    else:
        k = int(max_features)
    binary = binary_columns(X)
    active = active_binary(X, binary)
    seeds = tree_seeds(seed, n_trees)
    trees = []
    for boot_seed, split_seed in seeds:
        if bootstrap:
            samples = np.random.default_rng(boot_seed).integers(0, n, size=n)
        else:
            samples = np.arange(n, dtype=np.int64)
        trees.append(grow_tree(X, y, samples, binary, k, min_samples_leaf, max_depth,
                               split_seed, active))
    return RandomForest(trees, seeds)


def warmup() -> None:
    """Compile the kernels so later timings exclude JIT cost."""
    X = np.array([[0.0, 1.0], [1.0, 0.5], [0.0, 2.0], [1.0, 3.0]])
    y = np.array([0, 1, 0, 1], dtype=np.int8)
    grow_forest(X, y, n_trees=2, seed=0).predict(X)
    best_split(X, y)
