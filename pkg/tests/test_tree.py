from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import brute_force_split, gini_exact
from wfpred.learn.tree import (
    RandomForest,
    best_split,
    gini_impurity,
    grow_forest,
    grow_tree,
    sqrt_features,
    tree_seeds,
)


@pytest.mark.parametrize("counts,expected", [([10, 0], 0.0), ([5, 5], 0.5), ([3, 1], 0.375)])
def test_gini_examples(counts, expected):
    assert gini_impurity(counts) == expected


def test_gini_rejects_empty():
    with pytest.raises(ValueError):
        gini_impurity([0, 0])


@given(st.lists(st.integers(0, 50), min_size=2, max_size=4).filter(any), st.integers(1, 20))
def test_gini_scale_invariant_and_exact(counts, k):
    g = gini_impurity(counts)
    assert g == pytest.approx(gini_impurity([c * k for c in counts]), abs=1e-15)
    assert g == pytest.approx(float(gini_exact(counts)), abs=1e-15)
    if len(counts) == 2:
        assert 0.0 <= g <= 0.5


def test_separable_split():
    s = best_split(np.array([[0.0], [0.0], [1.0], [1.0]]), np.array([0, 0, 1, 1]))
    assert (s.feature, s.threshold, s.impurity_decrease) == (0, 0.5, 0.5)


def test_constant_feature_has_no_split():
    assert best_split(np.full((5, 1), 3.0), np.array([0, 1, 0, 1, 1])) is None


def test_pure_node_has_no_split():
    assert best_split(np.arange(6.0).reshape(3, 2), np.array([1, 1, 1])) is None


def test_tie_goes_to_lower_feature():
    X = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [1.0, 1.0]])
    s = best_split(X, np.array([0, 0, 1, 1]))
    assert s.feature == 0


def test_tie_goes_to_lower_threshold():
    # thresholds 0.5 and 2.5 both isolate a pure pair from a mixed remainder
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([0, 1, 0, 1])
    ref = brute_force_split(X.tolist(), y.tolist())
    s = best_split(X, y)
    assert (s.feature, s.threshold) == (ref[0], ref[1])


def test_candidate_restriction():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([0, 1, 0, 1])
    assert best_split(X, y).feature == 1
    assert best_split(X, y, candidate_features=[0]) is None


def _matches_oracle(X, y):
    ref = brute_force_split(X.tolist(), y.tolist())
    got = best_split(X, y)
    if ref is None:
        return got is None
    return (got is not None and got.feature == ref[0] and got.threshold == ref[1]
            and abs(got.impurity_decrease - float(ref[2])) < 1e-12)


small_datasets = st.integers(2, 12).flatmap(lambda n: st.tuples(
    st.lists(st.lists(st.sampled_from([0.0, 1.0, 0.5, 2.0, -1.0, 3.25]), min_size=1, max_size=4)
             .map(tuple), min_size=n, max_size=n).filter(lambda rows: len({len(r) for r in rows}) == 1),
    st.lists(st.integers(0, 1), min_size=n, max_size=n)))


@given(small_datasets)
def test_best_split_equals_brute_force(data):
    rows, y = data
    assert _matches_oracle(np.array(rows), np.array(y, dtype=np.int8))


def test_best_split_equals_brute_force_on_mixed_columns():
    rng = np.random.default_rng(3)
    for _ in range(100):
        n, d = rng.integers(2, 13), rng.integers(1, 5)
        X = rng.integers(0, 3, size=(n, d)).astype(float)
        X[:, 0] = rng.integers(0, 2, size=n)  # one 0/1 column
        y = rng.integers(0, 2, size=n)
        assert _matches_oracle(X, y)


def test_gain_fraction_oracle_exact():
    X = [[1.0], [2.0], [3.0], [4.0], [5.0]]
    y = [0, 0, 1, 1, 1]
    ref = brute_force_split(X, y)
    assert ref == (0, 2.5, Fraction(12, 25))
    assert best_split(np.array(X), np.array(y)).impurity_decrease == pytest.approx(0.48, abs=1e-15)


def _random_set(rng, n=20, d=4):
    X = rng.normal(size=(n, d))
    X[:, -1] = rng.integers(0, 2, size=n)
    return X, rng.integers(0, 2, size=n).astype(np.int8)


def test_tree_reproduces_training_labels():
    rng = np.random.default_rng(0)
    X, y = _random_set(rng)
    tree = grow_tree(X, y)
    assert np.array_equal(tree.predict(X), y)
    assert np.all(tree.counts[tree.apply(X)].min(axis=1) == 0)  # pure leaves


def test_leaf_counts_respect_min_leaf():
    rng = np.random.default_rng(1)
    X, y = _random_set(rng, n=60)
    tree = grow_tree(X, y, min_samples_leaf=5)
    leaves = tree.left < 0
    assert tree.counts[leaves].sum(axis=1).min() >= 5
    assert tree.counts[0].sum() == 60


def test_max_depth_limits_tree():
    rng = np.random.default_rng(2)
    X, y = _random_set(rng, n=80)
    assert grow_tree(X, y, max_depth=1).n_nodes <= 3


def test_tree_dict_round_trip():
    rng = np.random.default_rng(4)
    X, y = _random_set(rng)
    tree = grow_tree(X, y)
    back = type(tree).from_dict(tree.to_dict())
    assert np.array_equal(back.predict_proba(X), tree.predict_proba(X))


def test_tree_check_rejects_bad_children():
    rng = np.random.default_rng(5)
    tree = grow_tree(*_random_set(rng))
    doc = tree.to_dict()
    doc["left"][0] = 0
    with pytest.raises(ValueError):
        type(tree).from_dict(doc)


@pytest.mark.parametrize("seed", range(20))
def test_degenerate_forest_equals_tree(seed):
    rng = np.random.default_rng(100 + seed)
    X, y = _random_set(rng, n=int(rng.integers(5, 40)), d=int(rng.integers(1, 6)))
    forest = grow_forest(X, y, n_trees=1, max_features=None, bootstrap=False, seed=seed)
    tree = grow_tree(X, y)
    probe = np.vstack([X, rng.normal(size=(50, X.shape[1]))])
    assert np.array_equal(forest.predict(probe), tree.predict(probe))


def test_forest_is_deterministic():
    rng = np.random.default_rng(6)
    X, y = _random_set(rng, n=100, d=6)
    a = grow_forest(X, y, n_trees=5, seed=9)
    b = grow_forest(X, y, n_trees=5, seed=9)
    for ta, tb in zip(a.trees, b.trees):
        assert ta.to_dict() == tb.to_dict()
    c = grow_forest(X, y, n_trees=5, seed=10)
    assert any(ta.to_dict() != tc.to_dict() for ta, tc in zip(a.trees, c.trees))


def test_tree_seeds_depend_only_on_seed_and_index():
    assert tree_seeds(7, 5)[:3] == tree_seeds(7, 3)
    assert len(set(tree_seeds(7, 50))) == 50


def test_sqrt_features():
    assert [sqrt_features(d) for d in (1, 4, 5, 100)] == [1, 2, 3, 10]


def test_pure_signal_votes():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(300, 6))
    y = (X[:, 2] > 0.1).astype(np.int8)
    forest = grow_forest(X, y, n_trees=30, seed=1)
    score = forest.predict_proba(X)
    agree = np.where(y == 1, score, 1.0 - score)
    assert agree.min() >= 0.9


def test_vote_tie_predicts_success():
    leaf_yes = grow_tree(np.array([[0.0], [1.0]]), np.array([1, 1], dtype=np.int8))
    leaf_no = grow_tree(np.array([[0.0], [1.0]]), np.array([0, 0], dtype=np.int8))
    forest = RandomForest([leaf_yes, leaf_no], [(0, 0), (1, 1)])
    assert forest.predict_proba(np.zeros((1, 1)))[0] == 0.5
    assert forest.predict(np.zeros((1, 1)))[0] == 0
