import json

import numpy as np
import pytest

from wfpred.errors import ContractError, ModelFormatError, SchemaMismatchError
from wfpred.evaluation import evaluate
from wfpred.features import encode, fit_schema
from wfpred.learn import KINDS, ModelSpec, Prediction, load_model, predict, save_model, train


@pytest.fixture(scope="module")
def encoded(small_filtered):
    half = small_filtered.take(range(len(small_filtered) // 2))
    rest = small_filtered.take(range(len(small_filtered) // 2, len(small_filtered)))
    schema = fit_schema(half, "runtime")
    return encode(half, schema), encode(rest, schema)


@pytest.fixture(scope="module")
def models(encoded):
    data, _ = encoded
    return {k: train(ModelSpec(k, rf_n_trees=10, seed=3), data) for k in KINDS}


@pytest.mark.parametrize("kind", KINDS)
def test_round_trip_is_bit_identical(tmp_path, encoded, models, kind):
    model = models[kind]
    path = tmp_path / f"{kind}.json"
    save_model(model, path)
    back = load_model(path)
    rows = np.random.default_rng(0).normal(size=(1000, model.n_features))
    a_lab, a_score = model.predict_batch(rows)
    b_lab, b_score = back.predict_batch(rows)
    assert np.array_equal(a_lab, b_lab)
    assert a_score.tobytes() == b_score.tobytes()
    assert back.spec == model.spec
    assert back.schema_fingerprint == model.schema_fingerprint


@pytest.mark.parametrize("kind", KINDS)
def test_scores_are_probabilities(encoded, models, kind):
    _, test = encoded
    labels, scores = models[kind].predict_batch(test.rows)
    assert np.all((scores >= 0) & (scores <= 1))
    assert set(np.unique(labels)) <= {0, 1}


def test_rf_keeps_tree_count_and_seeds(models):
    forest = models["rf"].estimator
    assert len(forest.trees) == 10 == len(forest.seeds)


def test_single_row_predict(encoded, models):
    _, test = encoded
    p = predict(models["lr"], test.rows[0])
    assert isinstance(p, Prediction)
    assert p.label in (0, 1) and 0.0 <= p.score <= 1.0


def test_training_is_reproducible(encoded):
    data, _ = encoded
    spec = ModelSpec("rf", rf_n_trees=4, seed=11)
    a, b = train(spec, data), train(spec, data)
    assert [t.to_dict() for t in a.estimator.trees] == [t.to_dict() for t in b.estimator.trees]


def test_degenerate_rf_spec_matches_dt(encoded):
    data, test = encoded
    rf = train(ModelSpec("rf", rf_n_trees=1, rf_bootstrap=False, rf_max_features=None), data)
    dt = train(ModelSpec("dt"), data)
    assert np.array_equal(rf.predict_batch(test.rows)[0], dt.predict_batch(test.rows)[0])


def test_dimension_mismatch(models):
    with pytest.raises(SchemaMismatchError):
        models["gnb"].predict_batch(np.zeros((2, models["gnb"].n_features + 1)))


def test_queue_model_rejects_runtime_data(small_filtered, encoded):
    data, test = encoded
    queue_schema = fit_schema(small_filtered.take(range(len(data))), "queue")
    queue_model = train(ModelSpec("gnb"), encode(small_filtered.take(range(len(data))), queue_schema))
    with pytest.raises(SchemaMismatchError):
        evaluate(queue_model, test)


def test_train_rejects_schema_width_mismatch(encoded):
    data, _ = encoded
    bad = type(data)(data.rows[:, :-1], data.labels, data.schema)
    with pytest.raises(SchemaMismatchError):
        train(ModelSpec("gnb"), bad)


def test_lr_and_lda_need_both_classes(encoded):
    data, _ = encoded
    one = type(data)(data.rows, np.zeros_like(data.labels), data.schema)
    for kind in ("lr", "lda"):
        with pytest.raises(ContractError):
            train(ModelSpec(kind), one)
    for kind in ("gnb", "dt"):
        assert np.all(train(ModelSpec(kind), one).predict_batch(data.rows)[0] == 0)


@pytest.mark.parametrize("bad", [
    {"kind": "svm"}, {"kind": "lr", "lr_c": 0.0}, {"kind": "rf", "rf_n_trees": 0},
    {"kind": "dt", "dt_criterion": "entropy"}, {"kind": "rf", "colour": "red"},
])
def test_spec_validation(bad):
    with pytest.raises(ContractError):
        ModelSpec.from_dict(bad)


def test_spec_defaults():
    spec = ModelSpec("rf")
    assert (spec.lr_c, spec.rf_n_trees, spec.rf_max_features) == (0.1, 100, "sqrt")


@pytest.mark.parametrize("content", [
    "", "{not json", "[]", json.dumps({"format": "something-else"}),
    json.dumps({"format": "wfpred-model", "version": 99}),
    json.dumps({"format": "wfpred-model", "version": 1, "spec": {"kind": "dt"}}),
])
def test_corrupt_files_raise_format_error(tmp_path, content):
    path = tmp_path / "m.json"
    path.write_text(content)
    with pytest.raises(ModelFormatError):
        load_model(path)


def test_truncated_model_file(tmp_path, models):
    path = tmp_path / "m.json"
    save_model(models["rf"], path)
    text = path.read_text()
    path.write_text(text[: len(text) // 2])
    with pytest.raises(ModelFormatError):
        load_model(path)


def test_tampered_tree_is_rejected(tmp_path, models):
    path = tmp_path / "m.json"
    save_model(models["dt"], path)
    doc = json.loads(path.read_text())
    doc["params"]["left"][0] = 10 ** 6
    path.write_text(json.dumps(doc))
    with pytest.raises(ModelFormatError):
        load_model(path)


def test_missing_model_file(tmp_path):
    with pytest.raises(ModelFormatError):
        load_model(tmp_path / "absent.json")
