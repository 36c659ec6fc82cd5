import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from h3forge.detect import (
    AnomalyModel,
    DecisionTree,
    MetricsReport,
    TreeParams,
    anomaly_classify,
    anomaly_fit,
    anomaly_score,
    auc_ovr,
    calibrate_threshold,
    evaluate,
    format_reports,
    load_model,
    predict,
    save_model,
    train_tree,
)

rng = np.random.default_rng(1234)


def separable_data(n=200):
    half = n // 2
    a = rng.normal(loc=(0.2, 0.2), scale=0.05, size=(half, 2))
    b = rng.normal(loc=(0.8, 0.8), scale=0.05, size=(n - half, 2))
    X = np.vstack([a, b])
    y = ["Normal"] * half + ["DDoS-flooding"] * (n - half)
    return X, y


# ---------------------------------------------------------------------------
# Decision tree
# ---------------------------------------------------------------------------

def test_tree_fits_separable_data_perfectly():
    X, y = separable_data(200)
    model = train_tree(X, y)
    labels, _ = predict(model, X)
    assert labels == y


def test_stump_cannot_fit_xor():
    X = np.array([[0, 0], [0, 1], [1, 0], [1, 1]] * 25, dtype=float)
    y = ["a" if (int(r[0]) ^ int(r[1])) else "b" for r in X]
    model = train_tree(X, y, TreeParams(max_depth=1, min_samples_leaf=1, min_samples_split=2))
    labels, _ = predict(model, X)
    accuracy = np.mean([p == t for p, t in zip(labels, y)])
    assert accuracy <= 0.75


def test_single_class_input_degenerates_with_warning():
    X = rng.random((20, 3))
    with pytest.warns(UserWarning):
        model = train_tree(X, ["Normal"] * 20)
    labels, scores = predict(model, X)
    assert set(labels) == {"Normal"}
    assert np.allclose(scores, 1.0)


def test_predict_scores_sum_to_one_and_deterministic():
    X, y = separable_data(120)
    model = train_tree(X, y)
    labels1, scores1 = predict(model, X)
    labels2, scores2 = predict(model, X)
    assert labels1 == labels2
    assert np.array_equal(scores1, scores2)
    assert np.allclose(scores1.sum(axis=1), 1.0)


def test_predict_rejects_schema_mismatch():
    X, y = separable_data(50)
    model = train_tree(X, y)
    with pytest.raises(ValueError):
        predict(model, np.zeros((3, 5)))


def test_tree_respects_structural_constraints():
    X = rng.random((600, 6))
    y = ["c%d" % (int(r[0] * 4) % 4) for r in X]
    params = TreeParams(max_depth=4, max_leaf_nodes=9, min_samples_leaf=5, min_samples_split=12)
    model = train_tree(X, y, params)
    leaves = model.leaves()
    assert len(leaves) <= params.max_leaf_nodes
    assert model.depth() <= params.max_depth
    assert all(leaf.counts.sum() >= params.min_samples_leaf for leaf in leaves)


def test_tree_defaults_match_published_values():
    params = TreeParams()
    assert (params.max_depth, params.max_leaf_nodes) == (200, 1000)
    assert (params.min_samples_leaf, params.min_samples_split) == (2, 10)


def test_tree_json_roundtrip(tmp_path):
    X, y = separable_data(80)
    model = train_tree(X, y)
    path = tmp_path / "tree.json"
    save_model(path, model)
    clone = load_model(path)
    assert isinstance(clone, DecisionTree)
    probe = rng.random((30, 2))
    assert predict(clone, probe)[0] == predict(model, probe)[0]


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def test_all_correct_predictions():
    truths = ["Normal", "DDoS-flooding", "DDoS-loris"] * 10
    report = evaluate(truths, truths)
    assert report.precision == 100.0
    assert report.recall == 100.0
    assert report.f1 == 100.0
    assert report.accuracy == 100.0


def test_binary_confusion_hand_oracle():
    # confusion [[2,1],[1,2]] -> accuracy 66.67, macro-F1 66.67
    truths = ["a", "a", "a", "b", "b", "b"]
    preds = ["a", "a", "b", "a", "b", "b"]
    report = evaluate(preds, truths, classes=["a", "b"])
    assert report.confusion == [[2, 1], [1, 2]]
    assert report.accuracy == pytest.approx(66.67, abs=0.01)
    assert report.f1 == pytest.approx(66.67, abs=0.01)


def test_confusion_marginals_match_counts():
    truths = ["Normal"] * 7 + ["DDoS-flooding"] * 5 + ["DDoS-loris"] * 3
    preds = ["Normal"] * 4 + ["DDoS-flooding"] * 8 + ["DDoS-loris"] * 3
    report = evaluate(preds, truths)
    confusion = np.asarray(report.confusion)
    for i, cls in enumerate(report.classes):
        assert confusion[i, :].sum() == truths.count(cls)
        assert confusion[:, i].sum() == preds.count(cls)
    assert report.accuracy == pytest.approx(100 * confusion.trace() / confusion.sum())


def test_macro_f1_invariant_under_relabeling():
    truths = ["a"] * 6 + ["b"] * 3 + ["c"] * 5
    preds = ["a", "b", "a", "c", "a", "a", "b", "b", "a", "c", "c", "b", "c", "c"]
    base = evaluate(preds, truths, classes=["a", "b", "c"])
    swap = {"a": "c", "b": "a", "c": "b"}
    swapped = evaluate([swap[p] for p in preds], [swap[t] for t in truths], classes=["a", "b", "c"])
    assert swapped.f1 == pytest.approx(base.f1)
    assert swapped.accuracy == pytest.approx(base.accuracy)


def test_fixed_class_ordering_in_confusion():
    truths = ["HTTP/2 attacks", "Normal", "DDoS-loris"]
    report = evaluate(truths, truths)
    assert report.classes == ["Normal", "DDoS-loris", "HTTP/2 attacks"]


def test_evaluate_rejects_empty_and_mismatched():
    with pytest.raises(ValueError):
        evaluate([], [])
    with pytest.raises(ValueError):
        evaluate(["a"], ["a", "b"])


def test_report_formatting_mirrors_table_columns():
    report = evaluate(["a", "b"], ["a", "b"], classes=["a", "b"], train_time=270.0)
    text = format_reports({"DT": report})
    header = text.splitlines()[0]
    for col in ("AUC", "Prec.", "Recall", "F1", "Acc", "T.t."):
        assert col in header
    assert "00:04:30" in text


# ---------------------------------------------------------------------------
# AUC
# ---------------------------------------------------------------------------

def brute_force_roc_auc(scores, positives):
    """Trapezoid integration over every distinct threshold."""
    thresholds = sorted(set(scores), reverse=True)
    pts = [(0.0, 0.0)]
    n_pos = sum(positives)
    n_neg = len(positives) - n_pos
    for thr in thresholds:
        tp = sum(1 for s, p in zip(scores, positives) if p and s >= thr)
        fp = sum(1 for s, p in zip(scores, positives) if not p and s >= thr)
        pts.append((fp / n_neg, tp / n_pos))
    pts.append((1.0, 1.0))
    area = 0.0
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return area


def test_auc_perfect_ranking():
    scores = np.array([[0.9, 0.1], [0.8, 0.2], [0.2, 0.8], [0.1, 0.9]])
    truths = ["a", "a", "b", "b"]
    assert auc_ovr(scores, truths, classes=["a", "b"]) == pytest.approx(100.0)


def test_auc_constant_scores_is_chance():
    scores = np.full((10, 2), 0.5)
    truths = ["a"] * 5 + ["b"] * 5
    assert auc_ovr(scores, truths, classes=["a", "b"]) == pytest.approx(50.0)


def test_auc_matches_brute_force_hand_example():
    pos_scores = [0.9, 0.7, 0.6, 0.3, 0.2]
    flags = [True, False, True, False, True]
    expected = brute_force_roc_auc(pos_scores, flags)
    scores = np.column_stack([1 - np.asarray(pos_scores), pos_scores])
    got = auc_ovr(scores, ["p" if f else "n" for f in flags], classes=["n", "p"])
    # macro over both classes; with complementary scores both equal the binary AUC
    assert got == pytest.approx(100 * expected)


@given(
    st.lists(st.tuples(st.floats(0, 1), st.booleans()), min_size=4, max_size=60).filter(
        lambda rows: 0 < sum(1 for _, f in rows if f) < len(rows)
    )
)
@settings(max_examples=60, deadline=None)
def test_auc_matches_brute_force_property(rows):
    scores = [s for s, _ in rows]
    flags = [f for _, f in rows]
    expected = brute_force_roc_auc(scores, flags)
    arr = np.column_stack([np.zeros(len(scores)), scores])
    got = auc_ovr(arr, ["p" if f else "n" for f in flags], classes=["ignored", "p"])
    # class "ignored" has no truths -> excluded with a warning
    assert got == pytest.approx(100 * expected, abs=1e-9)


def test_auc_invariant_under_monotone_transform():
    scores = rng.random((40, 2))
    truths = ["a" if i % 3 else "b" for i in range(40)]
    base = auc_ovr(scores, truths, classes=["a", "b"])
    transformed = np.exp(scores * 4.0) + 7.0
    assert auc_ovr(transformed, truths, classes=["a", "b"]) == pytest.approx(base)


def test_auc_warns_on_absent_class():
    scores = rng.random((10, 3))
    truths = ["a"] * 5 + ["b"] * 5
    with pytest.warns(UserWarning):
        auc_ovr(scores, truths, classes=["a", "b", "missing"])


# ---------------------------------------------------------------------------
# Anomaly baseline
# ---------------------------------------------------------------------------

def test_anomaly_score_zero_at_centroid():
    normal = rng.random((50, 46))
    model = anomaly_fit(normal)
    assert anomaly_score(model, model.centroid)[0] == pytest.approx(0.0)


def test_anomaly_score_unit_shift():
    model = AnomalyModel(centroid=np.zeros(46))
    assert anomaly_score(model, np.ones(46))[0] == pytest.approx(1.0)


def test_anomaly_translation_consistency():
    normal = rng.random((30, 10))
    model = anomaly_fit(normal)
    row = rng.random(10)
    shift = rng.random(10) * 5
    shifted_model = AnomalyModel(centroid=model.centroid + shift)
    assert anomaly_score(shifted_model, row + shift)[0] == pytest.approx(
        anomaly_score(model, row)[0]
    )


def test_anomaly_fit_requires_rows():
    with pytest.raises(ValueError):
        anomaly_fit(np.empty((0, 5)))


def shifted_dataset(n_normal=400, n_malicious=200, shift=0.5, dims=46, shifted_dims=10):
    normal = rng.random((n_normal, dims)) * 0.2
    malicious = rng.random((n_malicious, dims)) * 0.2
    malicious[:, :shifted_dims] += shift
    X = np.vstack([normal, malicious])
    flags = np.array([False] * n_normal + [True] * n_malicious)
    return X, flags


def test_anomaly_detector_on_shifted_synthetic_data():
    X, flags = shifted_dataset()
    train = X[~flags][:200]
    model = anomaly_fit(train)
    threshold = calibrate_threshold(model, X, flags)
    assert threshold > 0
    preds = anomaly_classify(model, X)
    tp = sum(1 for p, f in zip(preds, flags) if p == "Malicious" and f)
    fp = sum(1 for p, f in zip(preds, flags) if p == "Malicious" and not f)
    fn = sum(1 for p, f in zip(preds, flags) if p == "Normal" and f)
    f1 = 2 * tp / (2 * tp + fp + fn)
    assert f1 >= 0.9


def test_anomaly_calibration_requires_both_classes():
    X, _ = shifted_dataset(50, 10)
    model = anomaly_fit(X[:20])
    with pytest.raises(ValueError):
        calibrate_threshold(model, X, [False] * len(X))


def test_anomaly_json_roundtrip(tmp_path):
    X, flags = shifted_dataset(80, 40)
    model = anomaly_fit(X[~flags])
    calibrate_threshold(model, X, flags)
    path = tmp_path / "anomaly.json"
    save_model(path, model)
    clone = load_model(path)
    assert isinstance(clone, AnomalyModel)
    assert clone.threshold == model.threshold
    assert np.allclose(clone.centroid, model.centroid)
