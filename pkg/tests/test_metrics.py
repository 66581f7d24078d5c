import numpy as np
import pytest
from hypothesis import given, strategies as st

from veval.metrics import confusion_to_csv, evaluate, majority_baseline
from veval.store import DataError

LABELS3 = ("entailment", "neutral", "contradiction")
LABELS2 = ("entailment", "contradiction")


def oracle_report(gold, pred, label_order):
    """Dict-counting reference for confusion, accuracy, and per-class F1."""
    confusion = {(g, p): 0 for g in label_order for p in label_order}
    for g, p in zip(gold, pred):
        confusion[(g, p)] += 1
    n = len(gold)
    acc = sum(confusion[(l, l)] for l in label_order) / n
    f1s = {}
    for label in label_order:
        tp = confusion[(label, label)]
        gold_n = sum(confusion[(label, p)] for p in label_order)
        pred_n = sum(confusion[(g, label)] for g in label_order)
        if gold_n == 0:
            continue
        precision = tp / pred_n if pred_n else 0.0
        recall = tp / gold_n
        f1s[label] = (
            2 * precision * recall / (precision + recall) if precision + recall else 0.0
        )
    return confusion, acc, f1s, sum(f1s.values()) / len(f1s)


def test_perfect_predictions():
    gold = ["entailment", "neutral", "contradiction", "neutral"]
    report = evaluate(gold, gold, LABELS3)
    assert report.accuracy == 1.0
    assert report.macro_f1 == 1.0
    assert report.n == 4


def test_hand_computed_example():
    gold = ["entailment", "entailment", "contradiction", "contradiction"]
    pred = ["entailment", "contradiction", "contradiction", "contradiction"]
    report = evaluate(gold, pred, LABELS2)
    assert report.accuracy == 0.75
    assert abs(report.per_class_f1["entailment"] - 2 / 3) < 1e-12
    assert abs(report.per_class_f1["contradiction"] - 0.8) < 1e-12
    assert abs(report.macro_f1 - 11 / 15) < 1e-12
    assert report.confusion.tolist() == [[1, 1], [0, 2]]
    assert report.majority_baseline_accuracy == 0.5


def test_gold_class_never_predicted_drags_macro():
    gold = ["entailment", "neutral", "contradiction"] * 4
    pred = ["entailment" if g == "neutral" else g for g in gold]
    report = evaluate(gold, pred, LABELS3)
    assert report.per_class_f1["neutral"] == 0.0
    assert report.macro_f1 < report.accuracy


def test_pred_only_class_outside_macro():
    # a 3-class model scattering predictions over 2-class gold: the extra
    # class shows in the confusion matrix but not in the macro mean
    gold = ["entailment", "entailment", "contradiction", "contradiction"]
    pred = ["entailment", "neutral", "contradiction", "neutral"]
    report = evaluate(gold, pred, LABELS3)
    assert set(report.per_class_f1) == {"entailment", "contradiction"}
    assert report.confusion[:, 1].sum() == 2
    assert report.accuracy == 0.5


def test_majority_baseline_values():
    gold = ["entailment"] * 1930 + ["contradiction"] * 969
    assert round(majority_baseline(gold), 4) == 0.6657
    assert majority_baseline(["neutral"] * 7) == 1.0
    assert majority_baseline(["entailment", "neutral", "contradiction"]) == pytest.approx(1 / 3)
    with pytest.raises(DataError, match="empty"):
        majority_baseline([])


def test_errors():
    with pytest.raises(DataError, match="length mismatch"):
        evaluate(["entailment"], [], LABELS3)
    with pytest.raises(DataError, match="empty"):
        evaluate([], [], LABELS3)
    with pytest.raises(DataError, match="unknown gold label"):
        evaluate(["maybe"], ["entailment"], LABELS3)
    with pytest.raises(DataError, match="unknown predicted label"):
        evaluate(["entailment"], ["maybe"], LABELS3)
    with pytest.raises(DataError, match="duplicate labels"):
        evaluate(["entailment"], ["entailment"], ("entailment", "entailment"))


@given(
    data=st.lists(
        st.tuples(st.sampled_from(LABELS3), st.sampled_from(LABELS3)),
        min_size=1,
        max_size=60,
    ),
    seed=st.integers(0, 2**16),
)
def test_permutation_invariance(data, seed):
    gold = [g for g, _ in data]
    pred = [p for _, p in data]
    base = evaluate(gold, pred, LABELS3)
    order = np.random.default_rng(seed).permutation(len(data))
    shuffled = evaluate([gold[i] for i in order], [pred[i] for i in order], LABELS3)
    assert base.accuracy == shuffled.accuracy
    assert base.per_class_f1 == shuffled.per_class_f1
    assert base.macro_f1 == shuffled.macro_f1
    assert np.array_equal(base.confusion, shuffled.confusion)


def test_matches_oracle_on_random_instances():
    rng = np.random.default_rng(47)
    for _ in range(100):
        labels = LABELS2 if rng.integers(2) else LABELS3
        n = int(rng.integers(1, 1000))
        gold = [labels[i] for i in rng.integers(0, len(labels), size=n)]
        pred = [labels[i] for i in rng.integers(0, len(labels), size=n)]
        report = evaluate(gold, pred, labels)
        confusion, acc, f1s, macro = oracle_report(gold, pred, labels)
        for gi, g in enumerate(labels):
            for pi, p in enumerate(labels):
                assert report.confusion[gi, pi] == confusion[(g, p)]
        assert abs(report.accuracy - acc) < 1e-12
        assert set(report.per_class_f1) == set(f1s)
        for label in f1s:
            assert abs(report.per_class_f1[label] - f1s[label]) < 1e-12
        assert abs(report.macro_f1 - macro) < 1e-12
        if report.per_class_f1:
            assert min(report.per_class_f1.values()) <= report.macro_f1
            assert report.macro_f1 <= max(report.per_class_f1.values())


def test_confusion_csv():
    report = evaluate(
        ["entailment", "contradiction"], ["entailment", "entailment"], LABELS2
    )
    text = confusion_to_csv(report)
    assert text == "gold\\pred,entailment,contradiction\nentailment,1,0\ncontradiction,1,0\n"
