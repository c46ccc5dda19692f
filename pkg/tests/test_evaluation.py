import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from jitdp.evaluation import (RankEntry, confusion_metrics, effort_metrics, rank_by_score,
                              rank_cbs_plus, rank_unsupervised)
from oracles import confusion_oracle, effort_oracle


def test_perfect_and_inverted():
    labels = [1, 0, 1, 0]
    assert confusion_metrics(labels, labels) == {"precision": 1, "recall": 1, "f1": 1, "mcc": 1}
    assert confusion_metrics([0, 1, 0, 1], labels)["mcc"] == -1


def test_hand_mcc():
    pred = [1] * 3 + [1] + [0] * 2 + [0] * 4
    true = [1] * 3 + [0] + [1] * 2 + [0] * 4
    assert confusion_metrics(pred, true)["mcc"] == pytest.approx(10 / math.sqrt(600), abs=1e-12)


def test_length_mismatch():
    with pytest.raises(ValueError, match="length"):
        confusion_metrics([1, 0], [1])


@given(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=50))
def test_confusion_matches_oracle(pairs):
    pred, true = zip(*pairs)
    got, want = confusion_metrics(pred, true), confusion_oracle(pred, true)
    for key in want:
        assert abs(got[key] - want[key]) <= 1e-12


def test_cbs_plus_example():
    order = rank_cbs_plus(["c1", "c2", "c3"], [0.9, 0.6, 0.4], [9, 2, 1], [1, 0, 0])
    assert [e.hash for e in order] == ["c2", "c1", "c3"]


def test_cbs_plus_all_clean_and_ties():
    order = rank_cbs_plus(["a", "b", "c"], [0.2, 0.4, 0.3], [1, 1, 3], [0, 0, 0])
    assert [e.hash for e in order] == ["b", "a", "c"]
    tied = rank_cbs_plus(["z", "y"], [0.7, 0.7], [4, 4], [0, 1])
    assert [e.hash for e in tied] == ["y", "z"]


@given(st.lists(st.tuples(st.floats(0, 1), st.integers(0, 100)), min_size=1, max_size=20),
       st.integers(2, 9))
def test_cbs_plus_ignores_effort_units_for_the_split(rows, factor):
    scores, efforts = zip(*rows)
    hashes = [f"h{i:02d}" for i in range(len(rows))]
    order = rank_cbs_plus(hashes, scores, efforts, [0] * len(rows))
    prone = [e.score > 0.5 for e in order]
    assert prone == sorted(prone, reverse=True)


def test_unsupervised_orders():
    lt = rank_unsupervised(["a", "b", "c"], [5, 1, 3], [1, 1, 1], [0, 0, 0], "lt")
    assert [e.score for e in lt] == [1, 3, 5]
    churn = rank_unsupervised(["a", "b", "c"], [0, 0, 0], [4, 0, 2], [0, 0, 0], "churn")
    assert churn[0].hash == "b"
    same = rank_unsupervised(["c", "a", "b"], [2, 2, 2], [1, 1, 1], [0, 0, 0], "lt")
    assert [e.hash for e in same] == ["a", "b", "c"]


def test_rank_by_score():
    order = rank_by_score(["a", "b", "c"], [0.1, 0.9, 0.9], [1, 1, 1], [0, 0, 0])
    assert [e.hash for e in order] == ["b", "c", "a"]


def test_effort_hand_example():
    ranking = [RankEntry("A", 0, 10, True), RankEntry("B", 0, 40, False),
               RankEntry("C", 0, 50, True)]
    out = effort_metrics(ranking, 0.2)
    assert out["r_at_20"] == 0.5 and out["pci_at_20"] == pytest.approx(1 / 3) and out["ifa"] == 0


def test_ifa_counts_leading_clean():
    ranking = [RankEntry(h, 0, 1, d) for h, d in zip("abc", (False, False, True))]
    assert effort_metrics(ranking)["ifa"] == 2


def test_all_defective_full_budget():
    ranking = [RankEntry(h, 0, 3, True) for h in "abcd"]
    out = effort_metrics(ranking, 1.0)
    assert out["r_at_20"] == 1 and out["f1_at_20"] == 1


entries = st.lists(st.tuples(st.integers(0, 40), st.booleans()), min_size=1, max_size=50)


def to_ranking(rows):
    return [RankEntry(f"h{i:02d}", 0.0, e, d) for i, (e, d) in enumerate(rows)]


@given(entries)
def test_effort_matches_prefix_oracle(rows):
    ranking = to_ranking(rows)
    assert effort_metrics(ranking, 0.2) == effort_oracle(ranking)


@given(entries, st.floats(0, 1), st.floats(0, 1))
def test_recall_grows_with_budget(rows, b1, b2):
    ranking = to_ranking(rows)
    lo, hi = sorted((b1, b2))
    small, large = effort_metrics(ranking, lo), effort_metrics(ranking, hi)
    assert small["r_at_20"] <= large["r_at_20"]
    assert small["pci_at_20"] <= large["pci_at_20"]


@given(st.lists(st.tuples(st.floats(0, 1), st.integers(0, 50), st.booleans()), min_size=1,
                max_size=30))
def test_ranking_is_a_permutation(rows):
    scores, efforts, defective = map(list, zip(*rows))
    hashes = [f"h{i:02d}" for i in range(len(rows))]
    for order in (rank_cbs_plus(hashes, scores, efforts, defective),
                  rank_by_score(hashes, scores, efforts, defective)):
        assert sorted(e.hash for e in order) == hashes
    assert np.isfinite(list(effort_metrics(order).values())).all()
