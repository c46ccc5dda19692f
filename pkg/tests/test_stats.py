import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats as sps

from jitdp.stats import (_normal_p, _signed_ranks, best_split, bonferroni, cliffs_delta, cliffs_delta_naive,
                         compare_samples, effect_class, npsk_groups, split_score, stars,
                         wilcoxon_signed_rank)
from oracles import cliffs_oracle, wilcoxon_exact_oracle


def test_wilcoxon_hand_enumeration():
    a = np.array([1, 2, 3, 4, 5], dtype=float)
    assert wilcoxon_signed_rank(a, np.zeros(5), mode="exact") == pytest.approx(0.0625, abs=1e-15)


def test_wilcoxon_no_signal():
    x = [0.3, 0.1, 0.7]
    assert wilcoxon_signed_rank(x, x) == 1.0


def test_wilcoxon_large_shift():
    rng = np.random.default_rng(0)
    a = rng.normal(size=100)
    assert wilcoxon_signed_rank(a + 2, a + rng.normal(0, 0.5, 100)) < 1e-4


@given(st.lists(st.integers(-4, 4), min_size=1, max_size=10))
def test_exact_matches_sign_enumeration(diffs):
    got = wilcoxon_signed_rank(diffs, [0] * len(diffs), mode="exact")
    assert got == pytest.approx(wilcoxon_exact_oracle(diffs), abs=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_normal_close_to_exact(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(15, 21))
    a, b = rng.normal(size=n), rng.normal(0.3, 1.0, size=n)
    exact = wilcoxon_signed_rank(a, b, mode="exact")
    assert abs(wilcoxon_signed_rank(a, b, mode="normal") - exact) < 0.01


@pytest.mark.parametrize("seed", range(5))
def test_agrees_with_scipy(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=12), rng.normal(size=12)
    ref = sps.wilcoxon(a, b, method="exact").pvalue
    assert wilcoxon_signed_rank(a, b, mode="exact") == pytest.approx(ref, rel=1e-9)
    a, b = np.round(rng.normal(size=40), 1), np.round(rng.normal(0.2, 1, size=40), 1)
    ref = sps.wilcoxon(a, b, method="approx", correction=True).pvalue
    diff, ranks = _signed_ranks(a, b)
    plain = _normal_p(float(ranks[diff > 0].sum()), ranks, edgeworth=False)
    assert plain == pytest.approx(ref, rel=1e-9)
    # the kurtosis term is a small-sample refinement
    assert abs(wilcoxon_signed_rank(a, b, mode="normal") - plain) < 0.01


def test_bonferroni():
    assert bonferroni([0.01], 3) == [pytest.approx(0.03)]
    assert bonferroni([0.5], 3) == [1.0]
    assert bonferroni([0.2, 0.01], 1) == [0.2, 0.01]
    assert bonferroni([0.02, 0.02, 0.02]) == [pytest.approx(0.06)] * 3


@pytest.mark.parametrize("a, b, delta, cls", [
    ([1, 2, 3], [1, 2, 3], 0.0, "N"), ([4, 5], [1, 2], 1.0, "L"), ([1, 3], [2, 2], 0.0, "N"),
])
def test_cliffs_examples(a, b, delta, cls):
    assert cliffs_delta(a, b) == (delta, cls)


def test_effect_boundaries():
    assert [effect_class(d) for d in (0.1469, 0.147, 0.33, 0.474, -0.5)] == ["N", "S", "M", "L", "L"]


samples = st.lists(st.integers(-5, 5), min_size=1, max_size=30)


@given(samples, samples)
def test_cliffs_fast_path_is_exact(a, b):
    assert cliffs_delta(a, b)[0] == cliffs_oracle(a, b) == cliffs_delta_naive(a, b)
    assert cliffs_delta(b, a)[0] == -cliffs_delta(a, b)[0]


def test_stars():
    assert [stars(p) for p in (3e-5, 5e-4, 5e-3, 0.06, 0.1, 0.5)] == \
        ["****", "***", "**", "*", "ns", "ns"]


def test_compare_samples_direction():
    res = compare_samples([2, 3, 4, 5, 6], [1, 1, 1, 1, 1], m=3)
    assert res.direction == 1 and res.effect_class == "L"
    assert res.p_adjusted == pytest.approx(min(1.0, 3 * res.p_raw))


def test_npsk_identical_distributions_merge():
    groups = npsk_groups({"a": [1, 2, 3, 4], "b": [1, 2, 3, 4]})
    assert [g.members for g in groups] == [("a", "b")]


def test_npsk_separated():
    groups = npsk_groups({"lo": [0.1] * 5, "hi": [0.5] * 5})
    assert [(g.rank, g.members) for g in groups] == [(1, ("hi",)), (2, ("lo",))]


def test_npsk_single_feature():
    assert [g.members for g in npsk_groups({"only": [1.0, 2.0]})] == [("only",)]


def test_npsk_two_high_one_low():
    rng = np.random.default_rng(0)
    high = rng.normal(0.5, 0.05, 30)
    # f2 interleaves with f1: same values nudged by alternating +-0.001
    dists = {"f1": high, "f2": rng.permutation(high + 0.001 * (-1) ** np.arange(30)),
             "f3": rng.normal(0.1, 0.05, 30)}
    groups = npsk_groups(dists)
    assert [set(g.members) for g in groups] == [{"f1", "f2"}, {"f3"}]
    ordered = sorted(dists, key=lambda n: -np.median(dists[n]))
    scores = [split_score(dists, ordered, k) for k in range(1, 3)]
    assert best_split(dists, ordered) == 1 + int(np.argmax(scores)) == 2


def test_npsk_unequal_counts():
    with pytest.raises(ValueError):
        npsk_groups({"a": [1, 2], "b": [1]})


@given(st.dictionaries(st.sampled_from("abcdef"),
                       st.lists(st.floats(0, 1), min_size=5, max_size=5), min_size=1))
def test_npsk_partitions_every_feature(dists):
    groups = npsk_groups(dists)
    members = [m for g in groups for m in g.members]
    assert sorted(members) == sorted(dists)
    assert [g.rank for g in groups] == list(range(1, len(groups) + 1))


def test_stars_after_adjustment():
    assert stars(3e-5) == "****"
    (adjusted,) = bonferroni([0.02], 3)
    assert adjusted == pytest.approx(0.06) and stars(adjusted) == "*"
