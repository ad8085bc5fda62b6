import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gopatterns.vectors import (PatternIndex, PatternVector, build_index, normalize,
                                normalize_extended, normalize_linear, rank_frequency,
                                raw_vector, read_vectors, write_vectors)


def test_index_top_n():
    assert build_index({"a": 5, "b": 3, "c": 1}, 2).specs == ("a", "b")


def test_index_tie_break():
    assert build_index({"b": 3, "a": 3}, 1).specs == ("a",)


def test_index_matches_full_sort():
    rng = np.random.default_rng(0)
    counts = {f"p{i:04d}": int(c) for i, c in enumerate(rng.integers(1, 50, 2000))}
    index = build_index(counts, 500)
    threshold = sorted(counts.values(), reverse=True)[499]
    above = {s for s, c in counts.items() if c > threshold}
    assert above <= set(index.specs)
    assert all(counts[s] >= threshold for s in index.specs)
    assert len(index.specs) == 500


def test_short_index_warns(caplog):
    index = build_index({"a": 1}, 3)
    assert index.n == 1
    assert "only 1 distinct" in caplog.text


def test_index_rejects_bad_n():
    with pytest.raises(ValueError):
        build_index({"a": 1}, 0)


def test_raw_vector():
    index = build_index({"a": 5, "b": 3, "c": 1}, 3)
    assert raw_vector({}, index).tolist() == [0, 0, 0]
    assert raw_vector({"a": 5, "b": 3, "c": 1}, index).tolist() == list(index.counts)
    rng = np.random.default_rng(1)
    stream = [f"s{int(i)}" for i in rng.integers(0, 30, 400)]
    index = build_index(Counter(stream), 10)
    counts = Counter(stream[:150])
    naive = [sum(1 for s in stream[:150] if s == spec) for spec in index.specs]
    assert raw_vector(counts, index).tolist() == naive


def test_linear_examples():
    np.testing.assert_allclose(normalize_linear([9, 4, 0]).values, [1, -1 / 9, -1])
    assert normalize_linear([5, 5]).values.tolist() == [0, 0]


def test_extended_examples():
    v = normalize_extended([0, 10, 1000], 6).values
    assert v[0] == pytest.approx(-(2 / (1 + math.exp(-6)) - 1))
    assert v[2] == pytest.approx(2 / (1 + math.exp(-6)) - 1, abs=1e-12)
    assert v[2] == pytest.approx(0.99506, abs=1e-5)
    # y = 0 maps to 0: the log-midpoint of the range
    mid = math.exp((math.log(1) + math.log(101)) / 2) - 1
    assert normalize_extended([0, mid, 100], 6).values[1] == pytest.approx(0, abs=1e-12)


count_vectors = st.lists(st.integers(0, 10_000), min_size=2, max_size=40)


@given(count_vectors)
def test_normalized_range_and_order(raw):
    lin = normalize_linear(raw).values
    ext = normalize_extended(raw).values
    assert np.all(np.abs(lin) <= 1) and np.all(np.abs(ext) <= 1)
    a = np.asarray(raw)
    for i in range(len(raw)):
        for j in range(len(raw)):
            if a[i] < a[j]:
                assert lin[i] < lin[j] and ext[i] < ext[j]


@given(count_vectors, st.floats(0.01, 1000))
def test_linear_scale_invariance(raw, k):
    np.testing.assert_allclose(normalize_linear(np.array(raw) * k).values,
                               normalize_linear(raw).values, atol=1e-9)


def test_normalize_dispatch_and_errors():
    assert normalize([1, 2], "extended", 3.0).normalization == "extended(3)"
    with pytest.raises(ValueError):
        normalize([1, 2], "cubic")
    with pytest.raises(ValueError):
        normalize_extended([1, 2], 0)
    with pytest.raises(ValueError):
        normalize_linear([])


def test_rank_frequency():
    rows = rank_frequency({"a": 100, "b": 10, "c": 0})
    assert rows == [(1, 2.0), (2, 1.0)]


def test_vector_file_round_trip(tmp_path):
    index = PatternIndex(("(x)", "(y)"), (4, 2))
    vectors = [PatternVector("5k", np.array([0.1, -1 / 3]), "linear", 7)]
    write_vectors(tmp_path / "v.tsv", index, vectors)
    back_index, back = read_vectors(tmp_path / "v.tsv")
    assert back_index.specs == index.specs
    assert back[0].subject == "5k" and back[0].games_count == 7
    assert back[0].values.tolist() == vectors[0].values.tolist()
