from collections import Counter

import numpy as np
import pytest

from gopatterns.board import BLACK, BoardState, replay
from gopatterns.patterns import RADII, build_dictionary, extract_game, format_patternspec
from gopatterns.sgf import parse_sgf
from gopatterns.stats import pearson
from gopatterns.synth import (GENERATORS, KINDS, GroupSpec, KindWeights, Profile, choose_move,
                              generate_game, generate_synthetic_corpus, strength_profile,
                              strength_weights, style_profile, style_weights, write_corpus)
from gopatterns.vectors import build_index, normalize_linear, raw_vector


def test_every_kind_has_a_generator():
    assert set(GENERATORS) == set(KINDS)


def test_weights_formula():
    w = KindWeights({"open44": 0.0, "center": 1.0}, {"center": [2.0]},
                    {"open44": [(0, 0.5, 0.1, 3.0)]})
    got = dict(zip(KINDS, w.weights([0.5])))
    assert got["open44"] == pytest.approx(np.exp(3.0))
    assert got["center"] == pytest.approx(np.exp(2.0))
    assert got["random"] == 0.0


def test_games_are_legal():
    rng = np.random.default_rng(0)
    g = GroupSpec("x", (0.5, 0.5, 1.0, 1.0))
    for _ in range(5):
        moves = generate_game(g, g, style_weights(), rng, 150)
        assert len(moves) == 150
        state = BoardState()
        for i, m in enumerate(moves):
            assert m.color == "BW"[i % 2]
            state.play(BLACK if m.color == "B" else 3 - BLACK, m.point)


def test_choose_move_only_random_available():
    w = np.zeros(len(KINDS))
    w[KINDS.index("random")] = 1.0
    p = choose_move(BoardState(), BLACK, w, np.random.default_rng(1))
    assert 0 <= p[0] < 19 and 0 <= p[1] < 19


def test_fixed_seed_identical_files(tmp_path):
    profile = strength_profile(2)
    a = generate_synthetic_corpus(profile, 3)
    b = generate_synthetic_corpus(profile, 3)
    assert a == b
    assert a != generate_synthetic_corpus(profile, 4)
    paths = write_corpus(a, tmp_path)
    assert len(paths) == 30 and paths[0].read_text() == a[paths[0].name]


def test_strength_profile_labels():
    files = generate_synthetic_corpus(strength_profile(1), 0)
    ranks = []
    for text in files.values():
        (rec,) = parse_sgf(text)
        ranks.append(rec.meta.black_rank.value)
        list(replay(rec))  # replays without illegal moves
    assert ranks == list(range(26, -4, -1))
    assert {g.params for g in strength_profile(1, flat=True).groups} == {(0.0,)}


def test_style_profile_mixed_pairing():
    refs = [("Alpha", (1, 2, 3, 4)), ("Beta", (10, 9, 8, 7)), ("Gamma", (5, 5, 5, 5))]
    profile = style_profile(refs, 4)
    assert profile.groups[1].params == pytest.approx((1.0, 8 / 9, 7 / 9, 6 / 9))
    files = generate_synthetic_corpus(profile, 1)
    recs = [r for t in files.values() for r in parse_sgf(t)]
    for name, _ in refs:
        assert sum(name in (r.meta.black_player, r.meta.white_player) for r in recs) >= 4
    # opponents are other reference players
    assert all(r.meta.black_player != r.meta.white_player for r in recs)


def test_disjoint_openings_anticorrelate():
    weights = strength_weights()
    a = GroupSpec("a", (0.5,), openings=("open44",))
    b = GroupSpec("b", (0.5,), openings=("open33",))
    files = generate_synthetic_corpus(Profile([a, b], weights, 40, (12, 20)), 5)
    records = {k: parse_sgf(t) for k, t in files.items()}
    d = build_dictionary([r for rs in records.values() for r in rs], RADII, 5)
    counts = {k: Counter(format_patternspec(p) for r in rs for _, _, p in extract_game(r, d))
              for k, rs in records.items()}
    ka, kb = sorted(counts)
    index = build_index(counts[ka] + counts[kb], 60)
    va = raw_vector(counts[ka], index)
    vb = raw_vector(counts[kb], index)
    ratio = (va + 1) / (vb + 1)
    coords = (ratio > 2) | (ratio < 0.5)
    assert coords.sum() >= 4
    na, nb = normalize_linear(va).values, normalize_linear(vb).values
    assert pearson(na[coords], nb[coords]) < 0
