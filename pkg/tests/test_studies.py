import logging

import numpy as np
import pytest

from gopatterns.sgf import GroupFilter, scan_collection
from gopatterns.studies import (STYLES, StudyConfig, StyleReference, _split_halves,
                                extract_collection, load_style_references, marks_correlations,
                                random_mse_closed_form, run_strength_study,
                                write_style_references)
from gopatterns.synth import generate_synthetic_corpus, strength_profile, write_corpus


def test_config_defaults_depend_on_study():
    s, t = StudyConfig("strength"), StudyConfig("style")
    assert (s.knn_base, s.nn_hidden, s.nn_target, s.no_contiguity) == (0.9, 35, 0.0005, True)
    assert (t.knn_base, t.nn_hidden, t.nn_target, t.no_contiguity) == (0.8, 30, 0.0003, False)
    with pytest.raises(ValueError):
        StudyConfig("speed")


def test_config_from_mapping():
    cfg = StudyConfig.from_mapping({"study": "style", "n": "300", "knn-base": "0.7",
                                    "games": "2, 9", "include_excluded": "yes"}, seed=4)
    assert (cfg.n, cfg.knn_base, cfg.games, cfg.include_excluded, cfg.seed) == \
        (300, 0.7, (2, 9), True, 4)
    with pytest.raises(ValueError):
        StudyConfig.from_mapping({"colour": "blue"})
    with pytest.raises(ValueError):
        StudyConfig.from_mapping({"include_excluded": "maybe"})


def test_random_mse_closed_form():
    assert random_mse_closed_form([5.5]) == pytest.approx(81 / 12)
    assert random_mse_closed_form([1.0, 10.0]) == pytest.approx(81 / 12 + 4.5 ** 2)
    rng = np.random.default_rng(0)
    t = rng.uniform(1, 10, 50)
    guesses = rng.uniform(1, 10, (20_000, 50))
    assert ((guesses - t) ** 2).mean() == pytest.approx(random_mse_closed_form(t), rel=0.01)


def _refs():
    return [StyleReference(f"P{i}", (1.0 + i, 10.0 - i, 5.0, 1.0 + (i * 7) % 9),
                           (0.5,) * 4, 1950.0 + i) for i in range(8)]


def test_marks_correlations():
    names, r = marks_correlations(_refs())
    assert names == list(STYLES) + ["year"]
    assert r[0, 1] == pytest.approx(-1.0)
    assert np.isnan(r[0, 2])     # constant alpha column
    assert r[0, 4] == pytest.approx(1.0)
    np.testing.assert_allclose(r, r.T, equal_nan=True)


def test_style_references_round_trip(tmp_path):
    refs = _refs()
    refs[0].exclude = True
    refs[1].year_cap = 1965
    refs[2].no_pca = True
    refs[3].median_year = None
    write_style_references(tmp_path / "m.tsv", refs)
    assert load_style_references(tmp_path / "m.tsv") == refs


def test_shipped_references():
    refs = load_style_references()
    assert len(refs) >= 10
    assert all(1 <= v <= 10 for r in refs for v in r.means)


def test_out_of_range_marks_rejected(tmp_path):
    refs = _refs()
    refs[0].means = (0.5, 5, 5, 5)
    write_style_references(tmp_path / "m.tsv", refs)
    with pytest.raises(ValueError):
        load_style_references(tmp_path / "m.tsv")


def test_split_halves_is_disjoint_by_game():
    ids = ["a", "a", "b", "b", "c", "d", "e"]
    counters = list(range(len(ids)))
    ref, ev = _split_halves(counters, ids, np.random.default_rng(1))
    ref_games = {ids[i] for i in ref}
    ev_games = {ids[i] for i in ev}
    assert not ref_games & ev_games
    assert sorted(ref + ev) == counters
    assert len(ref_games) == 3


@pytest.fixture(scope="module")
def flat_corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("flat")
    write_corpus(generate_synthetic_corpus(strength_profile(12, flat=True), 2), out)
    col = scan_collection([out], GroupFilter("rank"))
    return extract_collection(col, no_contiguity=True)


def test_flat_corpus_knn_matches_random(flat_corpus, tmp_path, caplog):
    cfg = StudyConfig("strength", games=(2, 9, 43), repetitions=10)
    with caplog.at_level(logging.WARNING):
        report = run_strength_study(cfg, flat_corpus)
    assert report.skipped == [43]
    assert "G=43 skipped" in caplog.text
    knn = [r for r in report.rows if r.method == "k-NN"]
    assert [r.games for r in knn] == [9, 2]
    # uniform guessing over the whole domain loses to any mean-seeking predictor, so
    # "no signal" is measured against always answering the mean rank
    mean_sigma = float(np.std(report.ranks))
    for r in knn:
        assert mean_sigma / r.sigma == pytest.approx(1.0, abs=0.2)

    report.write(tmp_path)
    table = (tmp_path / "strength_table.tsv").read_text().splitlines()
    assert table[0] == "method\tG\tMSE\tsigma\tCmp\tsamples"
    assert table[-1].startswith("Rnd\tN/A\t")
    assert len(table) == 1 + len(report.rows)
    pca = (tmp_path / "strength_pca.tsv").read_text().splitlines()
    assert pca[0].startswith("# r(axis1, rank)=")
    assert len(pca) == 3 + len(report.ranks)


def test_strength_needs_three_ranks(flat_corpus):
    small = type(flat_corpus)(flat_corpus.dictionary,
                              {k: flat_corpus.games[k] for k in list(flat_corpus.games)[:2]},
                              flat_corpus.game_ids)
    with pytest.raises(ValueError):
        run_strength_study(StudyConfig(), small)
