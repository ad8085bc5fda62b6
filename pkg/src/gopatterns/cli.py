"""Command-line entry point.

Every subcommand accepts ``--seed``, ``--config`` (flat ``key = value``
file) and ``--out``.  Exit status: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import sys
from collections import Counter
from pathlib import Path

import numpy as np

from .board import IllegalMove
from .classifiers import (STRENGTH_DOMAIN, STYLE_DOMAIN, BayesClassifier, JointClassifier,
                          KnnConfig, KnnModel, NetworkModel, PcaDirect, PcaReduced,
                          RandomClassifier, load_model, save_model)
from .patterns import (RADII, ExtractOptions, PatternDictionary, build_dictionary,
                       extract_game, format_patternspec)
from .sgf import GroupFilter, SGFError, load_games, parse_rank, rank_text, scan_collection
from .sociomap import DEFAULT_SAMPLES, height_field, layout, team_profile, write_layout
from .stats import pca_fit, pca_project, pearson
from .studies import (STYLES, StudyConfig, extract_collection, load_style_references,
                      marks_correlations, run_strength_study, run_style_study,
                      style_crossval)
from .synth import generate_synthetic_corpus, strength_profile, style_profile, write_corpus
from .vectors import (build_index, normalize, raw_vector, read_vectors, write_rank_frequency,
                      write_vectors)

log = logging.getLogger("gopatterns")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def read_config(path) -> dict:
    """Flat ``key = value`` lines; ``#`` comments allowed, no sections needed."""
    if path is None:
        return {}
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string("[config]\n" + Path(path).read_text())
    except (OSError, configparser.Error) as exc:
        raise DataError(f"cannot read config {path}: {exc}") from exc
    return dict(cp["config"])


def _config(args, study: str) -> StudyConfig:
    values = read_config(args.config)
    values.setdefault("study", study)
    if getattr(args, "study", None):
        values["study"] = args.study
    try:
        return StudyConfig.from_mapping(values, seed=args.seed)
    except (TypeError, ValueError) as exc:
        raise DataError(f"bad configuration: {exc}") from exc


def _out(args, default: str) -> Path:
    return Path(args.out or default)


def _radii(text) -> tuple:
    return tuple(sorted(int(r) for r in text.split(","))) if text else RADII


def _grouping(args) -> GroupFilter:
    flags = dict(even_only=args.even_only, clear_ranks=args.clear_ranks)
    if args.by == "player":
        players = tuple(args.players or [r.player for r in load_style_references(args.refs)])
        return GroupFilter("player", players=players, **flags)
    return GroupFilter(args.by, **flags)


# --- subcommands ------------------------------------------------------------------


def cmd_dict(args):
    games = load_games(args.inputs)
    if not games:
        raise DataError("no games found")
    d = build_dictionary(games, _radii(args.radii), args.min_count)
    d.save(_out(args, "dict.tsv"))


def cmd_extract(args):
    d = PatternDictionary.load(args.dict)
    options = ExtractOptions(args.no_contiguity)
    lines = ["subject\tgame\tmove\tcolor\tpatternspec"]
    if args.by == "file":
        for record in load_games(args.inputs):
            for number, color, p in extract_game(record, d, options):
                lines.append(f"{record.game_id}\t{record.game_id}\t{number}\t{color}\t"
                             f"{format_patternspec(p)}")
    else:
        col = scan_collection(args.inputs, _grouping(args))
        for key in sorted(col.groups, key=str):
            subject = rank_text(key) if args.by == "rank" else key
            for sg in col.groups[key]:
                try:
                    moves = extract_game(sg.record, d, options, sg.color)
                except IllegalMove as exc:
                    log.warning("skipping game: %s", exc)
                    continue
                for number, color, p in moves:
                    lines.append(f"{subject}\t{sg.record.game_id}\t{number}\t{color}\t"
                                 f"{format_patternspec(p)}")
    _out(args, "patterns.tsv").write_text("\n".join(lines) + "\n")


def read_pattern_stream(path) -> tuple[dict, dict]:
    """Per-subject patternspec counts and game counts from an ``extract`` file."""
    counts: dict = {}
    games: dict = {}
    for i, line in enumerate(Path(path).read_text().splitlines()):
        if i == 0 or not line:
            continue
        cols = line.split("\t")
        if len(cols) != 5:
            raise DataError(f"{path}:{i + 1}: expected 5 columns")
        subject, game, _, _, spec = cols
        counts.setdefault(subject, Counter())[spec] += 1
        games.setdefault(subject, set()).add(game)
    return counts, {k: len(v) for k, v in games.items()}


def cmd_vector(args):
    cfg = _config(args, "style")
    counts, games = read_pattern_stream(args.patterns)
    total = Counter()
    for c in counts.values():
        total.update(c)
    index = build_index(total, args.n or cfg.n)
    normalization = args.normalization or cfg.normalization
    vectors = [normalize(raw_vector(counts[s], index), normalization, cfg.logistic_c, s,
                         games[s]) for s in sorted(counts)]
    write_vectors(_out(args, "vectors.tsv"), index, vectors)
    if args.rank_frequency:
        write_rank_frequency(args.rank_frequency, total)


def _load_vectors(path):
    index, vectors = read_vectors(path)
    if not vectors:
        raise DataError(f"{path}: no vectors")
    return index, vectors


def cmd_pca(args):
    index, vectors = _load_vectors(args.vectors)
    x = np.array([v.values for v in vectors])
    m = args.m or min(len(vectors) - 1, x.shape[1])
    model = pca_fit(x, m)
    coords = pca_project(model, x)
    lines = ["subject\t" + "\t".join(f"axis{i + 1}" for i in range(model.m)),
             "eigenvalue\t" + "\t".join(repr(float(v)) for v in model.eigenvalues)]
    for v, row in zip(vectors, coords):
        lines.append(f"{v.subject}\t" + "\t".join(repr(float(c)) for c in row))
    _out(args, "pca.tsv").write_text("\n".join(lines) + "\n")


def cmd_correlate(args):
    out = _out(args, "correlations.tsv")
    if args.vectors is None:
        names, r = marks_correlations(load_style_references(args.refs))
        lines = ["\t" + "\t".join(names)]
        lines += [n + "\t" + "\t".join(repr(float(x)) for x in row) for n, row in zip(names, r)]
        out.write_text("\n".join(lines) + "\n")
        return
    index, vectors = _load_vectors(args.vectors)
    if args.refs:
        refs = {r.player: r for r in load_style_references(args.refs)}
        vectors = [v for v in vectors if v.subject in refs]
        truths = np.array([refs[v.subject].means for v in vectors])
        columns = list(STYLES)
    else:
        ranks = [parse_rank(v.subject) for v in vectors]
        if any(r is None for r in ranks):
            raise DataError("subjects are not rank labels; pass --refs for style marks")
        truths = np.array([[r.value] for r in ranks], dtype=float)
        columns = ["rank"]
    if len(vectors) < 3:
        raise DataError("need at least three subjects to correlate")
    x = np.array([v.values for v in vectors])
    model = pca_fit(x, args.m or min(len(vectors) - 1, x.shape[1], 4))
    coords = pca_project(model, x)
    lines = ["axis\teigenvalue\t" + "\t".join(columns)]
    for a in range(model.m):
        rs = []
        for c in range(truths.shape[1]):
            try:
                rs.append(repr(pearson(coords[:, a], truths[:, c])))
            except ValueError:
                rs.append("nan")
        lines.append(f"{a + 1}\t{float(model.eigenvalues[a])!r}\t" + "\t".join(rs))
    out.write_text("\n".join(lines) + "\n")


def _training_data(args, cfg):
    index, vectors = _load_vectors(args.vectors)
    if cfg.study == "style":
        refs = {r.player: r for r in load_style_references(args.refs)
                if cfg.include_excluded or not r.exclude}
        vectors = [v for v in vectors if v.subject in refs]
        y = np.array([refs[v.subject].means for v in vectors]).reshape(len(vectors), 4)
    else:
        ranks = [parse_rank(v.subject) for v in vectors]
        if any(r is None for r in ranks):
            raise DataError("strength vectors must be labelled with ranks")
        y = np.array([[r.value] for r in ranks], dtype=float)
    if len(vectors) < 2:
        raise DataError("need at least two training subjects")
    return index, np.array([v.values for v in vectors]), y


def build_model(method: str, cfg: StudyConfig, seed: int, games: int = 17):
    strength = cfg.study == "strength"
    domain = STRENGTH_DOMAIN if strength else STYLE_DOMAIN
    m = cfg.m or 23
    if method == "knn":
        from .classifiers import strength_scale
        scale = strength_scale(games) if strength else cfg.knn_scale
        return PcaReduced(KnnModel(KnnConfig(cfg.knn_k, cfg.knn_base, scale)), m)
    if method == "nn":
        return PcaReduced(NetworkModel(cfg.nn_hidden, cfg.nn_target, cfg.nn_max_iters,
                                       seed, domain), m)
    if method == "bayes":
        return PcaReduced(BayesClassifier(domain=domain), cfg.bayes_m)
    if method == "pca":
        return PcaDirect(domain)
    if method == "random":
        return RandomClassifier(domain, seed)
    raise UsageError(f"unknown method {method!r}")


def cmd_train(args):
    cfg = _config(args, args.study)
    index, x, y = _training_data(args, cfg)
    if args.method == "joint":
        _, choice = style_crossval(
            StudyConfig.from_mapping({}, **{**cfg.__dict__, "runs": args.runs}), x, y)
        names = {"Neural network": "nn", **{f"k-NN (k={k})": f"knn{k}" for k in range(1, 5)}}
        models = []
        for c in choice:
            key = names[c]
            if key.startswith("knn"):
                sub = StudyConfig.from_mapping({}, **{**cfg.__dict__, "knn_k": int(key[3:])})
                models.append(build_model("knn", sub, args.seed))
            else:
                models.append(build_model("nn", cfg, args.seed))
        model = JointClassifier(models).fit(x, y)
    else:
        model = build_model(args.method, cfg, args.seed, args.games).fit(x, y)
    save_model(_out(args, "model.json"), model,
               {"study": cfg.study, "method": args.method, "patterns": list(index.specs)})


def cmd_classify(args):
    try:
        model, meta = load_model(args.model)
    except (OSError, ValueError, KeyError) as exc:
        raise DataError(f"cannot load model {args.model}: {exc}") from exc
    index, vectors = _load_vectors(args.vectors)
    if meta.get("patterns") and list(index.specs) != meta["patterns"]:
        raise DataError("vector file uses a different pattern index than the model")
    pred = model.predict(np.array([v.values for v in vectors]))
    cols = list(STYLES) if meta.get("study") == "style" else ["rank"]
    if pred.shape[1] != len(cols):
        cols = [f"out{i + 1}" for i in range(pred.shape[1])]
    lines = ["subject\t" + "\t".join(cols)]
    for v, row in zip(vectors, pred):
        lines.append(f"{v.subject}\t" + "\t".join(repr(float(p)) for p in row))
    _out(args, "classified.tsv").write_text("\n".join(lines) + "\n")


def cmd_crossval(args):
    cfg = _config(args, args.study)
    if args.runs is not None:
        cfg.runs = args.runs
    if args.repetitions is not None:
        cfg.repetitions = args.repetitions
    if cfg.study == "strength":
        if not args.inputs:
            raise UsageError("the strength study needs --in with rank-labelled games")
        col = scan_collection(args.inputs, GroupFilter("rank", even_only=args.even_only,
                                                       clear_ranks=args.clear_ranks))
        corpus = extract_collection(col, cfg.radii, cfg.min_count, cfg.no_contiguity)
        report = run_strength_study(cfg, corpus)
        report.write(_out(args, "strength"))
        return
    refs = load_style_references(args.refs)
    if args.vectors:
        index, vectors = _load_vectors(args.vectors)
        by = {r.player: r for r in refs if cfg.include_excluded or not r.exclude}
        vectors = [v for v in vectors if v.subject in by]
        if len(vectors) < 10:
            raise DataError("need at least 10 reference players with vectors")
        x = np.array([v.values for v in vectors])
        y = np.array([by[v.subject].means for v in vectors])
        mse, choice = style_crossval(cfg, x, y)
        base = mse["Random class."].mean()
        lines = ["classifier\t" + "\t".join(STYLES) + "\tmean\tcmp"]
        for name in sorted(mse, key=lambda k: (k == "Random class.", mse[k].mean())):
            v = mse[name]
            lines.append(f"{name}\t" + "\t".join(repr(float(e)) for e in v)
                         + f"\t{float(v.mean())!r}\t{float(base / v.mean())!r}")
        lines.append("# joint choice\t" + "\t".join(choice))
        _out(args, "style_table.tsv").write_text("\n".join(lines) + "\n")
        return
    if not args.inputs:
        raise UsageError("the style study needs --vectors or --in")
    col = scan_collection(args.inputs, GroupFilter(
        "player", players=tuple(r.player for r in refs
                                if cfg.include_excluded or not r.exclude),
        even_only=args.even_only, clear_ranks=args.clear_ranks))
    corpus = extract_collection(col, cfg.radii, cfg.min_count, cfg.no_contiguity)
    years = {k: [sg.record.meta.year for sg in v] for k, v in col.groups.items()}
    report = run_style_study(cfg, corpus, refs, years)
    report.write(_out(args, "style"))


def cmd_sociomap(args):
    refs = [r for r in load_style_references(args.refs) if args.include_excluded or not r.exclude]
    names = [r.player for r in refs]
    styles = [list(r.means) + ([r.median_year] if args.year and r.median_year else [])
              for r in refs]
    prof = team_profile(styles, names, args.samples, args.seed)
    lay = layout(prof.a, names, args.seed, args.restarts, args.iters)
    heights = None
    if args.vectors:
        index, vectors = _load_vectors(args.vectors)
        x = np.array([v.values for v in vectors])
        model = pca_fit(x, min(2, len(vectors) - 1))
        coords = pca_project(model, x)
        heights = height_field({v.subject: c for v, c in zip(vectors, coords)},
                               model.eigenvalues, names)
    write_layout(_out(args, "sociomap.tsv"), lay, heights)


def cmd_synth(args):
    if args.profile == "style":
        refs = [r for r in load_style_references(args.refs) if not r.exclude]
        profile = style_profile([(r.player, r.means) for r in refs], args.games or 40)
    else:
        profile = strength_profile(args.games or 40, flat=args.profile == "flat")
    write_corpus(generate_synthetic_corpus(profile, args.seed), _out(args, "corpus"))


# --- parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--config", help="flat key = value file with study settings")
    common.add_argument("--out", help="output file or directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="gopatterns", description="Pattern analysis of Go game records.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=fn)
        return sp

    sp = add("dict", cmd_dict, "build the spatial pattern dictionary")
    sp.add_argument("--in", dest="inputs", nargs="+", required=True)
    sp.add_argument("--radii", help="comma-separated radii (default 2..9)")
    sp.add_argument("--min-count", type=int, default=20)

    sp = add("extract", cmd_extract, "write the patternspec stream per subject")
    sp.add_argument("--in", dest="inputs", nargs="+", required=True)
    sp.add_argument("--dict", required=True)
    sp.add_argument("--by", choices=("rank", "player", "file"), default="file")
    sp.add_argument("--players", nargs="*")
    sp.add_argument("--refs", help="style marks TSV (players for --by player)")
    sp.add_argument("--no-contiguity", action="store_true")
    sp.add_argument("--even-only", action="store_true", help="skip handicap games")
    sp.add_argument("--clear-ranks", action="store_true",
                    help="skip games where either player lacks a k/d rank")

    sp = add("vector", cmd_vector, "aggregate patternspec streams into pattern vectors")
    sp.add_argument("--patterns", required=True)
    sp.add_argument("--n", type=int)
    sp.add_argument("--normalization", choices=("linear", "extended"))
    sp.add_argument("--rank-frequency", help="also write rank/log10-count TSV here")

    sp = add("pca", cmd_pca, "principal components of a vector file")
    sp.add_argument("--vectors", required=True)
    sp.add_argument("--m", type=int)

    sp = add("correlate", cmd_correlate, "PCA axis correlations with ranks or style marks")
    sp.add_argument("--vectors")
    sp.add_argument("--refs")
    sp.add_argument("--m", type=int)

    sp = add("train", cmd_train, "train a classifier on a vector file")
    sp.add_argument("--study", choices=("strength", "style"), default="style")
    sp.add_argument("--vectors", required=True)
    sp.add_argument("--refs")
    sp.add_argument("--method", choices=("knn", "nn", "bayes", "pca", "random", "joint"),
                    default="knn")
    sp.add_argument("--games", type=int, default=17, help="sample size for strength k-NN")
    sp.add_argument("--runs", type=int, default=20, help="cross-validation runs for joint")

    sp = add("classify", cmd_classify, "apply a trained model to a vector file")
    sp.add_argument("--model", required=True)
    sp.add_argument("--vectors", required=True)

    sp = add("crossval", cmd_crossval, "run the strength or style evaluation")
    sp.add_argument("--study", choices=("strength", "style"), default="style")
    sp.add_argument("--in", dest="inputs", nargs="+")
    sp.add_argument("--vectors")
    sp.add_argument("--refs")
    sp.add_argument("--runs", type=int)
    sp.add_argument("--repetitions", type=int)
    sp.add_argument("--even-only", action="store_true", help="skip handicap games")
    sp.add_argument("--clear-ranks", action="store_true",
                    help="skip games where either player lacks a k/d rank")

    sp = add("sociomap", cmd_sociomap, "lay out reference players by style marks")
    sp.add_argument("--refs")
    sp.add_argument("--vectors", help="pattern vectors for the height field")
    sp.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    sp.add_argument("--restarts", type=int, default=20)
    sp.add_argument("--iters", type=int, default=5000)
    sp.add_argument("--year", action="store_true", help="append median year to style vectors")
    sp.add_argument("--include-excluded", action="store_true")

    sp = add("synth", cmd_synth, "generate a synthetic SGF corpus")
    sp.add_argument("--profile", choices=("strength", "style", "flat"), default="strength")
    sp.add_argument("--games", type=int, help="games per group")
    sp.add_argument("--refs")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"gopatterns: error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return 0 if exc.code in (0, None) else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        print(f"gopatterns: error: {exc}", file=sys.stderr)
        return 1
    except (DataError, SGFError, IllegalMove, ValueError, OSError, ArithmeticError) as exc:
        print(f"gopatterns: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
