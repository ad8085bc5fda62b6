"""End-to-end strength and style studies.

Both studies share the same front end: replay every game once, build the
spatial dictionary, turn each subject-game into a patternspec Counter, and
aggregate those into pattern vectors.  Reports are plain TSV.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .board import IllegalMove
from .classifiers import (STRENGTH_DOMAIN, STYLE_DOMAIN, BayesClassifier, KnnConfig,
                          KnnModel, NetworkModel, PcaDirect, PcaReduced, RandomClassifier,
                          strength_scale)
from .patterns import (DEFAULT_MIN_COUNT, RADII, ExtractOptions, PatternDictionary,
                       _SpatialCounter, dictionary_from_counts, format_patternspec, scan_game)
from .sgf import Collection, GameRecord
from .stats import UndefinedCorrelation, crossval, pca_fit, pca_project, pearson, top_loadings
from .vectors import PatternIndex, PatternVector, build_index, normalize, raw_vector

log = logging.getLogger(__name__)

STYLES = ("tau", "omega", "alpha", "theta")
DEFAULT_GAME_COUNTS = (2, 9, 17, 43, 85)


@dataclass
class StudyConfig:
    study: str = "strength"
    n: int = 500
    m: Optional[int] = None          # PCA dims; None = ranks - 1 (strength) or 23 (style)
    bayes_m: int = 10
    normalization: str = "linear"
    logistic_c: float = 6.0
    no_contiguity: Optional[bool] = None   # None = True for strength, False for style
    radii: tuple = RADII
    min_count: int = DEFAULT_MIN_COUNT
    knn_k: int = 4
    knn_base: Optional[float] = None       # None = 0.9 (strength) or 0.8 (style)
    knn_scale: float = 10.0
    nn_hidden: Optional[int] = None        # None = 35 (strength) or 30 (style)
    nn_target: Optional[float] = None      # None = 0.0005 (strength) or 0.0003 (style)
    nn_max_iters: int = 1000
    games: tuple = DEFAULT_GAME_COUNTS
    repetitions: int = 50
    folds: int = 5
    runs: int = 200
    include_excluded: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.study not in ("strength", "style"):
            raise ValueError(f"unknown study {self.study!r}")
        strength = self.study == "strength"
        if self.no_contiguity is None:
            self.no_contiguity = strength
        if self.knn_base is None:
            self.knn_base = 0.9 if strength else 0.8
        if self.nn_hidden is None:
            self.nn_hidden = 35 if strength else 30
        if self.nn_target is None:
            self.nn_target = 0.0005 if strength else 0.0003

    @classmethod
    def from_mapping(cls, values: Mapping[str, str], **overrides) -> "StudyConfig":
        """Build from flat string key/values (config files), converting by field type."""
        kinds = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, text in values.items():
            key = key.replace("-", "_")
            if key not in kinds:
                raise ValueError(f"unknown configuration key {key!r}")
            kwargs[key] = _convert(kinds[key], text)
        kwargs.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kwargs)


def _convert(kind: str, text: str):
    text = text.strip()
    if "tuple" in kind:
        return tuple(int(t) for t in text.replace(",", " ").split())
    if "bool" in kind:
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if "int" in kind:
        return int(text)
    if "float" in kind:
        return float(text)
    return text


# --- shared front end ------------------------------------------------------------


@dataclass
class Corpus:
    """Per-subject lists of patternspec Counters, one per subject-game."""
    dictionary: PatternDictionary
    games: dict  # subject -> list[Counter]
    game_ids: dict = field(default_factory=dict)  # subject -> list[str]


def extract_collection(collection: Collection, radii=RADII, min_count: int = DEFAULT_MIN_COUNT,
                       no_contiguity: bool = False,
                       dictionary: Optional[PatternDictionary] = None) -> Corpus:
    """Replay each distinct game once; build the dictionary unless one is given."""
    records: dict[int, GameRecord] = {}
    for items in collection.groups.values():
        for sg in items:
            records.setdefault(id(sg.record), sg.record)
    features = {}
    for key, record in records.items():
        try:
            features[key] = scan_game(record, radii)
        except IllegalMove as exc:
            log.warning("skipping game: %s", exc)
            collection.excluded.append((record.game_id, str(exc)))
    if dictionary is None:
        counter = _SpatialCounter()
        for key in sorted(features, key=lambda k: records[k].game_id):
            for f in features[key]:
                for r, (h, cells) in f.spatial.items():
                    counter.add(r, h, cells)
        dictionary = dictionary_from_counts(counter.counts, counter.cells, radii, min_count)
    options = ExtractOptions(no_contiguity)
    games, ids = {}, {}
    for subject in sorted(collection.groups, key=str):
        for sg in collection.groups[subject]:
            feats = features.get(id(sg.record))
            if feats is None:
                continue
            specs = Counter(format_patternspec(f.pattern(dictionary, options)) for f in feats
                            if sg.color is None or f.color == sg.color)
            games.setdefault(subject, []).append(specs)
            ids.setdefault(subject, []).append(sg.record.game_id)
    return Corpus(dictionary, games, ids)


def total_counts(counters: Sequence[Counter]) -> Counter:
    out: Counter = Counter()
    for c in counters:
        out.update(c)
    return out


def make_vector(raw, config: StudyConfig, subject: str = "", games: int = 0) -> PatternVector:
    return normalize(raw, config.normalization, config.logistic_c, subject, games)


# --- strength ----------------------------------------------------------------------


@dataclass
class StrengthRow:
    method: str
    games: Optional[int]    # None for the random baseline
    mse: float
    sigma: float
    cmp: float
    samples: int


@dataclass
class StrengthReport:
    rows: list
    ranks: list
    pca_coords: np.ndarray
    pca_eigenvalues: np.ndarray
    pca_r: float
    index: PatternIndex
    skipped: list = field(default_factory=list)

    def table_tsv(self) -> str:
        lines = ["method\tG\tMSE\tsigma\tCmp\tsamples"]
        for r in self.rows:
            g = "N/A" if r.games is None else str(r.games)
            lines.append(f"{r.method}\t{g}\t{r.mse!r}\t{r.sigma!r}\t{r.cmp!r}\t{r.samples}")
        return "\n".join(lines) + "\n"

    def pca_tsv(self) -> str:
        m = self.pca_coords.shape[1]
        lines = [f"# r(axis1, rank)={self.pca_r!r}",
                 "rank\t" + "\t".join(f"axis{i + 1}" for i in range(m)),
                 "eigenvalue\t" + "\t".join(repr(float(v)) for v in self.pca_eigenvalues)]
        for rank, row in zip(self.ranks, self.pca_coords):
            lines.append(f"{rank}\t" + "\t".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"

    def write(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "strength_table.tsv").write_text(self.table_tsv())
        (out / "strength_pca.tsv").write_text(self.pca_tsv())


def _split_halves(counters: list, ids: list, rng) -> tuple[list, list]:
    """Split one rank's subject-games by game into reference and evaluation halves."""
    distinct = sorted(set(ids))
    order = rng.permutation(len(distinct))
    ref_ids = {distinct[i] for i in order[: (len(distinct) + 1) // 2]}
    ref = [c for c, g in zip(counters, ids) if g in ref_ids]
    ev = [c for c, g in zip(counters, ids) if g not in ref_ids]
    return ref, ev


def run_strength_study(config: StudyConfig, corpus: Corpus) -> StrengthReport:
    """Rank prediction evaluation on a corpus grouped by rank value."""
    ranks = sorted(k for k, v in corpus.games.items() if len(v) >= 2)
    if len(ranks) < 3:
        raise ValueError("the strength study needs at least three ranks with two games each")
    dropped = sorted(set(corpus.games) - set(ranks), key=str)
    if dropped:
        log.warning("ranks with fewer than two games dropped: %s", dropped)
    rng = np.random.default_rng([config.seed, 0])
    ref, ev = {}, {}
    for rank in ranks:
        ref[rank], ev[rank] = _split_halves(corpus.games[rank], corpus.game_ids[rank], rng)

    index = build_index(total_counts([c for r in ranks for c in ref[r]]), config.n)

    def vector(counters):
        return make_vector(raw_vector(total_counts(counters), index), config).values

    x_ref = np.array([vector(ref[r]) for r in ranks])
    y_ref = np.array(ranks, dtype=float)[:, None]
    m = config.m or len(ranks) - 1

    def knn_for(games):
        return PcaReduced(KnnModel(KnnConfig(config.knn_k, config.knn_base,
                                             strength_scale(games))), m).fit(x_ref, y_ref)

    nn = PcaReduced(NetworkModel(config.nn_hidden, config.nn_target, config.nn_max_iters,
                                 config.seed, STRENGTH_DOMAIN), m).fit(x_ref, y_ref)
    pca = PcaDirect(STRENGTH_DOMAIN).fit(x_ref, y_ref)
    rnd = RandomClassifier(STRENGTH_DOMAIN, config.seed, 1)

    raw_ev = {r: np.array([raw_vector(c, index) for c in ev[r]]).reshape(len(ev[r]), index.n)
              for r in ranks}
    errors: dict = {}
    random_err = []
    skipped = []
    for g in config.games:
        samples, truths = [], []
        for rep in range(config.repetitions):
            srng = np.random.default_rng([config.seed, 1, g, rep])
            for rank in ranks:
                units = raw_ev[rank]
                perm = srng.permutation(len(units))
                for j in range(len(units) // g):
                    raw = units[perm[j * g:(j + 1) * g]].sum(axis=0)
                    samples.append(make_vector(raw, config).values)
                    truths.append(rank)
        if not samples:
            log.warning("no rank has %d evaluation games; row G=%d skipped", g, g)
            skipped.append(g)
            continue
        xs = np.array(samples)
        t = np.array(truths, dtype=float)
        knn = knn_for(g)
        for name, model in (("k-NN", knn), ("NN", nn), ("PCA", pca)):
            pred = model.predict(xs)[:, 0]
            errors[(name, g)] = (float(((pred - t) ** 2).mean()), len(t))
        random_err.append((rnd.predict(xs)[:, 0] - t) ** 2)

    rows = []
    if random_err:
        r_all = np.concatenate(random_err)
        r_mse = float(r_all.mean())
        r_sigma = math.sqrt(r_mse)
        for name in ("k-NN", "NN", "PCA"):
            for g in sorted((g for (n, g) in errors if n == name), reverse=True):
                value, count = errors[(name, g)]
                sigma = math.sqrt(value)
                cmp_ = r_sigma / sigma if sigma > 0 else math.inf
                rows.append(StrengthRow(name, g, value, sigma, cmp_, count))
        rows.append(StrengthRow("Rnd", None, r_mse, r_sigma, 1.0, len(r_all)))

    all_vectors = np.array([vector(corpus.games[r]) for r in ranks])
    model = pca_fit(all_vectors, max(1, min(m, len(ranks) - 1)))
    coords = pca_project(model, all_vectors)
    try:
        r = pearson(coords[:, 0], ranks)
    except UndefinedCorrelation:
        r = float("nan")
    log.info("strength PCA: r(axis1, rank) = %.4f", r)
    return StrengthReport(rows, ranks, coords, model.eigenvalues, r, index, skipped)


# --- style -------------------------------------------------------------------------


@dataclass
class StyleReference:
    player: str
    means: tuple        # tau, omega, alpha, theta
    sds: tuple
    median_year: Optional[float] = None
    exclude: bool = False
    no_pca: bool = False
    year_cap: Optional[int] = None


def load_style_references(path=None) -> list[StyleReference]:
    """Read a style-marks TSV; the default is the shipped expert table."""
    if path is None:
        text = resources.files("gopatterns").joinpath("data/style_marks.tsv").read_text()
    else:
        text = Path(path).read_text()
    refs = []
    header = None
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if header is None:
            header = cols
            continue
        row = dict(zip(header, cols + [""] * (len(header) - len(cols))))
        flags = row.get("flags", "").split(",")
        cap = [f.split("=", 1)[1] for f in flags if f.startswith("year_cap=")]
        means = tuple(float(row[s]) for s in STYLES)
        if not all(1.0 <= v <= 10.0 for v in means):
            raise ValueError(f"style marks of {row['player']!r} outside [1, 10]")
        refs.append(StyleReference(
            player=row["player"], means=means,
            sds=tuple(float(row[f"{s}_sd"]) for s in STYLES),
            median_year=float(row["median_year"]) if row.get("median_year") else None,
            exclude="exclude" in flags, no_pca="no_pca" in flags,
            year_cap=int(cap[0]) if cap else None))
    return refs


def write_style_references(path, refs: Sequence[StyleReference]):
    lines = ["player\t" + "\t".join(f"{s}\t{s}_sd" for s in STYLES) + "\tmedian_year\tflags"]
    for r in refs:
        flags = [f for f, on in (("exclude", r.exclude), ("no_pca", r.no_pca)) if on]
        if r.year_cap is not None:
            flags.append(f"year_cap={r.year_cap}")
        marks = "\t".join(f"{m:g}\t{s:g}" for m, s in zip(r.means, r.sds))
        year = "" if r.median_year is None else f"{r.median_year:g}"
        lines.append(f"{r.player}\t{marks}\t{year}\t{','.join(flags)}")
    Path(path).write_text("\n".join(lines) + "\n")


def marks_correlations(refs: Sequence[StyleReference]) -> tuple[list[str], np.ndarray]:
    """Pairwise Pearson r of the style columns (and median year when all known)."""
    names = list(STYLES)
    cols = [np.array([r.means[i] for r in refs]) for i in range(4)]
    if refs and all(r.median_year is not None for r in refs):
        names.append("year")
        cols.append(np.array([r.median_year for r in refs]))
    out = np.eye(len(cols))
    for i in range(len(cols)):
        for j in range(i + 1, len(cols)):
            try:
                out[i, j] = out[j, i] = pearson(cols[i], cols[j])
            except UndefinedCorrelation:
                out[i, j] = out[j, i] = float("nan")
    return names, out


def random_mse_closed_form(truths, domain=STYLE_DOMAIN) -> float:
    """Expected squared error of a uniform guess on ``domain`` against ``truths``."""
    lo, hi = domain
    t = np.asarray(truths, dtype=float)
    return float(((hi - lo) ** 2 / 12.0 + ((lo + hi) / 2.0 - t) ** 2).mean())


def player_vectors(corpus: Corpus, refs: Sequence[StyleReference], config: StudyConfig,
                   years: Optional[Mapping[str, list]] = None):
    """Vectors for the reference players that have games; also returns the missing names."""
    present, missing = [], []
    for ref in refs:
        counters = corpus.games.get(ref.player)
        if counters and years is not None and ref.year_cap is not None:
            counters = [c for c, y in zip(counters, years.get(ref.player, []))
                        if y is None or y <= ref.year_cap]
        if not counters:
            missing.append(ref.player)
        else:
            present.append((ref, counters))
    if missing:
        log.warning("reference players without games: %s", ", ".join(missing))
    index = build_index(total_counts([c for _, cs in present for c in cs]), config.n)
    vectors = [make_vector(raw_vector(total_counts(cs), index), config, ref.player, len(cs))
               for ref, cs in present]
    return index, [ref for ref, _ in present], vectors, missing


def style_methods(config: StudyConfig) -> dict:
    """Method factories for cross-validation: (X, Y, seed) -> predict."""
    m = config.m or 23

    def knn(k):
        return lambda x, y, seed: PcaReduced(
            KnnModel(KnnConfig(k, config.knn_base, config.knn_scale)), m).fit(x, y).predict

    def nn(x, y, seed):
        return PcaReduced(NetworkModel(config.nn_hidden, config.nn_target, config.nn_max_iters,
                                       seed, STYLE_DOMAIN), m).fit(x, y).predict

    def bayes(x, y, seed):
        return PcaReduced(BayesClassifier(domain=STYLE_DOMAIN), config.bayes_m).fit(x, y).predict

    def rnd(x, y, seed):
        return RandomClassifier(STYLE_DOMAIN, seed).fit(x, y).predict

    methods = {"Neural network": nn}
    methods.update({f"k-NN (k={k})": knn(k) for k in range(1, 5)})
    methods["Naive Bayes"] = bayes
    methods["Random class."] = rnd
    return methods


JOINT_CANDIDATES = ("Neural network", "k-NN (k=1)", "k-NN (k=2)", "k-NN (k=3)", "k-NN (k=4)")


@dataclass
class StyleReport:
    mse: dict                 # method -> per-style MSE array
    joint_choice: list        # method chosen per style
    players: list
    missing: list
    pca_players: list
    pca_eigenvalues: np.ndarray
    pca_correlations: np.ndarray   # (axes, styles)
    top_patterns: list             # per axis: (top, bottom)
    marks_names: list
    marks_r: np.ndarray
    random_closed_form: np.ndarray

    @property
    def cmp(self) -> dict:
        base = self.mse["Random class."].mean()
        return {k: float(base / v.mean()) for k, v in self.mse.items()}

    def table_tsv(self) -> str:
        cmp_ = self.cmp
        lines = ["classifier\t" + "\t".join(STYLES) + "\tmean\tcmp"]
        order = sorted(self.mse, key=lambda k: (k == "Random class.", self.mse[k].mean()))
        for name in order:
            v = self.mse[name]
            lines.append(f"{name}\t" + "\t".join(repr(float(x)) for x in v)
                         + f"\t{float(v.mean())!r}\t{cmp_[name]!r}")
        lines.append("# joint choice\t" + "\t".join(self.joint_choice))
        lines.append("# random closed form\t"
                     + "\t".join(repr(float(x)) for x in self.random_closed_form))
        if self.missing:
            lines.append("# missing\t" + "\t".join(self.missing))
        return "\n".join(lines) + "\n"

    def pca_tsv(self) -> str:
        lines = ["axis\teigenvalue\t" + "\t".join(STYLES)]
        for i, (ev, row) in enumerate(zip(self.pca_eigenvalues, self.pca_correlations)):
            lines.append(f"{i + 1}\t{float(ev)!r}\t" + "\t".join(repr(float(x)) for x in row))
        return "\n".join(lines) + "\n"

    def top_tsv(self) -> str:
        lines = ["axis\tside\tpatternspec\tloading"]
        for i, (top, bottom) in enumerate(self.top_patterns):
            lines += [f"{i + 1}\t+\t{s}\t{w!r}" for s, w in top]
            lines += [f"{i + 1}\t-\t{s}\t{w!r}" for s, w in bottom]
        return "\n".join(lines) + "\n"

    def marks_tsv(self) -> str:
        lines = ["\t" + "\t".join(self.marks_names)]
        for name, row in zip(self.marks_names, self.marks_r):
            lines.append(name + "\t" + "\t".join(repr(float(x)) for x in row))
        return "\n".join(lines) + "\n"

    def write(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "style_table.tsv").write_text(self.table_tsv())
        (out / "style_pca.tsv").write_text(self.pca_tsv())
        (out / "style_top_patterns.tsv").write_text(self.top_tsv())
        (out / "style_marks_r.tsv").write_text(self.marks_tsv())


EXPECTED_TAU_THETA = 0.721


def style_crossval(config: StudyConfig, x, y, methods: Optional[dict] = None) -> tuple[dict, list]:
    methods = methods or style_methods(config)
    mse = {name: crossval(f, x, y, config.folds, config.runs, config.seed)
           for name, f in methods.items()}
    candidates = [c for c in JOINT_CANDIDATES if c in mse]
    choice = [min(candidates, key=lambda c: mse[c][d]) for d in range(y.shape[1])]
    mse["Joint classifier"] = np.array([mse[c][d] for d, c in enumerate(choice)])
    return mse, choice


def run_style_study(config: StudyConfig, corpus: Corpus, references: Sequence[StyleReference],
                    years: Optional[Mapping[str, list]] = None) -> StyleReport:
    refs = [r for r in references if config.include_excluded or not r.exclude]
    index, players, vectors, missing = player_vectors(corpus, refs, config, years)
    if len(players) < 10:
        raise ValueError(f"the style study needs at least 10 reference players, got {len(players)}")
    x = np.array([v.values for v in vectors])
    y = np.array([p.means for p in players])
    mse, choice = style_crossval(config, x, y)

    keep = [i for i, p in enumerate(players) if not p.no_pca]
    m = max(1, min(config.m or 23, len(keep) - 1))
    model = pca_fit(x[keep], m)
    coords = pca_project(model, x[keep])
    corr = np.full((m, 4), np.nan)
    for a in range(m):
        for s in range(4):
            try:
                corr[a, s] = pearson(coords[:, a], y[keep, s])
            except UndefinedCorrelation:
                pass
    top = [top_loadings(model, a, index.specs, 5) for a in range(min(m, 4))]

    names, marks_r = marks_correlations(references)
    tau_theta = marks_r[0, 3]
    log.info("style marks r(tau, theta) = %.3f (expected %.3f, diff %+.3f)",
             tau_theta, EXPECTED_TAU_THETA, tau_theta - EXPECTED_TAU_THETA)
    closed = np.array([random_mse_closed_form(y[:, s]) for s in range(4)])
    return StyleReport(mse, choice, [p.player for p in players], missing,
                       [players[i].player for i in keep], model.eigenvalues, corr, top,
                       names, marks_r, closed)
