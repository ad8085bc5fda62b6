"""Pattern vectors: per-subject counts of the globally most frequent patterns,
rescaled to [-1, 1]."""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

log = logging.getLogger(__name__)

DEFAULT_N = 500
DEFAULT_LOGISTIC_C = 6.0


@dataclass(frozen=True)
class PatternIndex:
    specs: tuple[str, ...]
    counts: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.specs)

    def position(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.specs)}


@dataclass
class PatternVector:
    subject: str
    values: np.ndarray
    normalization: str  # "linear" or "extended(c)"
    games_count: int = 0


def build_index(global_counts: Mapping[str, int], n: int = DEFAULT_N) -> PatternIndex:
    """Top ``n`` patterns by count; ties go to the lexicographically smaller spec."""
    if n < 1:
        raise ValueError("n must be positive")
    ranked = sorted(global_counts.items(), key=lambda kv: (-kv[1], kv[0]))
    if len(ranked) < n:
        log.warning("only %d distinct patterns available for an index of %d",
                    len(ranked), n)
    top = ranked[:n]
    return PatternIndex(tuple(s for s, _ in top), tuple(c for _, c in top))


def raw_vector(subject_counts: Mapping[str, int], index: PatternIndex) -> np.ndarray:
    return np.array([subject_counts.get(s, 0) for s in index.specs], dtype=float)


def _rescale(x: np.ndarray) -> np.ndarray:
    lo, hi = x.min(), x.max()
    if hi == lo:
        return np.zeros_like(x, dtype=float)
    return 2.0 * (x - lo) / (hi - lo) - 1.0


def normalize_linear(raw: Sequence[float], subject: str = "", games_count: int = 0) -> PatternVector:
    x = np.asarray(raw, dtype=float)
    if x.size == 0:
        raise ValueError("empty raw vector")
    return PatternVector(subject, _rescale(x), "linear", games_count)


def normalize_extended(raw: Sequence[float], c: float = DEFAULT_LOGISTIC_C,
                       subject: str = "", games_count: int = 0) -> PatternVector:
    """Log pre-processing, linear rescale, then a logistic squash with steepness ``c``."""
    if c <= 0:
        raise ValueError("c must be positive")
    x = np.asarray(raw, dtype=float)
    if x.size == 0:
        raise ValueError("empty raw vector")
    y = _rescale(np.log(x + 1.0))
    return PatternVector(subject, 2.0 / (1.0 + np.exp(-c * y)) - 1.0,
                         f"extended({c:g})", games_count)


def normalize(raw, normalization: str = "linear", c: float = DEFAULT_LOGISTIC_C,
              subject: str = "", games_count: int = 0) -> PatternVector:
    if normalization == "linear":
        return normalize_linear(raw, subject, games_count)
    if normalization == "extended":
        return normalize_extended(raw, c, subject, games_count)
    raise ValueError(f"unknown normalization {normalization!r}")


def rank_frequency(global_counts: Mapping[str, int]) -> list[tuple[int, float]]:
    """(rank, log10 count) rows, most frequent first."""
    counts = sorted(global_counts.values(), reverse=True)
    return [(i + 1, math.log10(c)) for i, c in enumerate(counts) if c > 0]


# --- files --------------------------------------------------------------------


def write_vectors(path, index: PatternIndex, vectors: Sequence[PatternVector]):
    lines = ["subject\tgames\t" + "\t".join(index.specs) + "\tnormalization"]
    for v in vectors:
        values = "\t".join(repr(float(x)) for x in v.values)
        lines.append(f"{v.subject}\t{v.games_count}\t{values}\t{v.normalization}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_vectors(path) -> tuple[PatternIndex, list[PatternVector]]:
    lines = Path(path).read_text().splitlines()
    header = lines[0].split("\t")
    specs = tuple(header[2:-1])
    vectors = []
    for line in lines[1:]:
        if not line:
            continue
        cols = line.split("\t")
        values = np.array([float(x) for x in cols[2:-1]])
        vectors.append(PatternVector(cols[0], values, cols[-1], int(cols[1])))
    return PatternIndex(specs, tuple(0 for _ in specs)), vectors


def write_rank_frequency(path, global_counts: Mapping[str, int]):
    rows = rank_frequency(global_counts)
    Path(path).write_text("rank\tlog10_count\n"
                          + "".join(f"{r}\t{v!r}\n" for r, v in rows))


def subject_counts(specs) -> Counter:
    return Counter(specs)
