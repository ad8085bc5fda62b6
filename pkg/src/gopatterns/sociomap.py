"""Team profiling and ordering-preserving 2D layouts (sociomaps).

``A[i, j]`` is the significance of the difference between subjects ``i``
and ``j``: the probability that two points drawn uniformly from the input
box lie closer (in the Manhattan metric) than ``i`` and ``j`` do.  A layout
is good when, for every subject, the ordering of its significances towards
two others matches the ordering of its plane distances towards them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

log = logging.getLogger(__name__)

DEFAULT_SAMPLES = 100_000
DEFAULT_RESTARTS = 20
DEFAULT_ITERS = 5000


@dataclass
class ProfileMatrix:
    a: np.ndarray
    subjects: list[str]
    metric: str = "manhattan"


@dataclass
class Layout:
    subjects: list[str]
    positions: np.ndarray  # (n, 2)
    score: float
    iterations: int
    seed: int
    restart: int = 0


def manhattan(x, y) -> float:
    return float(np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)).sum())


def team_profile(styles, subjects: Optional[Sequence[str]] = None,
                 samples: int = DEFAULT_SAMPLES, seed: int = 0, bounds=None) -> ProfileMatrix:
    """Monte Carlo difference-significance matrix.

    ``bounds`` is a ``(lo, hi)`` pair (scalars or per-dimension arrays) for
    the uniform reference distribution; by default the observed per-dimension
    range of ``styles`` is used.
    """
    s = np.atleast_2d(np.asarray(styles, dtype=float))
    n, dims = s.shape
    subjects = list(subjects) if subjects is not None else [str(i) for i in range(n)]
    if samples < 10_000:
        raise ValueError("at least 10^4 samples are required")
    if bounds is None:
        lo, hi = s.min(axis=0), s.max(axis=0)
    else:
        lo = np.broadcast_to(np.asarray(bounds[0], dtype=float), (dims,))
        hi = np.broadcast_to(np.asarray(bounds[1], dtype=float), (dims,))
    d = np.abs(s[:, None, :] - s[None, :, :]).sum(axis=2)
    if not d.any():
        log.warning("all style vectors are identical; profile is all zeros")
        return ProfileMatrix(np.zeros((n, n)), subjects)
    rng = np.random.default_rng(seed)
    u = rng.uniform(lo, hi, size=(samples, dims))
    v = rng.uniform(lo, hi, size=(samples, dims))
    ref = np.sort(np.abs(u - v).sum(axis=1))
    a = np.searchsorted(ref, d, side="left") / samples
    np.fill_diagonal(a, 0.0)
    return ProfileMatrix(a, subjects)


def delta(a, b, c) -> int:
    """Sign of ``|a - b| - |a - c|``, with ``|.|`` the Euclidean norm for points."""
    a, b, c = (np.asarray(v, dtype=float) for v in (a, b, c))
    db = np.linalg.norm(a - b)
    dc = np.linalg.norm(a - c)
    return int(np.sign(db - dc))


def _distances(positions: np.ndarray) -> np.ndarray:
    diff = positions[:, None, :] - positions[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=2))


def _triple_matches(a: np.ndarray, d: np.ndarray) -> np.ndarray:
    """match[i, j, k]: the A ordering of (ij, ik) agrees with the plane ordering."""
    sa = np.sign(a[:, :, None] - a[:, None, :])
    sd = np.sign(d[:, :, None] - d[:, None, :])
    return sa == sd


def _valid_triples(n: int) -> np.ndarray:
    i, j, k = np.ogrid[:n, :n, :n]
    return (i != j) & (j != k) & (i != k)


def three_way_score(a, positions) -> float:
    """Fraction of ordered triples (i, j, k) of distinct subjects whose
    significance ordering ``A_ij`` vs ``A_ik`` matches the ordering of the
    plane distances from ``i``."""
    a = np.asarray(a, dtype=float)
    positions = np.asarray(positions, dtype=float)
    n = len(a)
    if n < 3:
        return 1.0
    ok = _triple_matches(a, _distances(positions)) & _valid_triples(n)
    return float(ok.sum() / (n * (n - 1) * (n - 2)))


class _Scorer:
    """Incremental triple count for single-subject moves."""

    def __init__(self, a: np.ndarray, positions: np.ndarray):
        self.a = a
        self.n = len(a)
        self.pos = positions.copy()
        self.d = _distances(self.pos)
        self.sa = np.sign(a[:, :, None] - a[:, None, :])
        self.valid = _valid_triples(self.n)
        self.count = int(((self.sa == np.sign(self.d[:, :, None] - self.d[:, None, :]))
                          & self.valid).sum())

    def _involving(self, s: int, d: np.ndarray) -> int:
        """Matching triples that contain subject ``s``."""
        n = self.n
        # triples with s as apex: (s, j, k)
        row = d[s]
        apex = (self.sa[s] == np.sign(row[:, None] - row[None, :])) & self.valid[s]
        # triples (i, s, k) and (i, k, s): each pair counted twice by symmetry
        ds = d[:, s]
        side = (self.sa[:, s, :] == np.sign(ds[:, None] - d))
        mask = np.ones((n, n), dtype=bool)
        mask[s, :] = False
        mask[:, s] = False
        np.fill_diagonal(mask, False)
        return int(apex.sum()) + 2 * int((side & mask).sum())

    def propose(self, s: int, new_point: np.ndarray) -> tuple[int, np.ndarray]:
        d = self.d.copy()
        diff = self.pos - new_point
        row = np.sqrt((diff ** 2).sum(axis=1))
        row[s] = 0.0
        d[s, :] = row
        d[:, s] = row
        return self.count - self._involving(s, self.d) + self._involving(s, d), d

    def accept(self, s: int, new_point: np.ndarray, count: int, d: np.ndarray):
        self.pos[s] = new_point
        self.d = d
        self.count = count


def layout(a, subjects: Optional[Sequence[str]] = None, seed: int = 0,
           restarts: int = DEFAULT_RESTARTS, iters: int = DEFAULT_ITERS,
           step0: float = 0.25, step_min: float = 0.002) -> Layout:
    """Best-of-restarts hill climbing on the three-way score.

    Each iteration moves one random subject by a Gaussian step whose scale
    decays geometrically from ``step0`` to ``step_min``; the move is kept
    unless the score drops.  Ties between restarts go to the earliest.
    """
    a = np.asarray(a, dtype=float)
    n = len(a)
    subjects = list(subjects) if subjects is not None else [str(i) for i in range(n)]
    total = n * (n - 1) * (n - 2)
    best: Optional[Layout] = None
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        pos = rng.uniform(0.0, 1.0, size=(n, 2))
        if n < 3:
            return Layout(subjects, pos, 1.0, 0, seed, r)
        scorer = _Scorer(a, pos)
        used = 0
        for it in range(iters):
            if scorer.count == total:
                break
            used = it + 1
            scale = step0 * (step_min / step0) ** (it / max(iters - 1, 1))
            s = int(rng.integers(n))
            point = scorer.pos[s] + rng.normal(0.0, scale, size=2)
            count, d = scorer.propose(s, point)
            if count >= scorer.count:
                scorer.accept(s, point, count, d)
        result = Layout(subjects, scorer.pos, scorer.count / total, used, seed, r)
        if best is None or result.score > best.score:
            best = result
        if best.score == 1.0:
            break
    return best


def height_field(projections: Mapping[str, Sequence[float]], eigenvalues,
                 subjects: Sequence[str]) -> dict[str, float]:
    """Node heights from the first two PCA coordinates weighted by their eigenvalues."""
    lam = np.zeros(2)
    ev = np.asarray(eigenvalues, dtype=float)[:2]
    lam[:len(ev)] = ev
    out = {}
    for s in subjects:
        r = projections.get(s)
        if r is None:
            log.warning("no projection for %r; omitted from the height field", s)
            continue
        r2 = np.zeros(2)
        rr = np.asarray(r, dtype=float)[:2]
        r2[:len(rr)] = rr
        out[s] = float(lam @ r2)
    return out


def write_layout(path, lay: Layout, heights: Optional[Mapping[str, float]] = None):
    lines = ["subject\tx\ty\theight\tscore"]
    for name, (x, y) in zip(lay.subjects, lay.positions):
        h = "" if heights is None or name not in heights else repr(heights[name])
        lines.append(f"{name}\t{x!r}\t{y!r}\t{h}\t{lay.score!r}")
    Path(path).write_text("\n".join(lines) + "\n")
