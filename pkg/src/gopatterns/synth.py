"""Synthetic game corpora with controlled move-choice biases.

Every move is drawn from a menu of move kinds (corner openings, approaches,
contact plays, ataris, captures, ...).  The log-weight of each kind is an
affine function of the group's parameter vector plus optional Gaussian bumps,
so pattern frequencies shift smoothly with the parameters.  Games are legal
by construction: candidate points go through the board engine's legality
check and fall back to a random legal point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .board import BLACK, EMPTY, N, NEIGHBORS, WHITE, BoardState, index, point_of
from .sgf import GameMeta, GameRecord, Move, parse_rank, rank_text, to_sgf

KINDS = (
    "open44", "open34", "open33", "open54", "open53", "open55",
    "approach_low", "approach_high", "enclosure", "extension", "pincer",
    "contact", "hane", "atari", "capture", "escape", "crawl", "center", "random",
)

# (x, y) of each opening point in the upper-left corner, 0-based.
OPENINGS = {"open44": (3, 3), "open34": (2, 3), "open33": (2, 2), "open54": (4, 3),
            "open53": (4, 2), "open55": (4, 4)}

KNIGHT = ((1, 2), (2, 1), (-1, 2), (-2, 1), (1, -2), (2, -1), (-1, -2), (-2, -1))
ORTHO = ((1, 0), (-1, 0), (0, 1), (0, -1))
DIAG = ((1, 1), (1, -1), (-1, 1), (-1, -1))


@dataclass
class KindWeights:
    """log w(kind) = bias + coef . params + sum of amp * exp(-(p_k - c)^2 / (2 s^2))."""
    bias: dict
    coef: dict = field(default_factory=dict)      # kind -> sequence over params
    bumps: dict = field(default_factory=dict)     # kind -> [(param index, center, width, amp)]

    def weights(self, params: Sequence[float]) -> np.ndarray:
        p = np.asarray(params, dtype=float)
        out = []
        for kind in KINDS:
            lw = self.bias.get(kind, -math.inf)
            if kind in self.coef:
                lw += float(np.dot(self.coef[kind], p))
            for k, c, s, amp in self.bumps.get(kind, ()):
                lw += amp * math.exp(-((p[k] - c) ** 2) / (2 * s * s))
            out.append(0.0 if lw == -math.inf else math.exp(lw))
        return np.array(out)


@dataclass
class GroupSpec:
    key: str
    params: tuple
    rank: Optional[str] = None          # rank label written to BR/WR
    player: Optional[str] = None        # player name written to PB/PW
    openings: Optional[tuple] = None    # restricts the opening kinds


@dataclass
class Profile:
    groups: list
    weights: KindWeights
    games_per_group: int = 20
    moves: tuple = (60, 90)
    pairing: str = "same"   # "same": both sides from the group; "mixed": random opponent group


# --- move generators -------------------------------------------------------------


def _on(x, y):
    return 0 <= x < N and 0 <= y < N


def _line(p):
    x, y = p
    return min(x, y, N - 1 - x, N - 1 - y) + 1


def _groups(state: BoardState):
    grid = state.grid
    seen = set()
    out = []
    for i in range(N * N):
        if grid[i] in (BLACK, WHITE) and i not in seen:
            stones, libs = state.group(i)
            seen.update(stones)
            out.append((grid[i], stones, libs))
    return out


class _Ctx:
    def __init__(self, state: BoardState, color: int, rng, openings):
        self.state = state
        self.color = color
        self.rng = rng
        self.openings = openings
        self._groups = None

    @property
    def groups(self):
        if self._groups is None:
            self._groups = _groups(self.state)
        return self._groups

    def stones(self, color):
        grid = self.state.grid
        return [point_of(i) for i in range(N * N) if grid[i] == color]

    def pick(self, points):
        points = [p for p in points if _on(*p) and self.state.is_legal(self.color, p)]
        if not points:
            return None
        return points[int(self.rng.integers(len(points)))]


def _empty_corners(ctx: _Ctx):
    grid = ctx.state.grid
    out = []
    for fx in (False, True):
        for fy in (False, True):
            region = [index((N - 1 - x if fx else x, N - 1 - y if fy else y))
                      for x in range(7) for y in range(7)]
            if all(grid[i] == EMPTY for i in region):
                out.append((fx, fy))
    return out


def _opening(kind):
    def gen(ctx: _Ctx):
        if ctx.openings is not None and kind not in ctx.openings:
            return None
        corners = _empty_corners(ctx)
        if not corners:
            return None
        fx, fy = corners[int(ctx.rng.integers(len(corners)))]
        x, y = OPENINGS[kind]
        if ctx.rng.random() < 0.5:
            x, y = y, x
        return ctx.pick([(N - 1 - x if fx else x, N - 1 - y if fy else y)])
    return gen


def _relative(targets_of, offsets, prefer=None):
    """Point at one of ``offsets`` from a stone chosen by ``targets_of``."""
    def gen(ctx: _Ctx):
        targets = targets_of(ctx)
        if not targets:
            return None
        t = targets[int(ctx.rng.integers(len(targets)))]
        cands = [(t[0] + dx, t[1] + dy) for dx, dy in offsets]
        cands = [p for p in cands if _on(*p) and ctx.state.is_legal(ctx.color, p)]
        if not cands:
            return None
        if prefer is not None:
            target = prefer([_line(p) for p in cands])
            gap = min(abs(_line(p) - target) for p in cands)
            cands = [p for p in cands if abs(_line(p) - target) == gap]
        return cands[int(ctx.rng.integers(len(cands)))]
    return gen


def _own(ctx):
    return ctx.stones(ctx.color)


def _foe(ctx):
    return ctx.stones(3 - ctx.color)


def _last(ctx):
    lm = ctx.state.last_move
    return [lm] if lm is not None else []


def _lonely_foe(ctx):
    grid = ctx.state.grid
    out = []
    for p in _foe(ctx):
        x, y = p
        crowded = any(grid[index((x + dx, y + dy))] != EMPTY
                      for dx in range(-2, 3) for dy in range(-2, 3)
                      if (dx or dy) and _on(x + dx, y + dy))
        if not crowded and _line(p) <= 5:
            out.append(p)
    return out


def _liberty_move(colour_of, nlibs):
    def gen(ctx: _Ctx):
        target = colour_of(ctx)
        libs = [sorted(libs) for color, _, libs in ctx.groups
                if color == target and len(libs) == nlibs]
        if not libs:
            return None
        chosen = libs[int(ctx.rng.integers(len(libs)))]
        return ctx.pick([point_of(i) for i in chosen])
    return gen


def _crawl(ctx: _Ctx):
    cands = [(x + dx, y + dy) for x, y in _own(ctx) for dx, dy in ORTHO
             if _on(x + dx, y + dy) and _line((x + dx, y + dy)) == 2]
    return ctx.pick(cands)


def _center(ctx: _Ctx):
    cands = [(x, y) for x in range(6, N - 6) for y in range(6, N - 6)]
    return ctx.pick([cands[int(ctx.rng.integers(len(cands)))] for _ in range(8)])


def _random(ctx: _Ctx):
    for _ in range(50):
        p = (int(ctx.rng.integers(N)), int(ctx.rng.integers(N)))
        if ctx.state.is_legal(ctx.color, p):
            return p
    return ctx.pick([point_of(i) for i in range(N * N)])


GENERATORS: dict[str, Callable] = {
    **{k: _opening(k) for k in OPENINGS},
    "approach_low": _relative(_lonely_foe, KNIGHT, prefer=min),
    "approach_high": _relative(_lonely_foe, KNIGHT + ((2, 0), (-2, 0), (0, 2), (0, -2)),
                               prefer=max),
    "enclosure": _relative(_own, KNIGHT + ((2, 0), (-2, 0), (0, 2), (0, -2)),
                           prefer=lambda lines: min(3, max(lines))),
    "extension": _relative(_own, ((4, 0), (-4, 0), (0, 4), (0, -4), (3, 0), (-3, 0),
                                  (0, 3), (0, -3))),
    "pincer": _relative(_lonely_foe, ((4, 0), (-4, 0), (0, 4), (0, -4), (3, 1), (-3, 1),
                                      (1, 3), (1, -3), (-1, 3), (3, -1), (-3, -1), (-1, -3))),
    "contact": _relative(_last, ORTHO),
    "hane": _relative(_last, DIAG),
    "atari": _liberty_move(lambda c: 3 - c.color, 2),
    "capture": _liberty_move(lambda c: 3 - c.color, 1),
    "escape": _liberty_move(lambda c: c.color, 1),
    "crawl": _crawl,
    "center": _center,
    "random": _random,
}


def choose_move(state: BoardState, color: int, weights: np.ndarray, rng,
                openings=None) -> tuple[int, int]:
    ctx = _Ctx(state, color, rng, openings)
    w = weights.astype(float).copy()
    while w.sum() > 0:
        k = int(rng.choice(len(KINDS), p=w / w.sum()))
        p = GENERATORS[KINDS[k]](ctx)
        if p is not None:
            return p
        w[k] = 0.0
    return _random(ctx)


# --- corpora -----------------------------------------------------------------------


def generate_game(black: GroupSpec, white: GroupSpec, weights: KindWeights, rng,
                  length: int) -> list[Move]:
    state = BoardState()
    w = {BLACK: weights.weights(black.params), WHITE: weights.weights(white.params)}
    openings = {BLACK: black.openings, WHITE: white.openings}
    moves = []
    color = BLACK
    for _ in range(length):
        p = choose_move(state, color, w[color], rng, openings[color])
        if p is None:
            break
        state.play(color, p)
        moves.append(Move("B" if color == BLACK else "W", p))
        color = 3 - color
    return moves


def generate_synthetic_corpus(profile: Profile, seed: int) -> dict[str, str]:
    """Map of file name to SGF text; one file per group holding its games."""
    files = {}
    for gi, group in enumerate(profile.groups):
        trees = []
        for g in range(profile.games_per_group):
            rng = np.random.default_rng([seed, gi, g])
            if profile.pairing == "mixed" and len(profile.groups) > 1:
                oi = int(rng.integers(len(profile.groups) - 1))
                opponent = profile.groups[oi + (oi >= gi)]
            else:
                opponent = group
            black, white = (group, opponent) if g % 2 == 0 else (opponent, group)
            length = int(rng.integers(profile.moves[0], profile.moves[1] + 1))
            moves = generate_game(black, white, profile.weights, rng, length)
            meta = GameMeta(
                black_rank=parse_rank(black.rank), white_rank=parse_rank(white.rank),
                black_player=black.player or f"{black.key}-b{g}",
                white_player=white.player or f"{white.key}-w{g}",
                result="?", komi=6.5,
            )
            trees.append(to_sgf(GameRecord(moves=moves, meta=meta)))
        safe = "".join(c if c.isalnum() or c in "-_" else "_" for c in group.key)
        files[f"{gi:02d}_{safe}.sgf"] = "".join(trees)
    return files


def write_corpus(files: dict[str, str], out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, text in sorted(files.items()):
        path = out / name
        path.write_text(text)
        paths.append(path)
    return paths


# --- stock profiles ------------------------------------------------------------------


STRENGTH_RANKS = tuple(range(26, -4, -1))  # 26k .. 4d, 30 groups


def strength_weights() -> KindWeights:
    """One parameter, t in [0, 1] from weakest to strongest."""
    bias = {k: 0.0 for k in KINDS}
    bias.update({"capture": 1.0, "escape": 0.5, "random": 0.5})
    coef = {
        "open34": [2.0], "open33": [0.8], "open44": [1.0], "open55": [-2.0],
        "approach_low": [2.0], "enclosure": [2.0], "extension": [1.5],
        "contact": [-1.5], "hane": [-1.0], "crawl": [-1.5], "center": [-2.5],
        "random": [-3.0], "atari": [-0.5],
    }
    bumps = {
        "open54": [(0, 0.3, 0.12, 2.0)], "open53": [(0, 0.65, 0.12, 2.0)],
        "pincer": [(0, 0.85, 0.12, 2.0)], "approach_high": [(0, 0.15, 0.12, 2.0)],
        "atari": [(0, 0.45, 0.12, 2.0)],
    }
    return KindWeights(bias, coef, bumps)


def strength_profile(games_per_group: int = 30, flat: bool = False,
                     moves=(50, 80)) -> Profile:
    groups = []
    for i, rank in enumerate(STRENGTH_RANKS):
        t = i / (len(STRENGTH_RANKS) - 1)
        label = rank_text(rank)
        groups.append(GroupSpec(label, (0.0 if flat else t,), rank=label))
    return Profile(groups, strength_weights(), games_per_group, moves, "same")


def style_weights() -> KindWeights:
    """Four parameters: territoriality, novelty, aggressivity, thinness, each in [0, 1]."""
    bias = {k: 0.0 for k in KINDS}
    bias.update({"capture": 1.0, "escape": 0.5, "random": -0.5})
    #            tau   omega alpha theta
    coef = {
        "open34":        [2.0, -1.5, 0.0, 0.0],
        "open33":        [2.0, 0.0, 0.0, 1.0],
        "open44":        [-2.0, -0.5, 0.0, 0.0],
        "open54":        [-1.0, 2.0, 0.0, 0.0],
        "open53":        [0.5, 2.0, 0.0, 0.0],
        "open55":        [-2.0, 2.5, 0.0, 0.0],
        "approach_low":  [2.0, 0.0, 0.0, 0.0],
        "approach_high": [-2.0, 0.5, 0.0, 0.0],
        "enclosure":     [1.0, -1.5, -1.0, -2.0],
        "extension":     [0.5, -1.0, -1.5, -1.5],
        "pincer":        [0.0, 0.5, 2.0, 0.5],
        "contact":       [0.0, 0.0, 2.5, 0.5],
        "hane":          [0.0, 0.5, 2.0, 0.0],
        "atari":         [0.0, 0.0, 2.5, 0.0],
        "crawl":         [0.5, 0.0, 0.0, 2.5],
        "center":        [-2.5, 1.0, 0.5, -0.5],
        "random":        [0.0, 1.5, 0.0, 0.5],
    }
    return KindWeights(bias, coef)


def style_profile(references, games_per_player: int = 40, moves=(50, 80)) -> Profile:
    """``references`` is a sequence of (name, (tau, omega, alpha, theta)) on the 1-10 scale."""
    groups = [GroupSpec(name, tuple((np.asarray(style, dtype=float) - 1.0) / 9.0), player=name)
              for name, style in references]
    return Profile(groups, style_weights(), games_per_player, moves, "mixed")
