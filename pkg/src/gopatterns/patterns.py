"""Per-move pattern features.

A move's pattern combines tactical flags (capture, atari, atari escape),
contiguity to the previous two moves, distance from the board edge, and the
spatial configuration of stones around the move.  Spatial configurations are
neighbourhoods in the gridcular metric, colour-relative to the player on move
(friend ``X``, foe ``O``, empty ``.``, off-board ``#``) and reduced to a
canonical form over the eight board symmetries.
"""

from __future__ import annotations

import hashlib
import logging
import re
from collections import Counter
from dataclasses import dataclass
from operator import itemgetter
from pathlib import Path
from typing import Iterable, Optional, Union

from .board import (BLACK, EMPTY, N, OFF, OFF_INDEX, WHITE, BoardState, IllegalMove,
                    MoveEffect, index, replay)
from .sgf import GameRecord, Move

log = logging.getLogger(__name__)

MIN_RADIUS, MAX_RADIUS = 2, 9
RADII = tuple(range(MIN_RADIUS, MAX_RADIUS + 1))
FAR = "far"
MAX_BORDER_DISTANCE = 4
DEFAULT_MIN_COUNT = 20

FRIEND, FOE, EMPTY_CELL, OFF_CELL = "X", "O", ".", "#"


def gridcular_distance(p, q) -> int:
    dx = abs(p[0] - q[0])
    dy = abs(p[1] - q[1])
    return dx + dy + max(dx, dy)


def _offsets() -> tuple[tuple[int, int], ...]:
    cells = [(dx, dy) for dy in range(-MAX_RADIUS, MAX_RADIUS + 1)
             for dx in range(-MAX_RADIUS, MAX_RADIUS + 1)
             if 0 < gridcular_distance((0, 0), (dx, dy)) <= MAX_RADIUS]
    cells.sort(key=lambda o: (gridcular_distance((0, 0), o), o[1], o[0]))
    return tuple(cells)


# Canonical enumeration order: by distance, then row, then column.  Every
# radius-r neighbourhood is a prefix of this sequence.
OFFSETS = _offsets()
OFFSET_POS = {o: i for i, o in enumerate(OFFSETS)}
RADIUS_SIZE = {r: sum(1 for o in OFFSETS if gridcular_distance((0, 0), o) <= r)
               for r in RADII}

# The dihedral group as 2x2 integer matrices (a, b, c, d): (x, y) -> (ax+by, cx+dy).
TRANSFORMS = (
    (1, 0, 0, 1), (0, -1, 1, 0), (-1, 0, 0, -1), (0, 1, -1, 0),
    (-1, 0, 0, 1), (0, 1, 1, 0), (1, 0, 0, -1), (0, -1, -1, 0),
)


def transform_offset(t: int, o: tuple[int, int]) -> tuple[int, int]:
    a, b, c, d = TRANSFORMS[t]
    return a * o[0] + b * o[1], c * o[0] + d * o[1]


@dataclass(frozen=True)
class SpatialConfiguration:
    radius: int
    cells: str  # one character per offset, in canonical enumeration order

    @property
    def offsets(self) -> tuple[tuple[int, int], ...]:
        return OFFSETS[:RADIUS_SIZE[self.radius]]

    def items(self):
        return zip(self.offsets, self.cells)

    def transformed(self, t: int) -> "SpatialConfiguration":
        """The configuration seen after applying board symmetry ``t``."""
        size = RADIUS_SIZE[self.radius]
        cells = [""] * size
        for i, o in enumerate(OFFSETS[:size]):
            cells[OFFSET_POS[transform_offset(t, o)]] = self.cells[i]
        return SpatialConfiguration(self.radius, "".join(cells))

    def color_swapped(self) -> "SpatialConfiguration":
        return SpatialConfiguration(self.radius, self.cells.translate(_SWAP))


_SWAP = str.maketrans({FRIEND: FOE, FOE: FRIEND})


def _cell_table(color_to_play: int) -> bytes:
    table = {EMPTY: EMPTY_CELL, OFF: OFF_CELL,
             color_to_play: FRIEND, 3 - color_to_play: FOE}
    return bytes(ord(table[v]) for v in range(4)) + bytes(252)


_CELL_TABLES = {BLACK: _cell_table(BLACK), WHITE: _cell_table(WHITE)}


def _grid_index(x: int, y: int) -> int:
    return index((x, y)) if 0 <= x < N and 0 <= y < N else OFF_INDEX


# _GETTERS[point][t] picks the 60 cells around ``point`` in the order of
# OFFSETS mapped through transform ``t``.
_GETTERS: list = []


def _getters():
    if not _GETTERS:
        for i in range(N * N):
            x, y = i % N, i // N
            per_t = []
            for t in range(len(TRANSFORMS)):
                idx = [_grid_index(x + dx, y + dy)
                       for dx, dy in (transform_offset(t, o) for o in OFFSETS)]
                per_t.append(itemgetter(*idx))
            _GETTERS.append(tuple(per_t))
    return _GETTERS


def spatial_configuration(state: BoardState, point: tuple[int, int], radius: int,
                          color_to_play: int) -> SpatialConfiguration:
    if not MIN_RADIUS <= radius <= MAX_RADIUS:
        raise ValueError(f"radius {radius} outside [{MIN_RADIUS}, {MAX_RADIUS}]")
    raw = bytes(_getters()[index(point)][0](state.grid)[:RADIUS_SIZE[radius]])
    return SpatialConfiguration(radius, raw.translate(_CELL_TABLES[color_to_play]).decode())


def spatial_hash(radius: int, cells: str) -> str:
    return hashlib.blake2b(f"{radius}:{cells}".encode(), digest_size=8).hexdigest()


def canonical_form(config: SpatialConfiguration) -> tuple[str, int, str]:
    """Return ``(hash, transform, cells)`` of the minimal serialization over all symmetries."""
    size = RADIUS_SIZE[config.radius]
    best = None
    best_t = 0
    for t in range(len(TRANSFORMS)):
        seq = "".join(config.cells[OFFSET_POS[transform_offset(t, o)]] for o in OFFSETS[:size])
        if best is None or seq < best:
            best, best_t = seq, t
    return spatial_hash(config.radius, best), best_t, best


def canonical_hashes(state: BoardState, point: tuple[int, int], color_to_play: int,
                     radii: Iterable[int] = RADII) -> dict[int, tuple[str, str]]:
    """Canonical ``(hash, cells)`` per radius for the neighbourhood of ``point``."""
    table = _CELL_TABLES[color_to_play]
    grid = state.grid
    seqs = [bytes(g(grid)).translate(table) for g in _getters()[index(point)]]
    out = {}
    for r in radii:
        size = RADIUS_SIZE[r]
        cells = min(s[:size] for s in seqs).decode()
        out[r] = (spatial_hash(r, cells), cells)
    return out


# --- dictionary ---------------------------------------------------------------


@dataclass(frozen=True)
class DictEntry:
    id: int
    radius: int
    hash: str
    count: int
    cells: str


class PatternDictionary:
    """Canonical spatial configurations that occurred often enough to be named."""

    def __init__(self, entries: Iterable[DictEntry] = (), radii=RADII,
                 min_count: int = DEFAULT_MIN_COUNT):
        self.entries = {e.hash: e for e in entries}
        self.radii = tuple(sorted(radii))
        self.min_count = min_count

    def __len__(self):
        return len(self.entries)

    def __contains__(self, h):
        return h in self.entries

    def get(self, h: str) -> Optional[DictEntry]:
        return self.entries.get(h)

    def sorted_entries(self) -> list[DictEntry]:
        return sorted(self.entries.values(), key=lambda e: e.id)

    def save(self, path):
        lines = [f"# radii={','.join(map(str, self.radii))} min_count={self.min_count}",
                 "id\tradius\thash\tcount\tcells"]
        lines += [f"{e.id}\t{e.radius}\t{e.hash}\t{e.count}\t{e.cells}"
                  for e in self.sorted_entries()]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> "PatternDictionary":
        radii, min_count = RADII, DEFAULT_MIN_COUNT
        entries = []
        for line in Path(path).read_text().splitlines():
            if line.startswith("#"):
                params = dict(kv.split("=") for kv in line[1:].split())
                radii = tuple(int(r) for r in params["radii"].split(","))
                min_count = int(params["min_count"])
            elif line and not line.startswith("id\t"):
                i, r, h, c, cells = line.split("\t")
                entries.append(DictEntry(int(i), int(r), h, int(c), cells))
        return cls(entries, radii, min_count)


def dictionary_from_counts(counts: Counter, cells: dict, radii=RADII,
                           min_count: int = DEFAULT_MIN_COUNT) -> PatternDictionary:
    kept = [(h, c) for h, c in counts.items() if c >= min_count]
    kept.sort(key=lambda hc: (-hc[1], hc[0]))
    entries = [DictEntry(i, cells[h][0], h, c, cells[h][1]) for i, (h, c) in enumerate(kept)]
    return PatternDictionary(entries, radii, min_count)


class _SpatialCounter:
    def __init__(self):
        self.counts: Counter = Counter()
        self.cells: dict[str, tuple[int, str]] = {}

    def add(self, radius: int, h: str, cells: str):
        known = self.cells.get(h)
        if known is None:
            self.cells[h] = (radius, cells)
        elif known != (radius, cells):
            raise RuntimeError(f"spatial hash collision on {h}")
        self.counts[h] += 1


def build_dictionary(games: Iterable[GameRecord], radii=RADII,
                     min_count: int = DEFAULT_MIN_COUNT) -> PatternDictionary:
    """Count canonical configurations of every played stone, both colours."""
    if min_count < 1:
        raise ValueError("min_count must be at least 1")
    counter = _SpatialCounter()
    n_games = 0
    for record in games:
        try:
            features = scan_game(record, radii)
        except IllegalMove as exc:
            log.warning("skipping game: %s", exc)
            continue
        n_games += 1
        for f in features:
            for r, (h, cells) in f.spatial.items():
                counter.add(r, h, cells)
    if n_games == 0:
        log.warning("empty game stream; dictionary is empty")
    return dictionary_from_counts(counter.counts, counter.cells, radii, min_count)


# --- patterns -----------------------------------------------------------------


@dataclass(frozen=True)
class Pattern:
    capture: bool = False
    atari: bool = False
    atari_escape: bool = False
    cont_last: bool = False
    cont_second_last: bool = False
    border_distance: Union[int, str] = FAR
    spatial: Optional[tuple[int, str]] = None  # (radius, hash)


@dataclass(frozen=True)
class ExtractOptions:
    no_contiguity: bool = False


def border_distance(point: tuple[int, int]) -> Union[int, str]:
    x, y = point
    d = min(x + 1, y + 1, N - x, N - y)
    return d if d <= MAX_BORDER_DISTANCE else FAR


def _touches(p, q) -> bool:
    return q is not None and max(abs(p[0] - q[0]), abs(p[1] - q[1])) == 1


@dataclass(frozen=True)
class MoveFeatures:
    """Everything about one stone placement except the dictionary lookup."""
    number: int
    color: str
    point: tuple[int, int]
    capture: bool
    atari: bool
    atari_escape: bool
    cont_last: bool
    cont_second_last: bool
    border_distance: Union[int, str]
    spatial: dict  # radius -> (hash, cells)

    def pattern(self, dictionary: PatternDictionary,
                options: ExtractOptions = ExtractOptions()) -> Pattern:
        spatial = None
        for r in reversed(dictionary.radii):
            got = self.spatial.get(r)
            if got is not None and got[0] in dictionary:
                spatial = (r, got[0])
                break
        contiguity = not options.no_contiguity
        return Pattern(self.capture, self.atari, self.atari_escape,
                       contiguity and self.cont_last, contiguity and self.cont_second_last,
                       self.border_distance, spatial)


def move_features(state_before: BoardState, move: Move, effect: MoveEffect,
                  number: int = 0, radii=RADII) -> MoveFeatures:
    p = move.point
    color = BLACK if move.color == "B" else WHITE
    return MoveFeatures(
        number=number,
        color=move.color,
        point=p,
        capture=effect.captured_stones > 0,
        atari=effect.opponent_groups_in_atari_after > 0,
        atari_escape=(effect.own_group_was_in_atari_before
                      and effect.self_group_liberties_after >= 2),
        cont_last=_touches(p, state_before.last_move),
        cont_second_last=_touches(p, state_before.second_last_move),
        border_distance=border_distance(p),
        spatial=canonical_hashes(state_before, p, color, radii),
    )


def extract_move_pattern(state_before: BoardState, move: Move, effect: MoveEffect,
                         dictionary: PatternDictionary,
                         options: ExtractOptions = ExtractOptions()) -> Pattern:
    if move.point is None:
        raise ValueError("passes have no pattern")
    return move_features(state_before, move, effect, radii=dictionary.radii).pattern(
        dictionary, options)


def scan_game(record: GameRecord, radii=RADII) -> list[MoveFeatures]:
    """Features of every stone placement in the record (passes are skipped)."""
    return [move_features(before, move, effect, number, radii)
            for number, (before, move, effect) in enumerate(replay(record), 1)
            if move.point is not None]


def extract_game(record: GameRecord, dictionary: PatternDictionary,
                 options: ExtractOptions = ExtractOptions(),
                 color: Optional[str] = None) -> list[tuple[int, str, Pattern]]:
    """``(move number, colour, pattern)`` for the stones played by ``color`` (or both)."""
    return [(f.number, f.color, f.pattern(dictionary, options))
            for f in scan_game(record, dictionary.radii)
            if color is None or f.color == color]


# --- patternspec ----------------------------------------------------------------


def format_patternspec(p: Pattern) -> str:
    spatial = "none" if p.spatial is None else f"{p.spatial[0]}:{p.spatial[1]}"
    return (f"(cap:{p.capture:d} atari:{p.atari:d} esc:{p.atari_escape:d} "
            f"cl:{p.cont_last:d} cl2:{p.cont_second_last:d} "
            f"bd:{p.border_distance} s:{spatial})")


_SPEC_RE = re.compile(
    r"\(cap:([01]) atari:([01]) esc:([01]) cl:([01]) cl2:([01]) "
    r"bd:([1-4]|far) s:(none|([2-9]):([0-9a-f]+))\)")


class PatternSpecError(ValueError):
    pass


def parse_patternspec(text: str) -> Pattern:
    m = _SPEC_RE.fullmatch(text.strip())
    if not m:
        raise PatternSpecError(f"malformed patternspec {text!r}")
    flags = [g == "1" for g in m.groups()[:5]]
    bd = m.group(6)
    spatial = None if m.group(7) == "none" else (int(m.group(8)), m.group(9))
    return Pattern(*flags, border_distance=FAR if bd == FAR else int(bd), spatial=spatial)
