"""SGF game-record parsing and collection grouping.

Coordinates are ``(x, y)`` pairs, 0-based, ``x`` counted from the left edge
and ``y`` from the top edge (the SGF letter order), so ``"pd"`` is ``(15, 3)``,
i.e. Q16 in GTP notation.  A pass is represented by ``None``.
"""

from __future__ import annotations

import logging
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

log = logging.getLogger(__name__)

BOARD_SIZE = 19
GTP_COLUMNS = "ABCDEFGHJKLMNOPQRST"


class SGFError(ValueError):
    pass


class SGFParseError(SGFError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte offset {offset}")
        self.offset = offset


class UnsupportedBoardSize(SGFError):
    pass


class InconsistentRecord(SGFError):
    pass


@dataclass(frozen=True)
class Move:
    color: str  # "B" or "W"
    point: Optional[tuple[int, int]]

    @property
    def is_pass(self) -> bool:
        return self.point is None


@dataclass(frozen=True)
class RankLabel:
    raw: str
    value: int


@dataclass
class GameMeta:
    black_rank: Optional[RankLabel] = None
    white_rank: Optional[RankLabel] = None
    result: Optional[str] = None
    date: Optional[str] = None
    black_player: Optional[str] = None
    white_player: Optional[str] = None
    komi: Optional[float] = None
    even_game: bool = True

    @property
    def year(self) -> Optional[int]:
        return int(self.date[:4]) if self.date else None


@dataclass
class GameRecord:
    moves: list[Move]
    handicap: int = 0
    handicap_placements: list[tuple[int, int]] = field(default_factory=list)
    setup_white: list[tuple[int, int]] = field(default_factory=list)
    board_size: int = BOARD_SIZE
    meta: GameMeta = field(default_factory=GameMeta)
    game_id: str = field(default="", compare=False)


def to_gtp(point: Optional[tuple[int, int]]) -> str:
    if point is None:
        return "pass"
    x, y = point
    return f"{GTP_COLUMNS[x]}{BOARD_SIZE - y}"


_RANK_RE = re.compile(r"\s*(\d+)\s*([kd])", re.IGNORECASE)


def parse_rank(text: Optional[str]) -> Optional[RankLabel]:
    """Map a kyu/dan rank tag to an integer; ``None`` when unrecognized.

    Kyu ranks map to their kyu number, d-dan to ``1 - d`` (so 1d is 0 and
    4d is -3).  Trailing qualifiers such as ``"6k*"`` or ``"2d?"`` are
    dropped.
    """
    if not text:
        return None
    m = _RANK_RE.match(text)
    if not m:
        return None
    number = int(m.group(1))
    if m.group(2).lower() == "k":
        if not 1 <= number <= 30:
            return None
        return RankLabel(text, number)
    if not 1 <= number <= 9:
        return None
    return RankLabel(text, 1 - number)


def rank_text(value: int) -> str:
    """Inverse of :func:`parse_rank` on canonical labels."""
    return f"{value}k" if value > 0 else f"{1 - value}d"


# --- tokenizer / tree builder -------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message: str, pos: Optional[int] = None) -> SGFParseError:
        pos = self.pos if pos is None else pos
        return SGFParseError(message, len(self.text[:pos].encode("utf-8")))

    def skip_ws(self):
        text, n = self.text, len(self.text)
        while self.pos < n and text[self.pos].isspace():
            self.pos += 1

    def collection(self) -> list:
        trees = []
        n = len(self.text)
        while True:
            # Anything outside a game tree (headers, mail quoting) is ignored.
            start = self.text.find("(", self.pos)
            if start < 0:
                break
            self.pos = start
            trees.append(self.game_tree())
        if not trees:
            raise self.error("no game tree found", n)
        return trees

    def game_tree(self):
        if self.text[self.pos] != "(":
            raise self.error("expected '('")
        self.pos += 1
        self.skip_ws()
        nodes = []
        while self.pos < len(self.text) and self.text[self.pos] == ";":
            nodes.append(self.node())
            self.skip_ws()
        if not nodes:
            raise self.error("game tree without nodes")
        children = []
        while self.pos < len(self.text) and self.text[self.pos] == "(":
            children.append(self.game_tree())
            self.skip_ws()
        if self.pos >= len(self.text):
            raise self.error("unterminated game tree")
        if self.text[self.pos] != ")":
            raise self.error(f"unexpected character {self.text[self.pos]!r}")
        self.pos += 1
        self.skip_ws()
        return nodes, children

    def node(self) -> dict:
        self.pos += 1  # ';'
        props: dict[str, list[tuple[str, int]]] = {}
        text = self.text
        while True:
            self.skip_ws()
            if self.pos >= len(text) or not text[self.pos].isalpha():
                return props
            start = self.pos
            while self.pos < len(text) and text[self.pos].isalpha():
                self.pos += 1
            # FF[3] allows lowercase letters inside identifiers; only
            # the uppercase ones are significant.
            ident = "".join(c for c in text[start:self.pos] if c.isupper())
            if not ident:
                raise self.error("property identifier without uppercase letters", start)
            self.skip_ws()
            values = []
            while self.pos < len(text) and text[self.pos] == "[":
                values.append(self.value())
                self.skip_ws()
            if not values:
                raise self.error(f"property {ident} has no value")
            props.setdefault(ident, []).extend(values)

    def value(self) -> tuple[str, int]:
        start = self.pos
        self.pos += 1
        text = self.text
        out = []
        while True:
            if self.pos >= len(text):
                raise self.error("unterminated property value", start)
            c = text[self.pos]
            if c == "\\":
                self.pos += 1
                if self.pos < len(text):
                    out.append(text[self.pos])
            elif c == "]":
                self.pos += 1
                return "".join(out), start
            else:
                out.append(c)
            self.pos += 1


def _main_line(tree) -> list[dict]:
    nodes, children = tree
    line = list(nodes)
    while children:
        nodes, children = children[0]
        line.extend(nodes)
    return line


def _point(parser: _Parser, value: str, offset: int) -> Optional[tuple[int, int]]:
    value = value.strip()
    if value == "" or value == "tt":
        return None
    if len(value) != 2 or not all("a" <= c <= "s" for c in value):
        raise parser.error(f"bad coordinate {value!r}", offset)
    return ord(value[0]) - 97, ord(value[1]) - 97


def _points(parser: _Parser, values) -> list[tuple[int, int]]:
    out = []
    for value, offset in values:
        if ":" in value:
            a, b = value.split(":", 1)
            p, q = _point(parser, a, offset), _point(parser, b, offset)
            if p is None or q is None:
                raise parser.error(f"bad point range {value!r}", offset)
            for x in range(min(p[0], q[0]), max(p[0], q[0]) + 1):
                for y in range(min(p[1], q[1]), max(p[1], q[1]) + 1):
                    out.append((x, y))
        else:
            p = _point(parser, value, offset)
            if p is None:
                raise parser.error("pass is not a valid setup point", offset)
            out.append(p)
    return out


def _first(props: dict, ident: str) -> Optional[str]:
    values = props.get(ident)
    return values[0][0].strip() if values else None


_DATE_RE = re.compile(r"(\d{4})(?:-(\d{2})(?:-(\d{2}))?)?")


def _iso_date(text: Optional[str]) -> Optional[str]:
    if not text:
        return None
    m = _DATE_RE.search(text)
    if not m:
        return None
    return "-".join(g for g in m.groups() if g)


def _build_record(parser: _Parser, tree, game_id: str) -> GameRecord:
    line = _main_line(tree)
    root = line[0]
    size = _first(root, "SZ")
    if size is not None and size != str(BOARD_SIZE):
        raise UnsupportedBoardSize(f"{game_id}: board size {size} is not supported")

    try:
        handicap = int(_first(root, "HA") or 0)
    except ValueError:
        handicap = 0
    placements = _points(parser, root.get("AB", []))
    setup_white = _points(parser, root.get("AW", []))

    komi = None
    if _first(root, "KM"):
        try:
            komi = float(_first(root, "KM"))
        except ValueError:
            pass

    meta = GameMeta(
        black_rank=parse_rank(_first(root, "BR")),
        white_rank=parse_rank(_first(root, "WR")),
        result=_first(root, "RE"),
        date=_iso_date(_first(root, "DT")),
        black_player=_first(root, "PB"),
        white_player=_first(root, "PW"),
        komi=komi,
        # A komi of 0.5 or less marks a handicap-style game even without HA.
        even_game=handicap == 0 and not placements and (komi is None or komi > 0.5),
    )

    moves: list[Move] = []
    for i, node in enumerate(line):
        if i > 0 and ("AB" in node or "AW" in node or "AE" in node):
            raise InconsistentRecord(f"{game_id}: setup stones after the root node")
        colors = [c for c in ("B", "W") if c in node]
        if len(colors) > 1:
            raise InconsistentRecord(f"{game_id}: node {i} has both B and W moves")
        if not colors:
            continue
        color = colors[0]
        value, offset = node[color][0]
        move = Move(color, _point(parser, value, offset))
        if moves and moves[-1].color == color:
            raise InconsistentRecord(
                f"{game_id}: {color} plays twice in a row at move {len(moves) + 1}")
        moves.append(move)

    return GameRecord(
        moves=moves,
        handicap=handicap,
        handicap_placements=placements,
        setup_white=setup_white,
        meta=meta,
        game_id=game_id,
    )


def parse_sgf(text: str, source: str = "<string>") -> list[GameRecord]:
    """Parse every game tree in ``text``, following only the main variation."""
    parser = _Parser(text)
    trees = parser.collection()
    records = []
    for i, tree in enumerate(trees):
        game_id = source if len(trees) == 1 else f"{source}#{i}"
        records.append(_build_record(parser, tree, game_id))
    return records


def read_text(path) -> str:
    raw = Path(path).read_bytes()
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError:
        return raw.decode("latin-1")


def parse_file(path) -> list[GameRecord]:
    return parse_sgf(read_text(path), source=str(path))


def _escape(value: str) -> str:
    return value.replace("\\", "\\\\").replace("]", "\\]")


def _sgf_point(point: Optional[tuple[int, int]]) -> str:
    if point is None:
        return ""
    return chr(97 + point[0]) + chr(97 + point[1])


def to_sgf(record: GameRecord) -> str:
    """Minimal SGF serialization; reparses to an equal record."""
    meta = record.meta
    root = ["FF[4]", f"SZ[{record.board_size}]"]
    if record.handicap:
        root.append(f"HA[{record.handicap}]")
    if meta.komi is not None:
        root.append(f"KM[{meta.komi:g}]")
    for ident, value in (("PB", meta.black_player), ("PW", meta.white_player),
                         ("RE", meta.result), ("DT", meta.date)):
        if value is not None:
            root.append(f"{ident}[{_escape(value)}]")
    if meta.black_rank is not None:
        root.append(f"BR[{_escape(meta.black_rank.raw)}]")
    if meta.white_rank is not None:
        root.append(f"WR[{_escape(meta.white_rank.raw)}]")
    if record.handicap_placements:
        root.append("AB" + "".join(f"[{_sgf_point(p)}]" for p in record.handicap_placements))
    if record.setup_white:
        root.append("AW" + "".join(f"[{_sgf_point(p)}]" for p in record.setup_white))
    body = "".join(f";{m.color}[{_sgf_point(m.point)}]" for m in record.moves)
    return "(;" + "".join(root) + body + ")\n"


# --- collections --------------------------------------------------------------


@dataclass(frozen=True)
class SubjectGame:
    """A game attributed to an analysis subject.

    ``color`` is the color the subject holds, or ``None`` when both colors'
    moves belong to the subject (explicit game lists).
    """
    record: GameRecord
    color: Optional[str]


@dataclass
class GroupFilter:
    kind: str = "rank"  # "rank", "player" or "list"
    players: tuple[str, ...] = ()
    lists: dict = field(default_factory=dict)  # key -> list of paths, for "list"
    even_only: bool = False
    clear_ranks: bool = False


@dataclass
class Collection:
    groups: dict
    excluded: list[tuple[str, str]] = field(default_factory=list)

    def game_count(self, key) -> int:
        return len(self.groups.get(key, []))


def sgf_paths(paths: Iterable) -> list[Path]:
    """Expand files and directories (recursively) into a sorted list of SGF files."""
    out = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            for root, _, files in os.walk(p):
                out.extend(Path(root) / f for f in files if f.lower().endswith(".sgf"))
        else:
            out.append(p)
    return sorted(set(out))


def load_games(paths: Iterable, excluded: Optional[list] = None) -> list[GameRecord]:
    games = []
    for path in sgf_paths(paths):
        try:
            games.extend(parse_file(path))
        except SGFError as exc:
            log.warning("skipping %s: %s", path, exc)
            if excluded is not None:
                excluded.append((str(path), str(exc)))
    return games


def _accept(record: GameRecord, flt: GroupFilter) -> Optional[str]:
    meta = record.meta
    if flt.even_only and not meta.even_game:
        return "not an even game"
    if flt.clear_ranks and (meta.black_rank is None or meta.white_rank is None):
        return "missing rank"
    return None


def _norm_name(name: Optional[str]) -> str:
    return " ".join((name or "").split()).casefold()


def scan_collection(paths: Iterable, flt: GroupFilter) -> Collection:
    """Group the games found under ``paths`` by analysis subject."""
    excluded: list[tuple[str, str]] = []
    groups: dict = {}

    if flt.kind == "list":
        for key, key_paths in flt.lists.items():
            for record in load_games(key_paths, excluded):
                reason = _accept(record, flt)
                if reason:
                    excluded.append((record.game_id, reason))
                    continue
                groups.setdefault(key, []).append(SubjectGame(record, None))
            if key not in groups:
                log.warning("group %r is empty and dropped", key)
        return Collection(groups, excluded)

    games = load_games(paths, excluded)
    wanted = {_norm_name(p): p for p in flt.players}
    for record in games:
        reason = _accept(record, flt)
        if reason:
            excluded.append((record.game_id, reason))
            continue
        meta = record.meta
        if flt.kind == "rank":
            for color, rank in (("B", meta.black_rank), ("W", meta.white_rank)):
                if rank is not None:
                    groups.setdefault(rank.value, []).append(SubjectGame(record, color))
        elif flt.kind == "player":
            for color, name in (("B", meta.black_player), ("W", meta.white_player)):
                key = _norm_name(name)
                if key in wanted:
                    groups.setdefault(wanted[key], []).append(SubjectGame(record, color))
        else:
            raise ValueError(f"unknown filter kind {flt.kind!r}")

    for name in flt.players:
        if name not in groups:
            log.warning("player %r has no games; group dropped", name)
    return Collection(groups, excluded)
