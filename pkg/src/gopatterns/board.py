"""19x19 Go board state for record replay.

The grid is a flat ``bytearray`` indexed ``y * 19 + x`` with one extra
trailing cell (index 361) that always holds ``OFF``; lookup tables use it for
points beyond the edge so no bounds checks are needed on the hot path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .sgf import BOARD_SIZE, GameRecord, Move

EMPTY, BLACK, WHITE, OFF = 0, 1, 2, 3
N = BOARD_SIZE
NPOINTS = N * N
OFF_INDEX = NPOINTS

COLOR = {"B": BLACK, "W": WHITE}


def other(color: int) -> int:
    return 3 - color


def index(point: tuple[int, int]) -> int:
    return point[1] * N + point[0]


def point_of(i: int) -> tuple[int, int]:
    return i % N, i // N


def _neighbors(i: int) -> tuple[int, ...]:
    x, y = point_of(i)
    return tuple(index((x + dx, y + dy)) for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1))
                 if 0 <= x + dx < N and 0 <= y + dy < N)


NEIGHBORS = tuple(_neighbors(i) for i in range(NPOINTS))


class IllegalMove(ValueError):
    def __init__(self, message: str, game_id: str = "", move_number: int = 0):
        super().__init__(f"{game_id}: move {move_number}: {message}" if game_id else message)
        self.game_id = game_id
        self.move_number = move_number


@dataclass(frozen=True)
class MoveEffect:
    captured_stones: int
    self_group_liberties_after: int
    opponent_groups_in_atari_after: int
    own_group_was_in_atari_before: bool


class BoardState:
    """Board contents plus the recent-move history the contiguity features use."""

    __slots__ = ("grid", "last_move", "second_last_move", "move_number")

    def __init__(self):
        self.grid = bytearray(NPOINTS + 1)
        self.grid[OFF_INDEX] = OFF
        self.last_move: Optional[tuple[int, int]] = None
        self.second_last_move: Optional[tuple[int, int]] = None
        self.move_number = 0

    def copy(self) -> "BoardState":
        new = BoardState.__new__(BoardState)
        new.grid = bytearray(self.grid)
        new.last_move = self.last_move
        new.second_last_move = self.second_last_move
        new.move_number = self.move_number
        return new

    def __eq__(self, other):
        return (isinstance(other, BoardState) and self.grid == other.grid
                and self.last_move == other.last_move
                and self.second_last_move == other.second_last_move
                and self.move_number == other.move_number)

    def __getitem__(self, point: tuple[int, int]) -> int:
        return self.grid[index(point)]

    def stone_count(self, color: Optional[int] = None) -> int:
        if color is None:
            return NPOINTS - self.grid.count(EMPTY)
        return self.grid.count(color)

    def group(self, i: int) -> tuple[list[int], set[int]]:
        """Stones of the group at index ``i`` and its liberties."""
        grid = self.grid
        color = grid[i]
        stones = [i]
        seen = {i}
        libs = set()
        k = 0
        while k < len(stones):
            for nb in NEIGHBORS[stones[k]]:
                c = grid[nb]
                if c == EMPTY:
                    libs.add(nb)
                elif c == color and nb not in seen:
                    seen.add(nb)
                    stones.append(nb)
            k += 1
        return stones, libs

    def liberties(self, point: tuple[int, int]) -> int:
        i = index(point)
        if self.grid[i] not in (BLACK, WHITE):
            raise ValueError(f"no stone at {point}")
        return len(self.group(i)[1])

    def place_setup(self, points, color: int):
        for p in points:
            self.grid[index(p)] = color

    def play(self, color: int, point: Optional[tuple[int, int]]) -> Optional[MoveEffect]:
        """Play in place; returns ``None`` for a pass."""
        if point is None:
            self.second_last_move = self.last_move
            self.last_move = None
            self.move_number += 1
            return None
        grid = self.grid
        i = index(point)
        if grid[i] != EMPTY:
            raise IllegalMove(f"point {point} is occupied")
        foe = other(color)

        own_in_atari = False
        for nb in NEIGHBORS[i]:
            if grid[nb] == color and len(self.group(nb)[1]) == 1:
                own_in_atari = True
                break

        grid[i] = color
        captured = 0
        for nb in NEIGHBORS[i]:
            if grid[nb] == foe:
                stones, libs = self.group(nb)
                if not libs:
                    for s in stones:
                        grid[s] = EMPTY
                    captured += len(stones)

        own_libs = len(self.group(i)[1])
        if own_libs == 0:
            grid[i] = EMPTY
            raise IllegalMove(f"suicide at {point}")

        in_atari = 0
        counted: set[int] = set()
        for nb in NEIGHBORS[i]:
            if grid[nb] == foe and nb not in counted:
                stones, libs = self.group(nb)
                counted.update(stones)
                if len(libs) == 1:
                    in_atari += 1

        self.second_last_move = self.last_move
        self.last_move = point
        self.move_number += 1
        return MoveEffect(captured, own_libs, in_atari, own_in_atari)

    def is_legal(self, color: int, point: tuple[int, int]) -> bool:
        i = index(point)
        grid = self.grid
        if grid[i] != EMPTY:
            return False
        foe = other(color)
        for nb in NEIGHBORS[i]:
            c = grid[nb]
            if c == EMPTY:
                return True
        grid[i] = color
        try:
            for nb in NEIGHBORS[i]:
                c = grid[nb]
                if c == foe and not self.group(nb)[1]:
                    return True
            return bool(self.group(i)[1])
        finally:
            grid[i] = EMPTY


def apply_move(state: BoardState, move: Move) -> tuple[BoardState, Optional[MoveEffect]]:
    """Pure move application: returns the new state and the move's effect.

    ``opponent_groups_in_atari_after`` counts opponent groups adjacent to the
    played stone left with exactly one liberty; ``own_group_was_in_atari_before``
    is true when an adjacent friendly group had a single liberty before the move.
    """
    new = state.copy()
    effect = new.play(COLOR[move.color], move.point)
    return new, effect


def initial_state(record: GameRecord) -> BoardState:
    state = BoardState()
    state.place_setup(record.handicap_placements, BLACK)
    state.place_setup(record.setup_white, WHITE)
    return state


def replay(record: GameRecord):
    """Yield ``(state_before, move, effect)`` for every move of the record."""
    state = initial_state(record)
    for number, move in enumerate(record.moves, 1):
        before = state.copy()
        try:
            effect = state.play(COLOR[move.color], move.point)
        except IllegalMove as exc:
            raise IllegalMove(str(exc), record.game_id, number) from None
        yield before, move, effect
