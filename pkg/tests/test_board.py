from pathlib import Path

import numpy as np
import pytest

import oracles
from gopatterns.board import (BLACK, EMPTY, WHITE, BoardState, IllegalMove, apply_move,
                              replay)
from gopatterns.sgf import Move, parse_file, parse_sgf

CURATED = Path(__file__).parent / "data" / "curated"


def test_corner_capture():
    state = BoardState()
    state.place_setup([(0, 18)], WHITE)  # A1
    state.play(BLACK, (0, 17))           # A2
    effect = state.play(BLACK, (1, 18))  # B1
    assert effect.captured_stones == 1
    assert state[(0, 18)] == EMPTY


@pytest.mark.parametrize("point, libs", [((9, 9), 4), ((0, 0), 2), ((0, 9), 3)])
def test_lone_stone(point, libs):
    state, effect = apply_move(BoardState(), Move("B", point))
    assert effect.captured_stones == 0
    assert effect.self_group_liberties_after == libs
    assert state.liberties(point) == libs


def test_apply_move_is_pure():
    before = BoardState()
    after, _ = apply_move(before, Move("B", (3, 3)))
    assert before.stone_count() == 0 and after.stone_count() == 1


def test_pass_shifts_history():
    state = BoardState()
    state.play(BLACK, (3, 3))
    assert state.play(WHITE, None) is None
    assert state.last_move is None and state.second_last_move == (3, 3)
    assert state.move_number == 2


def test_occupied_and_suicide():
    state = BoardState()
    state.play(BLACK, (3, 3))
    with pytest.raises(IllegalMove):
        state.play(WHITE, (3, 3))
    state.place_setup([(1, 0), (0, 1)], BLACK)
    assert not state.is_legal(WHITE, (0, 0))
    snapshot = bytes(state.grid)
    with pytest.raises(IllegalMove):
        state.play(WHITE, (0, 0))
    assert bytes(state.grid) == snapshot


def test_capture_beats_suicide():
    # white at (0,0) with one liberty at (1,0) that is otherwise surrounded by black
    state = BoardState()
    state.place_setup([(0, 0)], WHITE)
    state.place_setup([(0, 1), (2, 0), (1, 1)], BLACK)
    assert state.is_legal(BLACK, (1, 0))
    effect = state.play(BLACK, (1, 0))
    assert effect.captured_stones == 1


def test_atari_counts_distinct_groups():
    state = BoardState()
    # two separate white stones each left with one liberty by the same black move
    state.place_setup([(1, 0), (0, 1)], WHITE)
    state.place_setup([(2, 0), (0, 2)], BLACK)
    effect = state.play(BLACK, (1, 1))
    assert effect.opponent_groups_in_atari_after == 2


def test_escape_flag():
    state = BoardState()
    state.place_setup([(5, 5)], BLACK)
    state.place_setup([(4, 5), (6, 5), (5, 4)], WHITE)
    effect = state.play(BLACK, (5, 6))
    assert effect.own_group_was_in_atari_before
    assert effect.self_group_liberties_after >= 2


def _to_oracle(state):
    board = [["."] * 19 for _ in range(19)]
    for y in range(19):
        for x in range(19):
            v = state[(x, y)]
            board[y][x] = "B" if v == BLACK else "W" if v == WHITE else "."
    return board


def test_liberties_match_flood_fill():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        state = BoardState()
        pts = [(int(x), int(y)) for x, y in rng.integers(0, 19, (int(rng.integers(1, 120)), 2))]
        for p in pts:
            state.place_setup([p], BLACK if rng.random() < 0.5 else WHITE)
        board = _to_oracle(state)
        x, y = pts[int(rng.integers(len(pts)))]
        assert state.liberties((x, y)) == len(oracles.chain(board, x, y)[1])


def test_replay_matches_reference_replayer():
    for path in sorted(CURATED.glob("*.sgf")):
        texts = oracles.main_lines(path.read_text())
        for record, nodes in zip(parse_file(path), texts):
            black, white, moves = oracles.game_from_nodes(nodes)
            board = [["."] * 19 for _ in range(19)]
            for x, y in black:
                board[y][x] = "B"
            for x, y in white:
                board[y][x] = "W"
            for color, p in moves:
                if p is None:
                    continue
                x, y = p
                board[y][x] = color
                foe = "W" if color == "B" else "B"
                for nx, ny in oracles.neighbours(x, y):
                    if board[ny][nx] == foe:
                        stones, libs = oracles.chain(board, nx, ny)
                        if not libs:
                            for sx, sy in stones:
                                board[sy][sx] = "."
            state = None
            for state, move, effect in replay(record):
                pass
            final = state.copy()
            last = record.moves[-1]
            final.play(BLACK if last.color == "B" else WHITE, last.point)
            assert final.stone_count(BLACK) == sum(row.count("B") for row in board)
            assert final.stone_count(WHITE) == sum(row.count("W") for row in board)


def test_replay_reports_move_number():
    (rec,) = parse_sgf("(;SZ[19];B[aa];W[ab];B[ba];W[bb];B[ac])")
    (bad,) = parse_sgf("(;SZ[19];B[aa];W[bb];B[aa])")
    with pytest.raises(IllegalMove) as info:
        list(replay(bad))
    assert info.value.move_number == 3
    assert len(list(replay(rec))) == 5
