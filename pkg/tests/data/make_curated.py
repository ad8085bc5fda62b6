"""Regenerate tests/data/curated/ (20 games used by the extraction oracle test).

Long synthetic games give plenty of captures, ataris and escapes; a few
hand-built records cover handicap setup, passes, FF3 syntax with variations,
and escaped property text.
"""

import sys
from pathlib import Path

import numpy as np

from gopatterns.board import BLACK, WHITE, BoardState
from gopatterns.sgf import GameMeta, GameRecord, Move, parse_rank, to_sgf
from gopatterns.synth import (GroupSpec, choose_move, generate_game, strength_weights,
                              style_weights)

OUT = Path(__file__).parent / "curated"


def play_out(state, first, weights_b, weights_w, rng, length, pass_at=()):
    moves = []
    color = first
    for i in range(length):
        if i in pass_at:
            moves.append(Move("B" if color == BLACK else "W", None))
            state.play(color, None)
        else:
            w = weights_b if color == BLACK else weights_w
            p = choose_move(state, color, w, rng)
            state.play(color, p)
            moves.append(Move("B" if color == BLACK else "W", p))
        color = 3 - color
    return moves


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    games = {}
    sw = strength_weights()
    for i, t in enumerate(np.linspace(0.0, 1.0, 8)):
        rng = np.random.default_rng([2024, i])
        g = GroupSpec("s", (float(t),))
        moves = generate_game(g, g, sw, rng, 150 + 10 * i)
        rank = f"{26 - int(round(t * 29))}k" if t < 0.9 else "2d"
        meta = GameMeta(black_rank=parse_rank(rank), white_rank=parse_rank(rank),
                        black_player=f"strength{i}b", white_player=f"strength{i}w",
                        result="B+R", komi=6.5)
        games[f"{i:02d}_strength.sgf"] = to_sgf(GameRecord(moves, meta=meta))
    yw = style_weights()
    for i in range(6):
        rng = np.random.default_rng([2025, i])
        a = GroupSpec("a", tuple(rng.uniform(0, 1, 4)))
        b = GroupSpec("b", tuple(rng.uniform(0, 1, 4)))
        moves = generate_game(a, b, yw, rng, 200)
        meta = GameMeta(black_player=f"style{i}b", white_player=f"style{i}w",
                        result="W+2.5", komi=6.5, date=f"{1990 + i}-05-01")
        games[f"{8 + i:02d}_style.sgf"] = to_sgf(GameRecord(moves, meta=meta))

    # handicap games: AB setup, white moves first
    for j, stones in enumerate(([(3, 3), (15, 15), (3, 15), (15, 3)],
                                [(3, 3), (15, 15), (3, 15), (15, 3), (9, 9),
                                 (3, 9), (15, 9), (9, 3), (9, 15)])):
        rng = np.random.default_rng([2026, j])
        state = BoardState()
        state.place_setup(stones, BLACK)
        w = sw.weights((0.4,))
        moves = play_out(state, WHITE, w, w, rng, 140)
        meta = GameMeta(black_rank=parse_rank("12k"), white_rank=parse_rank("3k"),
                        komi=0.5, even_game=False)
        rec = GameRecord(moves, handicap=len(stones), handicap_placements=stones, meta=meta)
        games[f"{14 + j:02d}_handicap.sgf"] = to_sgf(rec)

    # passes in the middle and at the end (both spellings)
    rng = np.random.default_rng([2027, 0])
    w = sw.weights((0.7,))
    moves = play_out(BoardState(), BLACK, w, w, rng, 120, pass_at=(40, 41, 118, 119))
    text = to_sgf(GameRecord(moves, meta=GameMeta(komi=6.5)))
    text = text.replace(";W[]", ";W[tt]", 1)
    games["16_passes.sgf"] = text

    # FF3-style record with a variation off the main line and comments
    rng = np.random.default_rng([2027, 1])
    moves = play_out(BoardState(), BLACK, w, w, rng, 90)
    main_line = "".join(f";{m.color}[{chr(97 + m.point[0])}{chr(97 + m.point[1])}]"
                        for m in moves[:60])
    rest = "".join(f";{m.color}[{chr(97 + m.point[0])}{chr(97 + m.point[1])}]"
                   for m in moves[60:])
    games["17_ff3_variations.sgf"] = (
        "(;GM[1]FF[3]SZ[19]KM[5.5]PB[Alpha]PW[Beta]BR[1d]WR[2d]\n"
        "C[comment with \\] bracket]" + main_line + "\n"
        "(" + rest + ")(;B[jj];W[kk]C[side line])\n)\n")

    # escaped property text and a two-game collection in one file
    rng = np.random.default_rng([2027, 2])
    m1 = play_out(BoardState(), BLACK, w, w, rng, 70)
    m2 = play_out(BoardState(), BLACK, sw.weights((0.1,)), sw.weights((0.1,)), rng, 80)
    r1 = GameRecord(m1, meta=GameMeta(black_player="Name [with] brackets",
                                      white_player="back\\slash", komi=6.5))
    r2 = GameRecord(m2, meta=GameMeta(black_rank=parse_rank("20k"),
                                      white_rank=parse_rank("20k"), komi=6.5))
    games["18_collection.sgf"] = to_sgf(r1) + to_sgf(r2)

    # long capture-heavy game between two very aggressive players
    rng = np.random.default_rng([2027, 3])
    fighter = GroupSpec("f", (0.5, 0.5, 1.0, 1.0))
    games["19_fight.sgf"] = to_sgf(GameRecord(generate_game(fighter, fighter, yw, rng, 250),
                                              meta=GameMeta(komi=6.5)))

    for name, text in games.items():
        (OUT / name).write_text(text)
    print(f"wrote {len(games)} files to {OUT}", file=sys.stderr)


if __name__ == "__main__":
    main()
