"""Built-in example games, each with a reference play.

- ``section2``: Row and Column over three worlds. Row cannot tell worlds 1
  and 2 apart, Column cannot tell 2 and 3 apart. The play is the known
  equilibrium with worst-case payoffs (0, 0, 4/5) for Row.
- ``mingame-sec4``: a zero-sum min-2-game; against column 1, Row's best
  response is row 2.
- ``one-player-remark``: a single player facing two games, whose unique
  optimum is the even mix with value 3/2.
"""
from __future__ import annotations

from typing import Callable, Dict, Tuple, Union

import numpy as np

from .exceptions import EpigamesError
from .games import AnyGame, KripkeGame, KripkePlay, MinGame, MixedStrategy, Play, ensure_valid
from .knowledge import partition_from_relation

FixturePlay = Union[Play, KripkePlay]


def section2_game() -> KripkeGame:
    worlds = ("1", "2", "3")
    row = {
        "1": np.array([[-1.0, 1.0], [1.0, -1.0]]),
        "2": np.array([[2.0, 0.0], [0.0, 1.0]]),
        "3": np.array([[1.0, -1.0], [0.0, 2.0]]),
    }
    game = KripkeGame(
        players=("Row", "Column"),
        strategies={"Row": ("r1", "r2"), "Column": ("c1", "c2")},
        worlds=worlds,
        partitions={
            "Row": partition_from_relation(worlds, [("1", "2")]),
            "Column": partition_from_relation(worlds, [("2", "3")]),
        },
        payoffs={"Row": row, "Column": {w: -t for w, t in row.items()}},
        zero_sum=True,
    )
    return ensure_valid(game)


def section2_play() -> KripkePlay:
    half = MixedStrategy((0.5, 0.5))
    return KripkePlay(
        {
            "Row": {("1", "2"): half, ("3",): MixedStrategy.pure(2, 1)},
            "Column": {("1",): half, ("2", "3"): MixedStrategy((0.6, 0.4))},
        }
    )


def mingame_sec4_game() -> MinGame:
    row = (np.array([[-1.0, 2.0], [1.0, -3.0]]), np.array([[2.0, -4.0], [0.0, 5.0]]))
    game = MinGame(
        players=("Row", "Column"),
        strategies={"Row": ("r1", "r2"), "Column": ("c1", "c2")},
        k=2,
        payoffs={"Row": row, "Column": tuple(-t for t in row)},
        zero_sum=True,
    )
    return ensure_valid(game)


def mingame_sec4_play() -> Play:
    return Play({"Row": MixedStrategy.pure(2, 1), "Column": MixedStrategy.pure(2, 0)})


def one_player_remark_game() -> MinGame:
    game = MinGame(
        players=("Player",),
        strategies={"Player": ("s1", "s2")},
        k=2,
        payoffs={"Player": (np.array([1.0, 2.0]), np.array([3.0, 0.0]))},
    )
    return ensure_valid(game)


def one_player_remark_play() -> Play:
    return Play({"Player": MixedStrategy.uniform(2)})


FIXTURES: Dict[str, Tuple[Callable[[], AnyGame], Callable[[], FixturePlay]]] = {
    "section2": (section2_game, section2_play),
    "mingame-sec4": (mingame_sec4_game, mingame_sec4_play),
    "one-player-remark": (one_player_remark_game, one_player_remark_play),
}


def fixture(name: str) -> Tuple[AnyGame, FixturePlay]:
    try:
        game_factory, play_factory = FIXTURES[name]
    except KeyError:
        raise EpigamesError(f"unknown example {name!r}; available: {', '.join(FIXTURES)}")
    return game_factory(), play_factory()
