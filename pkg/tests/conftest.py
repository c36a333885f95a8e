from __future__ import annotations

from typing import Dict, List, Sequence

import numpy as np
import pytest

from epigames.fixtures import (
    mingame_sec4_game,
    mingame_sec4_play,
    one_player_remark_game,
    section2_game,
    section2_play,
)
from epigames.games import KripkeGame, KripkePlay, MinGame, MixedStrategy, Play


def random_strategy(rng: np.random.Generator, size: int) -> MixedStrategy:
    return MixedStrategy.from_array(rng.dirichlet(np.ones(size)))


def random_play(rng: np.random.Generator, game) -> Play:
    return Play({p: random_strategy(rng, len(game.strategies[p])) for p in game.players})


def random_min_game(
    rng: np.random.Generator,
    n_players: int = 2,
    max_strategies: int = 3,
    k: int = 2,
    low: float = -5.0,
    high: float = 5.0,
    sizes: Sequence[int] | None = None,
) -> MinGame:
    players = [f"P{i}" for i in range(n_players)]
    if sizes is None:
        sizes = [int(rng.integers(1, max_strategies + 1)) for _ in players]
    strategies = {p: [f"s{j}" for j in range(m)] for p, m in zip(players, sizes)}
    payoffs = {p: [rng.uniform(low, high, size=tuple(sizes)) for _ in range(k)] for p in players}
    return MinGame(players, strategies, k, payoffs)


def random_partition(rng: np.random.Generator, worlds: Sequence[str]) -> List[List[str]]:
    labels = rng.integers(0, len(worlds), size=len(worlds))
    blocks: Dict[int, List[str]] = {}
    for w, label in zip(worlds, labels):
        blocks.setdefault(int(label), []).append(w)
    return list(blocks.values())


def random_kripke_game(
    rng: np.random.Generator,
    max_players: int = 3,
    max_worlds: int = 3,
    max_strategies: int = 3,
) -> KripkeGame:
    players = [f"P{i}" for i in range(int(rng.integers(1, max_players + 1)))]
    worlds = [str(i + 1) for i in range(int(rng.integers(1, max_worlds + 1)))]
    sizes = tuple(int(rng.integers(1, max_strategies + 1)) for _ in players)
    return KripkeGame(
        players=players,
        strategies={p: [f"s{j}" for j in range(m)] for p, m in zip(players, sizes)},
        worlds=worlds,
        partitions={p: random_partition(rng, worlds) for p in players},
        payoffs={p: {w: rng.uniform(-5.0, 5.0, size=sizes) for w in worlds} for p in players},
    )


def random_kripke_play(rng: np.random.Generator, game: KripkeGame) -> KripkePlay:
    return KripkePlay(
        {
            p: {b: random_strategy(rng, len(game.strategies[p])) for b in game.partitions[p]}
            for p in game.players
        }
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def section2() -> KripkeGame:
    return section2_game()


@pytest.fixture
def section2_eq() -> KripkePlay:
    return section2_play()


@pytest.fixture
def sec4() -> MinGame:
    return mingame_sec4_game()


@pytest.fixture
def sec4_play() -> Play:
    return mingame_sec4_play()


@pytest.fixture
def remark() -> MinGame:
    return one_player_remark_game()
