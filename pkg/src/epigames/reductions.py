"""Structural transformations between game kinds: unified strategy lists, Kripke -> min, min -> finite."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Tuple, Union

import numpy as np

from .exceptions import ReductionError, ShapeError
from .games import (
    Block,
    FiniteGame,
    KripkeGame,
    KripkePlay,
    MinGame,
    MixedStrategy,
    Play,
    PlayerId,
    WorldId,
    block_key,
    canonical_partition,
    check_play,
    contract,
    ensure_valid,
    max_abs_payoff,
)

logger = logging.getLogger(__name__)

CHOOSER_SUFFIX = "^hat"


@dataclass(frozen=True)
class PenaltyConstant:
    value: float

    def __post_init__(self) -> None:
        if not self.value > 0:
            raise ReductionError(f"penalty constant must be positive, got {self.value!r}")

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True, eq=False)
class RawKripkeGame:
    """A Kripke game whose strategy lists may differ from world to world.

    ``strategies[p][w]`` lists p's strategies in world w and ``payoffs[p][w]``
    is indexed by those lists.
    """

    players: Tuple[PlayerId, ...]
    worlds: Tuple[WorldId, ...]
    partitions: Mapping[PlayerId, Tuple[Block, ...]]
    strategies: Mapping[PlayerId, Mapping[WorldId, Tuple[str, ...]]]
    payoffs: Mapping[PlayerId, Mapping[WorldId, np.ndarray]]

    def __post_init__(self) -> None:
        object.__setattr__(self, "players", tuple(self.players))
        object.__setattr__(self, "worlds", tuple(self.worlds))
        order = {w: i for i, w in enumerate(self.worlds)}
        object.__setattr__(
            self, "partitions", {p: canonical_partition(b, order) for p, b in self.partitions.items()}
        )
        object.__setattr__(
            self,
            "strategies",
            {p: {w: tuple(s) for w, s in by_world.items()} for p, by_world in self.strategies.items()},
        )
        object.__setattr__(
            self,
            "payoffs",
            {p: {w: np.asarray(t, dtype=float) for w, t in by_world.items()} for p, by_world in self.payoffs.items()},
        )


PenaltySource = Union[KripkeGame, MinGame, FiniteGame, RawKripkeGame]


def penalty_constant(game: PenaltySource) -> PenaltyConstant:
    """A = 1 + the largest payoff magnitude anywhere in `game`."""
    if isinstance(game, RawKripkeGame):
        tensors = [t for by_world in game.payoffs.values() for t in by_world.values()]
        biggest = max((float(np.max(np.abs(t))) for t in tensors if t.size), default=0.0)
    else:
        biggest = max_abs_payoff(game)
    return PenaltyConstant(1.0 + biggest)


def unify_strategy_sets(raw: RawKripkeGame) -> KripkeGame:
    """Union every player's per-world lists (first appearance, world order then list order).

    In world w, a profile where player p uses a strategy missing from her world-w
    list pays p exactly -A. If only opponents use missing strategies, p gets 0;
    such profiles carry no weight under any play that avoids padded strategies.
    """
    for p in raw.players:
        for w in raw.worlds:
            if not raw.strategies.get(p, {}).get(w):
                raise ReductionError(f"strategies.{p}.{w}: empty strategy list")

    penalty = penalty_constant(raw).value
    unified: Dict[PlayerId, Tuple[str, ...]] = {}
    for p in raw.players:
        labels: List[str] = []
        for w in raw.worlds:
            for s in raw.strategies[p][w]:
                if s not in labels:
                    labels.append(s)
        unified[p] = tuple(labels)

    shape = tuple(len(unified[p]) for p in raw.players)
    payoffs: Dict[PlayerId, Dict[WorldId, np.ndarray]] = {p: {} for p in raw.players}
    for w in raw.worlds:
        # positions of each world-w strategy inside the unified list
        positions = [
            np.array([unified[q].index(s) for s in raw.strategies[q][w]], dtype=int) for q in raw.players
        ]
        for axis, p in enumerate(raw.players):
            source = raw.payoffs[p][w]
            expected = tuple(len(raw.strategies[q][w]) for q in raw.players)
            if source.shape != expected:
                raise ShapeError(f"payoffs.{p}.{w}: shape {source.shape}, expected {expected}")
            tensor = np.zeros(shape)
            tensor[np.ix_(*positions)] = source
            padded = np.ones(shape[axis], dtype=bool)
            padded[positions[axis]] = False
            index = [slice(None)] * len(shape)
            index[axis] = padded
            tensor[tuple(index)] = -penalty
            payoffs[p][w] = tensor

    logger.info("unified strategy sets: %s", {p: len(s) for p, s in unified.items()})
    return ensure_valid(KripkeGame(raw.players, unified, raw.worlds, raw.partitions, payoffs))


def raw_kripke_payoff(raw: RawKripkeGame, kplay: KripkePlay, player: PlayerId, world: WorldId) -> float:
    """Worst-case payoff in the raw game; `kplay` strategies are indexed per world list.

    ``kplay[q][block]`` must be a mixed strategy over q's strategy list in each
    world of `block`, so all worlds of a block must share that list's length.
    """
    block = next((b for b in raw.partitions[player] if world in b), None)
    if block is None:
        raise ShapeError(f"unknown world {world!r}")
    values = []
    for v in block:
        arrays = []
        for q in raw.players:
            q_block = next(b for b in raw.partitions[q] if v in b)
            probs = kplay[q][q_block].array
            if probs.shape[0] != len(raw.strategies[q][v]):
                raise ShapeError(f"strategy for {q!r} does not match its world-{v} list")
            arrays.append(probs)
        values.append(contract(raw.payoffs[player][v], arrays))
    return min(values)


# --- Kripke -> min-game -----------------------------------------------------


def class_player_name(player: PlayerId, block: Block) -> PlayerId:
    return f"{player}@{{{block_key(block)}}}"


@dataclass(frozen=True, eq=False)
class KripkeToMinMap:
    min_game: MinGame
    player_map: Mapping[Tuple[PlayerId, Block], PlayerId]
    world_order: Tuple[WorldId, ...]
    penalty: PenaltyConstant
    source: KripkeGame
    # (class-player, world index) -> class-players whose strategies enter that tensor
    dependencies: Mapping[Tuple[PlayerId, int], Tuple[PlayerId, ...]] = field(default_factory=dict)

    def class_of(self, class_player: PlayerId) -> Tuple[PlayerId, Block]:
        for key, name in self.player_map.items():
            if name == class_player:
                return key
        raise ShapeError(f"unknown class player {class_player!r}")


def kripke_to_min(game: KripkeGame) -> KripkeToMinMap:
    """Build the min-|W|-game on class-players [w]_p.

    Tensor v of class-player [w]_p equals u^v_p evaluated at the strategies of
    the class-players [v]_q (one per original player) when v lies in [w]_p, and
    the constant +A otherwise. Within the block [v]_p = [w]_p.
    """
    ensure_valid(game)
    penalty = penalty_constant(game)

    player_map: Dict[Tuple[PlayerId, Block], PlayerId] = {}
    class_players: List[PlayerId] = []
    strategies: Dict[PlayerId, Tuple[str, ...]] = {}
    for p in game.players:
        for block in game.partitions[p]:
            name = class_player_name(p, block)
            if name in strategies:
                raise ReductionError(f"class-player name collision: {name!r}")
            player_map[(p, block)] = name
            class_players.append(name)
            strategies[name] = game.strategies[p]
    position = {name: i for i, name in enumerate(class_players)}
    shape = tuple(len(strategies[c]) for c in class_players)

    payoffs: Dict[PlayerId, List[np.ndarray]] = {c: [] for c in class_players}
    dependencies: Dict[Tuple[PlayerId, int], Tuple[PlayerId, ...]] = {}
    for j, v in enumerate(game.worlds):
        # class-players active in world v, one per original player, increasing axis order
        active = [player_map[(q, game.block_of(q, v))] for q in game.players]
        embed = [1] * len(class_players)
        for q, name in zip(game.players, active):
            embed[position[name]] = len(game.strategies[q])
        for p in game.players:
            for block in game.partitions[p]:
                name = player_map[(p, block)]
                if v in block:
                    local = game.payoffs[p][v].reshape(embed)
                    payoffs[name].append(np.array(np.broadcast_to(local, shape)))
                    dependencies[(name, j)] = tuple(active)
                else:
                    payoffs[name].append(np.full(shape, penalty.value))
                    dependencies[(name, j)] = ()

    min_game = MinGame(tuple(class_players), strategies, len(game.worlds), payoffs)
    logger.info(
        "kripke_to_min: %d players x %d worlds -> %d class-players, k=%d",
        len(game.players),
        len(game.worlds),
        len(class_players),
        min_game.k,
    )
    return KripkeToMinMap(
        min_game=min_game,
        player_map=player_map,
        world_order=game.worlds,
        penalty=penalty,
        source=game,
        dependencies=dependencies,
    )


def lift_play(mapping: KripkeToMinMap, sigma: Play) -> KripkePlay:
    """Class [w]_p of player p plays sigma[[w]_p]."""
    check_play(mapping.min_game, sigma)
    by_player: Dict[PlayerId, Dict[Block, MixedStrategy]] = {}
    for (p, block), name in mapping.player_map.items():
        by_player.setdefault(p, {})[block] = sigma[name]
    return KripkePlay(by_player)


def flatten_play(mapping: KripkeToMinMap, kplay: KripkePlay) -> Play:
    """Inverse of `lift_play`."""
    strategies: Dict[PlayerId, MixedStrategy] = {}
    for (p, block), name in mapping.player_map.items():
        try:
            strategies[name] = kplay[p][block]
        except KeyError:
            raise ShapeError(f"kripke play has no strategy for {p!r} on class {block_key(block)!r}")
    play = Play(strategies)
    check_play(mapping.min_game, play)
    return play


# --- min-game -> finite game --------------------------------------------------


def chooser_name(player: PlayerId) -> PlayerId:
    return f"{player}{CHOOSER_SUFFIX}"


def chooser_labels(k: int) -> Tuple[str, ...]:
    return tuple(f"w{j}" for j in range(k))


@dataclass(frozen=True, eq=False)
class WorldChooserMap:
    finite_game: FiniteGame
    chooser_of: Mapping[PlayerId, PlayerId]
    source: MinGame

    @property
    def k(self) -> int:
        return self.source.k


def min_to_finite(game: MinGame) -> WorldChooserMap:
    """Finite game on P + P-hat: u_p(j, s) = u^j_p(s), u_{p-hat} = -u_p."""
    ensure_valid(game)
    n = len(game.players)
    chooser_of = {p: chooser_name(p) for p in game.players}
    clashes = set(chooser_of.values()) & set(game.players)
    if clashes:
        raise ReductionError(f"world-chooser name collision: {sorted(clashes)}")

    labels = chooser_labels(game.k)
    players = tuple(game.players) + tuple(chooser_of[p] for p in game.players)
    strategies: Dict[PlayerId, Tuple[str, ...]] = dict(game.strategies)
    strategies.update({chooser_of[p]: labels for p in game.players})
    shape = tuple(len(strategies[q]) for q in players)

    payoffs: Dict[PlayerId, np.ndarray] = {}
    for i, p in enumerate(game.players):
        stacked = np.stack(game.payoffs[p], axis=-1)  # S_P x k
        embed = list(game.shape) + [1] * n
        embed[n + i] = game.k
        tensor = np.array(np.broadcast_to(stacked.reshape(embed), shape))
        payoffs[p] = tensor
        payoffs[chooser_of[p]] = -tensor

    logger.info("min_to_finite: %d players, k=%d -> %d players", n, game.k, len(players))
    return WorldChooserMap(
        finite_game=FiniteGame(players, strategies, payoffs),
        chooser_of=chooser_of,
        source=game,
    )


def lowered_play(mapping: WorldChooserMap, sigma: Play) -> Play:
    """Drop the chooser coordinates."""
    check_play(mapping.finite_game, sigma)
    return Play({p: sigma[p] for p in mapping.source.players})


def choosers_best_play(mapping: WorldChooserMap, lowered: Play) -> Play:
    """Augment `lowered` with each chooser on p's pure minimizing index (lowest on ties)."""
    arrays = check_play(mapping.source, lowered)
    strategies: Dict[PlayerId, MixedStrategy] = dict(lowered.strategies)
    for p in mapping.source.players:
        values = [contract(t, arrays) for t in mapping.source.payoffs[p]]
        strategies[mapping.chooser_of[p]] = MixedStrategy.pure(mapping.k, int(np.argmin(values)))
    return Play({q: strategies[q] for q in mapping.finite_game.players})
