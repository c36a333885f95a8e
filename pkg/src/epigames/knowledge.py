"""Kripke-style knowledge queries: a player knows E at w iff her whole class of w lies in E."""
from __future__ import annotations

from typing import AbstractSet, Dict, FrozenSet, Iterable, List, Sequence, Tuple

from .exceptions import ShapeError
from .games import Block, KripkeGame, PlayerId, WorldId, canonical_partition


def _find(parent: Dict[WorldId, WorldId], w: WorldId) -> WorldId:
    root = w
    while parent[root] != root:
        root = parent[root]
    while parent[w] != root:
        parent[w], w = root, parent[w]
    return root


def _blocks_from_unions(worlds: Sequence[WorldId], pairs: Iterable[Tuple[WorldId, WorldId]]) -> Tuple[Block, ...]:
    parent = {w: w for w in worlds}
    for a, b in pairs:
        for w in (a, b):
            if w not in parent:
                raise ShapeError(f"unknown world {w!r}")
        ra, rb = _find(parent, a), _find(parent, b)
        if ra != rb:
            parent[rb] = ra
    groups: Dict[WorldId, List[WorldId]] = {}
    for w in worlds:
        groups.setdefault(_find(parent, w), []).append(w)
    order = {w: i for i, w in enumerate(worlds)}
    return canonical_partition(list(groups.values()), order)


def partition_from_relation(
    worlds: Sequence[WorldId], pairs: Iterable[Tuple[WorldId, WorldId]]
) -> Tuple[Block, ...]:
    """Blocks of the smallest equivalence relation on `worlds` containing `pairs`."""
    return _blocks_from_unions(list(worlds), pairs)


def _event(game: KripkeGame, event: Iterable[WorldId]) -> FrozenSet[WorldId]:
    worlds = frozenset(event)
    unknown = worlds - set(game.worlds)
    if unknown:
        raise ShapeError(f"unknown worlds {sorted(unknown)}")
    return worlds


def knows(game: KripkeGame, player: PlayerId, event: Iterable[WorldId], world: WorldId) -> bool:
    """True iff [world]_player is contained in `event`."""
    return set(game.block_of(player, world)) <= _event(game, event)


def knowledge_set(game: KripkeGame, player: PlayerId, event: Iterable[WorldId]) -> FrozenSet[WorldId]:
    """The worlds at which `player` knows `event`."""
    target = _event(game, event)
    if player not in game.players:
        raise ShapeError(f"unknown player {player!r}")
    return frozenset(w for block in game.partitions[player] if set(block) <= target for w in block)


def common_knowledge_partition(game: KripkeGame) -> Tuple[Block, ...]:
    """The finest partition coarser than every player's (the meet)."""
    pairs = [
        (block[0], w)
        for p in game.players
        for block in game.partitions[p]
        for w in block[1:]
    ]
    return _blocks_from_unions(game.worlds, pairs)


def is_common_knowledge(game: KripkeGame, event: AbstractSet[WorldId], world: WorldId) -> bool:
    target = _event(game, event)
    for block in common_knowledge_partition(game):
        if world in block:
            return set(block) <= target
    raise ShapeError(f"unknown world {world!r}")
