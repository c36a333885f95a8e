"""Game representations and exact payoff evaluation; tensor and strategy conventions are in docs/SOLVER.md."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Dict, List, Mapping, NamedTuple, Sequence, Tuple, Union

import numpy as np

from .exceptions import GameValidationError, ProbabilityError, ShapeError

logger = logging.getLogger(__name__)

PlayerId = str
WorldId = str
Block = Tuple[WorldId, ...]

# Sums within this distance of 1 are renormalized; anything further is an input error.
NORMALIZE_TOLERANCE = 1e-6
# Gap between values still reported as joint minimizers.
MINIMIZER_TOLERANCE = 1e-12


def _frozen_array(value) -> np.ndarray:
    arr = np.array(value, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MixedStrategy:
    """A probability distribution over one player's strategy list."""

    probabilities: Tuple[float, ...]

    def __post_init__(self) -> None:
        probs = tuple(float(p) for p in self.probabilities)
        if not probs:
            raise ProbabilityError("mixed strategy needs at least one entry")
        if not all(math.isfinite(p) for p in probs):
            raise ProbabilityError(f"non-finite probability in {probs}")
        if any(p < 0 for p in probs):
            raise ProbabilityError(f"negative probability in {probs}")
        total = math.fsum(probs)
        if abs(total - 1.0) > NORMALIZE_TOLERANCE:
            raise ProbabilityError(f"probabilities sum to {total!r}, expected 1")
        if total != 1.0:
            probs = tuple(p / total for p in probs)
        object.__setattr__(self, "probabilities", probs)

    @classmethod
    def pure(cls, size: int, index: int) -> "MixedStrategy":
        if not 0 <= index < size:
            raise ShapeError(f"pure strategy index {index} out of range for {size} strategies")
        return cls(tuple(1.0 if i == index else 0.0 for i in range(size)))

    @classmethod
    def uniform(cls, size: int) -> "MixedStrategy":
        return cls(tuple(1.0 / size for _ in range(size)))

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "MixedStrategy":
        """Build from solver output, clipping round-off negatives."""
        arr = np.clip(np.asarray(values, dtype=float), 0.0, None)
        return cls(tuple(arr / arr.sum()))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.probabilities, dtype=float)

    def __len__(self) -> int:
        return len(self.probabilities)


@dataclass(frozen=True)
class Play:
    """One mixed strategy per player; the joint law is their independent product."""

    strategies: Mapping[PlayerId, MixedStrategy]

    def __post_init__(self) -> None:
        object.__setattr__(self, "strategies", dict(self.strategies))

    def __getitem__(self, player: PlayerId) -> MixedStrategy:
        return self.strategies[player]

    def replace(self, player: PlayerId, strategy: MixedStrategy) -> "Play":
        """The play ``sigma - sigma_p + sigma'_p``."""
        updated = dict(self.strategies)
        updated[player] = strategy
        return Play(updated)

    @classmethod
    def from_arrays(cls, players: Sequence[PlayerId], arrays: Sequence[np.ndarray]) -> "Play":
        return cls({p: MixedStrategy.from_array(a) for p, a in zip(players, arrays)})


@dataclass(frozen=True)
class KripkePlay:
    """Behavioral strategies: player -> knowledge class -> mixed strategy."""

    strategies: Mapping[PlayerId, Mapping[Block, MixedStrategy]]

    def __post_init__(self) -> None:
        object.__setattr__(
            self,
            "strategies",
            {p: {tuple(b): s for b, s in by_block.items()} for p, by_block in self.strategies.items()},
        )

    def __getitem__(self, player: PlayerId) -> Mapping[Block, MixedStrategy]:
        return self.strategies[player]


def _tuple_strategies(strategies: Mapping[PlayerId, Sequence[str]]) -> Dict[PlayerId, Tuple[str, ...]]:
    return {p: tuple(str(s) for s in labels) for p, labels in strategies.items()}


@dataclass(frozen=True, eq=False)
class FiniteGame:
    players: Tuple[PlayerId, ...]
    strategies: Mapping[PlayerId, Tuple[str, ...]]
    payoffs: Mapping[PlayerId, np.ndarray]
    zero_sum: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "players", tuple(self.players))
        object.__setattr__(self, "strategies", _tuple_strategies(self.strategies))
        object.__setattr__(self, "payoffs", {p: _frozen_array(t) for p, t in self.payoffs.items()})

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(len(self.strategies.get(p, ())) for p in self.players)

    def as_min_game(self) -> "MinGame":
        """The min-1-game with the same skeleton."""
        return MinGame(
            self.players,
            self.strategies,
            1,
            {p: (t,) for p, t in self.payoffs.items()},
            zero_sum=self.zero_sum,
        )


@dataclass(frozen=True, eq=False)
class MinGame:
    """k parallel games on shared strategy sets; ``payoffs[p][j]`` is ``u^{j+1}_p``."""

    players: Tuple[PlayerId, ...]
    strategies: Mapping[PlayerId, Tuple[str, ...]]
    k: int
    payoffs: Mapping[PlayerId, Tuple[np.ndarray, ...]]
    zero_sum: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "players", tuple(self.players))
        object.__setattr__(self, "strategies", _tuple_strategies(self.strategies))
        object.__setattr__(
            self,
            "payoffs",
            {p: tuple(_frozen_array(t) for t in ts) for p, ts in self.payoffs.items()},
        )

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(len(self.strategies.get(p, ())) for p in self.players)

    def component(self, j: int) -> FiniteGame:
        """The j-th parallel game (0-based) as a finite game."""
        return FiniteGame(self.players, self.strategies, {p: ts[j] for p, ts in self.payoffs.items()})


@dataclass(frozen=True, eq=False)
class KripkeGame:
    players: Tuple[PlayerId, ...]
    strategies: Mapping[PlayerId, Tuple[str, ...]]
    worlds: Tuple[WorldId, ...]
    partitions: Mapping[PlayerId, Tuple[Block, ...]]
    payoffs: Mapping[PlayerId, Mapping[WorldId, np.ndarray]]
    zero_sum: bool = False
    _block_index: Dict[Tuple[PlayerId, WorldId], Block] = field(
        default_factory=dict, init=False, repr=False
    )

    def __post_init__(self) -> None:
        object.__setattr__(self, "players", tuple(self.players))
        object.__setattr__(self, "strategies", _tuple_strategies(self.strategies))
        object.__setattr__(self, "worlds", tuple(str(w) for w in self.worlds))
        order = {w: i for i, w in enumerate(self.worlds)}
        partitions = {
            p: canonical_partition(blocks, order) for p, blocks in self.partitions.items()
        }
        object.__setattr__(self, "partitions", partitions)
        object.__setattr__(
            self,
            "payoffs",
            {p: {str(w): _frozen_array(t) for w, t in by_world.items()} for p, by_world in self.payoffs.items()},
        )
        index: Dict[Tuple[PlayerId, WorldId], Block] = {}
        for p, blocks in partitions.items():
            for block in blocks:
                for w in block:
                    index.setdefault((p, w), block)
        object.__setattr__(self, "_block_index", index)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(len(self.strategies.get(p, ())) for p in self.players)

    def block_of(self, player: PlayerId, world: WorldId) -> Block:
        """The knowledge class ``[world]_player``."""
        try:
            return self._block_index[(player, world)]
        except KeyError:
            if player not in self.players:
                raise ShapeError(f"unknown player {player!r}")
            raise ShapeError(f"unknown world {world!r}")


def canonical_partition(blocks: Sequence[Sequence[WorldId]], order: Mapping[WorldId, int]) -> Tuple[Block, ...]:
    """Sort worlds inside each block and blocks by their first world, in declared world order.

    Unknown worlds sort last so that `validate` can still report them.
    """
    def key(w: WorldId) -> Tuple[int, str]:
        return (order.get(w, len(order)), w)

    sorted_blocks = [tuple(sorted((str(w) for w in b), key=key)) for b in blocks]
    return tuple(sorted(sorted_blocks, key=lambda b: key(b[0]) if b else (len(order) + 1, "")))


def block_key(block: Block) -> str:
    """Document key of a canonical block; its worlds stay in declared world order."""
    return ",".join(block)


AnyGame = Union[FiniteGame, MinGame, KripkeGame]


# --- validation -------------------------------------------------------------


def _validate_skeleton(game: AnyGame) -> List[str]:
    out: List[str] = []
    if not game.players:
        out.append("players: at least one player required")
    seen = set()
    for p in game.players:
        if not isinstance(p, str) or not p:
            out.append(f"players: player id must be a non-empty string, got {p!r}")
        if p in seen:
            out.append(f"players: duplicate player id {p!r}")
        seen.add(p)
    for p in game.players:
        labels = game.strategies.get(p)
        if labels is None:
            out.append(f"strategies.{p}: missing strategy list")
        elif len(labels) == 0:
            out.append(f"strategies.{p}: at least one strategy required")
        elif len(set(labels)) != len(labels):
            out.append(f"strategies.{p}: duplicate strategy labels")
    extra = set(game.strategies) - set(game.players)
    if extra:
        out.append(f"strategies: unknown players {sorted(extra)}")
    return out


def _validate_tensor(tensor: np.ndarray, shape: Tuple[int, ...], where: str) -> List[str]:
    if tensor.shape != shape:
        return [f"{where}: tensor shape {tensor.shape} does not match strategy counts {shape}"]
    if not np.all(np.isfinite(tensor)):
        return [f"{where}: payoff entries must be finite reals"]
    return []


def _validate_finite(game: FiniteGame) -> List[str]:
    out = _validate_skeleton(game)
    shape = game.shape
    for p in game.players:
        if p not in game.payoffs:
            out.append(f"payoffs.{p}: missing payoff tensor")
            continue
        out.extend(_validate_tensor(game.payoffs[p], shape, f"payoffs.{p}"))
    extra = set(game.payoffs) - set(game.players)
    if extra:
        out.append(f"payoffs: unknown players {sorted(extra)}")
    return out


def _validate_min(game: MinGame) -> List[str]:
    out = _validate_skeleton(game)
    if not isinstance(game.k, int) or game.k < 1:
        out.append(f"k: must be a positive integer, got {game.k!r}")
    shape = game.shape
    for p in game.players:
        tensors = game.payoffs.get(p)
        if tensors is None:
            out.append(f"payoffs.{p}: missing payoff tensors")
            continue
        if len(tensors) != game.k:
            out.append(f"payoffs.{p}: expected {game.k} tensors, got {len(tensors)}")
        for j, t in enumerate(tensors):
            out.extend(_validate_tensor(t, shape, f"payoffs.{p}[{j}]"))
    extra = set(game.payoffs) - set(game.players)
    if extra:
        out.append(f"payoffs: unknown players {sorted(extra)}")
    return out


def _validate_kripke(game: KripkeGame) -> List[str]:
    out = _validate_skeleton(game)
    if not game.worlds:
        out.append("worlds: at least one world required")
    world_set = set(game.worlds)
    if len(world_set) != len(game.worlds):
        out.append("worlds: duplicate world ids")
    if any(not w for w in game.worlds):
        out.append("worlds: world id must be a non-empty string")
    for p in game.players:
        blocks = game.partitions.get(p)
        if blocks is None:
            out.append(f"partitions.{p}: missing partition")
            continue
        covered: List[WorldId] = []
        for block in blocks:
            if not block:
                out.append(f"partitions.{p}: empty block")
            covered.extend(block)
        unknown = sorted(set(covered) - world_set)
        if unknown:
            out.append(f"partitions.{p}: unknown worlds {unknown}")
        if len(covered) != len(set(covered)):
            dup = sorted({w for w in covered if covered.count(w) > 1})
            out.append(f"partitions.{p}: blocks overlap on worlds {dup}")
        missing = [w for w in game.worlds if w not in set(covered)]
        if missing:
            out.append(f"partitions.{p}: blocks do not cover worlds {missing}")
    extra = set(game.partitions) - set(game.players)
    if extra:
        out.append(f"partitions: unknown players {sorted(extra)}")
    shape = game.shape
    for p in game.players:
        by_world = game.payoffs.get(p)
        if by_world is None:
            out.append(f"payoffs.{p}: missing payoff tensors")
            continue
        for w in game.worlds:
            if w not in by_world:
                out.append(f"payoffs.{p}.{w}: missing payoff tensor")
            else:
                out.extend(_validate_tensor(by_world[w], shape, f"payoffs.{p}.{w}"))
        extra_w = set(by_world) - world_set
        if extra_w:
            out.append(f"payoffs.{p}: tensors for unknown worlds {sorted(extra_w)}")
    return out


def validate(game: AnyGame) -> List[str]:
    """Return one human-readable entry per violated invariant (empty when valid)."""
    if isinstance(game, KripkeGame):
        out = _validate_kripke(game)
    elif isinstance(game, MinGame):
        out = _validate_min(game)
    elif isinstance(game, FiniteGame):
        out = _validate_finite(game)
    else:
        raise TypeError(f"not a game: {type(game).__name__}")
    if game.zero_sum and not out:
        out.extend(_validate_zero_sum(game))
    return out


def _validate_zero_sum(game: AnyGame) -> List[str]:
    if len(game.players) != 2:
        return ["zero_sum: requires exactly two players"]
    first, second = game.players
    if isinstance(game, KripkeGame):
        pairs = [(game.payoffs[first][w], game.payoffs[second][w]) for w in game.worlds]
    elif isinstance(game, MinGame):
        pairs = list(zip(game.payoffs[first], game.payoffs[second]))
    else:
        pairs = [(game.payoffs[first], game.payoffs[second])]
    if any(not np.array_equal(a, -b) for a, b in pairs):
        return [f"zero_sum: payoffs.{second} must be the negation of payoffs.{first}"]
    return []


def ensure_valid(game: AnyGame) -> AnyGame:
    violations = validate(game)
    if violations:
        raise GameValidationError(violations)
    return game


# --- evaluation -------------------------------------------------------------


def check_play(game: FiniteGame | MinGame, play: Play) -> List[np.ndarray]:
    """Return the play as arrays in player order, or raise ShapeError."""
    missing = [p for p in game.players if p not in play.strategies]
    if missing:
        raise ShapeError(f"play has no strategy for players {missing}")
    extra = set(play.strategies) - set(game.players)
    if extra:
        raise ShapeError(f"play names unknown players {sorted(extra)}")
    arrays = []
    for p in game.players:
        probs = play.strategies[p].array
        if probs.shape[0] != len(game.strategies[p]):
            raise ShapeError(
                f"strategy for {p!r} has {probs.shape[0]} entries, game has {len(game.strategies[p])}"
            )
        arrays.append(probs)
    return arrays


def check_kripke_play(game: KripkeGame, kplay: KripkePlay) -> None:
    for p in game.players:
        by_block = kplay.strategies.get(p)
        if by_block is None:
            raise ShapeError(f"kripke play has no strategies for player {p!r}")
        if set(by_block) != set(game.partitions[p]):
            raise ShapeError(f"kripke play classes for {p!r} do not match the partition")
        for block, strategy in by_block.items():
            if len(strategy) != len(game.strategies[p]):
                raise ShapeError(f"strategy for {p!r} on class {block_key(block)!r} has wrong dimension")
    extra = set(kplay.strategies) - set(game.players)
    if extra:
        raise ShapeError(f"kripke play names unknown players {sorted(extra)}")


def contract(tensor: np.ndarray, vectors: Sequence[np.ndarray]) -> float:
    """Exact multilinear expectation: contract every axis against its player's distribution."""
    return float(reduce(lambda t, v: t @ v, reversed(vectors), tensor))


def contract_except(tensor: np.ndarray, vectors: Sequence[np.ndarray], axis: int) -> np.ndarray:
    """Expected payoff of each pure strategy on `axis`, all other axes contracted."""
    t = np.moveaxis(tensor, axis, 0)
    others = [v for i, v in enumerate(vectors) if i != axis]
    return np.asarray(reduce(lambda acc, v: acc @ v, reversed(others), t), dtype=float)


def _player_axis(game: FiniteGame | MinGame | KripkeGame, player: PlayerId) -> int:
    try:
        return game.players.index(player)
    except ValueError:
        raise ShapeError(f"unknown player {player!r}")


def expected_payoff(game: FiniteGame, play: Play, player: PlayerId) -> float:
    """Sum over pure profiles s of u_p(s) * prod_q sigma_q(s_q)."""
    _player_axis(game, player)
    return contract(game.payoffs[player], check_play(game, play))


class WorstCase(NamedTuple):
    """A pessimistic payoff with the component indices (or worlds) attaining it."""

    value: float
    minimizers: Tuple


def _worst(values: Sequence[float], labels: Sequence) -> WorstCase:
    low = min(values)
    return WorstCase(low, tuple(l for v, l in zip(values, labels) if v - low <= MINIMIZER_TOLERANCE))


def min_game_worst_case(game: MinGame, play: Play, player: PlayerId) -> WorstCase:
    _player_axis(game, player)
    arrays = check_play(game, play)
    values = [contract(t, arrays) for t in game.payoffs[player]]
    return _worst(values, range(len(values)))


def min_game_payoff(game: MinGame, play: Play, player: PlayerId) -> float:
    """min over j of E[u^j_p(X)]."""
    return min_game_worst_case(game, play, player).value


def specialize(game: KripkeGame, kplay: KripkePlay, world: WorldId) -> Play:
    """The play X(w): each player's strategy on her class containing `world`."""
    if world not in game.worlds:
        raise ShapeError(f"unknown world {world!r}")
    check_kripke_play(game, kplay)
    return Play({p: kplay.strategies[p][game.block_of(p, world)] for p in game.players})


def kripke_worst_case(game: KripkeGame, kplay: KripkePlay, player: PlayerId, world: WorldId) -> WorstCase:
    _player_axis(game, player)
    block = game.block_of(player, world)
    values = []
    for v in block:
        arrays = [s.array for s in specialize(game, kplay, v).strategies.values()]
        values.append(contract(game.payoffs[player][v], arrays))
    return _worst(values, block)


def kripke_payoff(game: KripkeGame, kplay: KripkePlay, player: PlayerId, world: WorldId) -> float:
    """min over v in [world]_p of E[u^v_p(X(v))]."""
    return kripke_worst_case(game, kplay, player, world).value


def max_abs_payoff(game: AnyGame) -> float:
    if isinstance(game, KripkeGame):
        tensors = [t for by_world in game.payoffs.values() for t in by_world.values()]
    elif isinstance(game, MinGame):
        tensors = [t for ts in game.payoffs.values() for t in ts]
    else:
        tensors = list(game.payoffs.values())
    return max((float(np.max(np.abs(t))) for t in tensors if t.size), default=0.0)


def sample_payoff(
    game: FiniteGame, play: Play, player: PlayerId, samples: int, rng: np.random.Generator
) -> Tuple[float, float]:
    """Monte-Carlo estimate of E[u_p(X)]: (mean, standard error) over `samples` play instances.

    Only a cross-check for `expected_payoff`; nothing else evaluates payoffs this way.
    """
    axis = _player_axis(game, player)
    if samples < 2:
        raise ValueError("need at least two samples")
    arrays = check_play(game, play)
    draws = tuple(rng.choice(len(x), size=samples, p=x) for x in arrays)
    values = game.payoffs[game.players[axis]][draws]
    mean, stderr = float(values.mean()), float(values.std(ddof=1) / math.sqrt(samples))
    logger.debug("sampled payoff of %s: %.6g +/- %.2g over %d draws", player, mean, stderr, samples)
    return mean, stderr
