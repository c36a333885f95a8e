"""Canonical JSON documents for games, plays, solve results and reductions.

Tensors are nested arrays in declared player order (outermost axis = first
player). Output keys follow a fixed order, players and worlds keep their
declared order, and floats print as the shortest decimal that round-trips, so
``parse(serialize(x))`` reproduces every payoff bit for bit. See docs/FORMAT.md.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .config import SOLVER_METHODS
from .equilibrium import GapReport, SolveResult
from .exceptions import DocumentError, EpigamesError, GameValidationError
from .games import (
    AnyGame,
    Block,
    FiniteGame,
    KripkeGame,
    KripkePlay,
    MinGame,
    MixedStrategy,
    Play,
    block_key,
    validate,
)
from .reductions import KripkeToMinMap, WorldChooserMap

FORMAT_VERSION = 1
GAME_KINDS = ("finite", "min", "kripke")


@dataclass(frozen=True, eq=False)
class GameDocument:
    kind: str
    body: AnyGame
    format_version: int = FORMAT_VERSION


def kind_of(game: AnyGame) -> str:
    if isinstance(game, KripkeGame):
        return "kripke"
    if isinstance(game, MinGame):
        return "min"
    return "finite"


# --- low-level readers --------------------------------------------------------


def _reject_constant(name: str) -> Any:
    raise DocumentError("$", f"non-finite number {name} is not allowed")


def _loads(text: str) -> Any:
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as e:
        raise DocumentError("$", f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from e


def _field(obj: Mapping[str, Any], key: str, path: str) -> Any:
    if key not in obj:
        raise DocumentError(path, f"missing field {key!r}")
    return obj[key]


def _object(value: Any, path: str) -> Mapping[str, Any]:
    if not isinstance(value, dict):
        raise DocumentError(path, "expected an object")
    return value


def _string_list(value: Any, path: str) -> List[str]:
    if not isinstance(value, list):
        raise DocumentError(path, "expected an array of strings")
    for i, item in enumerate(value):
        if not isinstance(item, str) or not item:
            raise DocumentError(f"{path}[{i}]", "expected a non-empty string")
    return list(value)


def _number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DocumentError(path, "expected a number")
    try:
        out = float(value)
    except OverflowError:
        raise DocumentError(path, "number must be finite") from None
    if not math.isfinite(out):
        raise DocumentError(path, "number must be finite")
    return out


def _tensor(value: Any, shape: Sequence[int], path: str) -> np.ndarray:
    def walk(node: Any, depth: int, where: str) -> Any:
        if depth == len(shape):
            return _number(node, where)
        if not isinstance(node, list):
            raise DocumentError(where, f"expected an array at tensor depth {depth}")
        if len(node) != shape[depth]:
            raise DocumentError(where, f"axis {depth} has length {len(node)}, expected {shape[depth]}")
        return [walk(child, depth + 1, f"{where}[{i}]") for i, child in enumerate(node)]

    return np.asarray(walk(value, 0, path), dtype=float).reshape(tuple(shape))


def _count(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise DocumentError(path, "expected a non-negative integer")
    return value


def _check_version(obj: Mapping[str, Any]) -> int:
    version = obj.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise DocumentError("$.format_version", f"unsupported format version {version!r}")
    return version


def _forward(violations: List[str]) -> None:
    if violations:
        raise GameValidationError(violations)


# --- games --------------------------------------------------------------------


def _skeleton(obj: Mapping[str, Any]) -> Tuple[List[str], Dict[str, List[str]], Tuple[int, ...]]:
    players = _string_list(_field(obj, "players", "$"), "$.players")
    if not players:
        raise DocumentError("$.players", "at least one player required")
    if len(set(players)) != len(players):
        raise DocumentError("$.players", "duplicate player ids")
    raw = _object(_field(obj, "strategies", "$"), "$.strategies")
    strategies: Dict[str, List[str]] = {}
    for p in players:
        labels = _string_list(_field(raw, p, "$.strategies"), f"$.strategies.{p}")
        if not labels:
            raise DocumentError(f"$.strategies.{p}", "at least one strategy required")
        strategies[p] = labels
    extra = sorted(set(raw) - set(players))
    if extra:
        raise DocumentError("$.strategies", f"unknown players {extra}")
    return players, strategies, tuple(len(strategies[p]) for p in players)


def _payoff_owners(obj: Mapping[str, Any], players: Sequence[str], zero_sum: bool) -> Tuple[Mapping[str, Any], List[str]]:
    payoffs = _object(_field(obj, "payoffs", "$"), "$.payoffs")
    owners = list(players)
    if zero_sum:
        if len(players) != 2:
            raise DocumentError("$.zero_sum", "zero_sum requires exactly two players")
        owners = [players[0]]
    extra = sorted(set(payoffs) - set(owners))
    if extra:
        hint = " (zero_sum documents give only the first player's payoffs)" if zero_sum else ""
        raise DocumentError("$.payoffs", f"unexpected players {extra}{hint}")
    return payoffs, owners


def _zero_sum_flag(obj: Mapping[str, Any]) -> bool:
    flag = obj.get("zero_sum", False)
    if not isinstance(flag, bool):
        raise DocumentError("$.zero_sum", "expected a boolean")
    return flag


def _parse_finite(obj: Mapping[str, Any]) -> FiniteGame:
    players, strategies, shape = _skeleton(obj)
    zero_sum = _zero_sum_flag(obj)
    raw, owners = _payoff_owners(obj, players, zero_sum)
    payoffs = {p: _tensor(_field(raw, p, "$.payoffs"), shape, f"$.payoffs.{p}") for p in owners}
    if zero_sum:
        payoffs[players[1]] = -payoffs[players[0]]
    return FiniteGame(players, strategies, payoffs, zero_sum=zero_sum)


def _parse_min(obj: Mapping[str, Any]) -> MinGame:
    players, strategies, shape = _skeleton(obj)
    k = _field(obj, "k", "$")
    if isinstance(k, bool) or not isinstance(k, int) or k < 1:
        raise DocumentError("$.k", "expected a positive integer")
    zero_sum = _zero_sum_flag(obj)
    raw, owners = _payoff_owners(obj, players, zero_sum)
    payoffs: Dict[str, Tuple[np.ndarray, ...]] = {}
    for p in owners:
        tensors = _field(raw, p, "$.payoffs")
        if not isinstance(tensors, list):
            raise DocumentError(f"$.payoffs.{p}", "expected an array of k tensors")
        if len(tensors) != k:
            raise DocumentError(f"$.payoffs.{p}", f"arity mismatch: expected {k} tensors, got {len(tensors)}")
        payoffs[p] = tuple(_tensor(t, shape, f"$.payoffs.{p}[{j}]") for j, t in enumerate(tensors))
    if zero_sum:
        payoffs[players[1]] = tuple(-t for t in payoffs[players[0]])
    return MinGame(players, strategies, k, payoffs, zero_sum=zero_sum)


def _parse_partition(value: Any, worlds: Sequence[str], path: str) -> List[List[str]]:
    if not isinstance(value, list):
        raise DocumentError(path, "expected an array of blocks")
    seen: Dict[str, int] = {}
    blocks = []
    for i, block in enumerate(value):
        where = f"{path}[{i}]"
        members = _string_list(block, where)
        if not members:
            raise DocumentError(where, "empty block")
        for w in members:
            if w not in worlds:
                raise DocumentError(where, f"unknown world {w!r}")
            if w in seen:
                raise DocumentError(where, f"overlapping blocks: world {w!r} also in block {seen[w]}")
            seen[w] = i
        blocks.append(members)
    missing = [w for w in worlds if w not in seen]
    if missing:
        raise DocumentError(path, f"blocks do not cover worlds {missing}")
    return blocks


def _parse_kripke(obj: Mapping[str, Any]) -> KripkeGame:
    players, strategies, shape = _skeleton(obj)
    worlds = _string_list(_field(obj, "worlds", "$"), "$.worlds")
    if not worlds:
        raise DocumentError("$.worlds", "at least one world required")
    if len(set(worlds)) != len(worlds):
        raise DocumentError("$.worlds", "duplicate world ids")
    for i, w in enumerate(worlds):
        if "," in w:
            raise DocumentError(f"$.worlds[{i}]", "world ids may not contain ','")
    raw_partitions = _object(_field(obj, "partitions", "$"), "$.partitions")
    partitions = {
        p: _parse_partition(_field(raw_partitions, p, "$.partitions"), worlds, f"$.partitions.{p}")
        for p in players
    }
    extra = sorted(set(raw_partitions) - set(players))
    if extra:
        raise DocumentError("$.partitions", f"unknown players {extra}")
    zero_sum = _zero_sum_flag(obj)
    raw, owners = _payoff_owners(obj, players, zero_sum)
    payoffs: Dict[str, Dict[str, np.ndarray]] = {}
    for p in owners:
        by_world = _object(_field(raw, p, "$.payoffs"), f"$.payoffs.{p}")
        unknown = sorted(set(by_world) - set(worlds))
        if unknown:
            raise DocumentError(f"$.payoffs.{p}", f"unknown worlds {unknown}")
        payoffs[p] = {
            w: _tensor(_field(by_world, w, f"$.payoffs.{p}"), shape, f"$.payoffs.{p}.{w}") for w in worlds
        }
    if zero_sum:
        payoffs[players[1]] = {w: -t for w, t in payoffs[players[0]].items()}
    return KripkeGame(players, strategies, worlds, partitions, payoffs, zero_sum=zero_sum)


_GAME_PARSERS = {"finite": _parse_finite, "min": _parse_min, "kripke": _parse_kripke}


def parse_game(text: str) -> GameDocument:
    """Parse and validate a game document."""
    obj = _object(_loads(text), "$")
    version = _check_version(obj)
    kind = _field(obj, "kind", "$")
    parser = _GAME_PARSERS.get(kind) if isinstance(kind, str) else None
    if parser is None:
        raise DocumentError("$.kind", f"unknown kind {kind!r}; expected one of {list(GAME_KINDS)}")
    game = parser(obj)
    _forward(validate(game))
    return GameDocument(kind, game, version)


def _tensor_out(tensor: np.ndarray) -> Any:
    return tensor.tolist()


def game_to_obj(game: AnyGame) -> Dict[str, Any]:
    kind = kind_of(game)
    obj: Dict[str, Any] = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "players": list(game.players),
        "strategies": {p: list(game.strategies[p]) for p in game.players},
    }
    if isinstance(game, MinGame):
        obj["k"] = game.k
    if isinstance(game, KripkeGame):
        obj["worlds"] = list(game.worlds)
        obj["partitions"] = {p: [list(b) for b in game.partitions[p]] for p in game.players}
    obj["zero_sum"] = bool(game.zero_sum)
    owners = game.players[:1] if game.zero_sum else game.players
    if isinstance(game, KripkeGame):
        obj["payoffs"] = {p: {w: _tensor_out(game.payoffs[p][w]) for w in game.worlds} for p in owners}
    elif isinstance(game, MinGame):
        obj["payoffs"] = {p: [_tensor_out(t) for t in game.payoffs[p]] for p in owners}
    else:
        obj["payoffs"] = {p: _tensor_out(game.payoffs[p]) for p in owners}
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def serialize_game(doc: Union[GameDocument, AnyGame]) -> str:
    game = doc.body if isinstance(doc, GameDocument) else doc
    return dumps(game_to_obj(game))


# --- plays --------------------------------------------------------------------


def _probabilities(value: Any, path: str) -> MixedStrategy:
    if not isinstance(value, list) or not value:
        raise DocumentError(path, "expected a non-empty array of probabilities")
    probs = [_number(v, f"{path}[{i}]") for i, v in enumerate(value)]
    try:
        return MixedStrategy(tuple(probs))
    except EpigamesError as e:
        raise DocumentError(path, str(e)) from e


def play_to_obj(play: Union[Play, KripkePlay]) -> Dict[str, Any]:
    if isinstance(play, KripkePlay):
        return {
            "format_version": FORMAT_VERSION,
            "kind": "kripke_play",
            "strategies": {
                p: {block_key(b): list(s.probabilities) for b, s in by_block.items()}
                for p, by_block in play.strategies.items()
            },
        }
    return {
        "format_version": FORMAT_VERSION,
        "kind": "play",
        "strategies": {p: list(s.probabilities) for p, s in play.strategies.items()},
    }


def play_from_obj(obj: Any, path: str = "$") -> Union[Play, KripkePlay]:
    obj = _object(obj, path)
    kind = _field(obj, "kind", path)
    raw = _object(_field(obj, "strategies", path), f"{path}.strategies")
    if kind == "play":
        return Play({p: _probabilities(v, f"{path}.strategies.{p}") for p, v in raw.items()})
    if kind == "kripke_play":
        by_player: Dict[str, Dict[Block, MixedStrategy]] = {}
        for p, by_block in raw.items():
            by_block = _object(by_block, f"{path}.strategies.{p}")
            by_player[p] = {
                tuple(key.split(",")): _probabilities(v, f"{path}.strategies.{p}.{key}")
                for key, v in by_block.items()
            }
        return KripkePlay(by_player)
    raise DocumentError(f"{path}.kind", f"unknown play kind {kind!r}; expected 'play' or 'kripke_play'")


def parse_play(text: str, game: Optional[AnyGame] = None) -> Union[Play, KripkePlay]:
    """Parse a play document; with `game`, reorder Kripke class keys into canonical blocks."""
    obj = _object(_loads(text), "$")
    _check_version(obj)
    play = play_from_obj(obj)
    if isinstance(game, KripkeGame) and isinstance(play, KripkePlay):
        play = _canonical_kripke_play(game, play)
    return play


def _canonical_kripke_play(game: KripkeGame, play: KripkePlay) -> KripkePlay:
    by_player: Dict[str, Dict[Block, MixedStrategy]] = {}
    for p, by_block in play.strategies.items():
        if p not in game.partitions:
            raise DocumentError(f"$.strategies.{p}", "unknown player")
        canonical = {frozenset(b): b for b in game.partitions[p]}
        out: Dict[Block, MixedStrategy] = {}
        for block, strategy in by_block.items():
            target = canonical.get(frozenset(block))
            if target is None:
                raise DocumentError(f"$.strategies.{p}.{block_key(block)}", "not a knowledge class of this player")
            out[target] = strategy
        by_player[p] = out
    return KripkePlay(by_player)


def serialize_play(play: Union[Play, KripkePlay]) -> str:
    return dumps(play_to_obj(play))


# --- reports and results --------------------------------------------------------


def _keyed(values: Mapping[Any, Any], convert=lambda v: v) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    for key, value in values.items():
        if isinstance(key, tuple):
            player, block = key
            out.setdefault(player, {})[block_key(block)] = convert(value)
        else:
            out[key] = convert(value)
    return out


def _unkeyed(raw: Mapping[str, Any], path: str, convert) -> Dict[Any, Any]:
    out: Dict[Any, Any] = {}
    for player, value in raw.items():
        if isinstance(value, dict):
            for key, inner in value.items():
                out[(player, tuple(key.split(",")))] = convert(inner, f"{path}.{player}.{key}")
        else:
            out[player] = convert(value, f"{path}.{player}")
    return out


def report_to_obj(report: GapReport) -> Dict[str, Any]:
    """Kripke reports nest their values as ``{player: {class_key: value}}``."""
    return {
        "max_gap": report.max_gap,
        "per_player_gap": _keyed(report.per_player_gap),
        "payoffs": _keyed(report.payoffs),
        "best_values": _keyed(report.best_values),
        "best_responses": _keyed(report.best_responses, lambda s: list(s.probabilities)),
    }


def report_from_obj(obj: Any, path: str) -> GapReport:
    obj = _object(obj, path)

    def section(key: str, convert) -> Dict[Any, Any]:
        return _unkeyed(_object(_field(obj, key, path), f"{path}.{key}"), f"{path}.{key}", convert)

    return GapReport(
        per_player_gap=section("per_player_gap", _number),
        max_gap=_number(_field(obj, "max_gap", path), f"{path}.max_gap"),
        best_responses=section("best_responses", _probabilities),
        payoffs=section("payoffs", _number),
        best_values=section("best_values", _number),
    )


def result_to_obj(result: SolveResult) -> Dict[str, Any]:
    return {
        "format_version": FORMAT_VERSION,
        "kind": "solve_result",
        "method": result.method,
        "converged": result.converged,
        "iterations_used": result.iterations_used,
        "restarts_used": result.restarts_used,
        "play": play_to_obj(result.play),
        "report": report_to_obj(result.report),
        "payoffs": result.payoffs,
    }


def serialize_result(result: SolveResult) -> str:
    return dumps(result_to_obj(result))


def parse_result(text: str) -> SolveResult:
    obj = _object(_loads(text), "$")
    _check_version(obj)
    if obj.get("kind") != "solve_result":
        raise DocumentError("$.kind", f"expected 'solve_result', got {obj.get('kind')!r}")
    converged = _field(obj, "converged", "$")
    if not isinstance(converged, bool):
        raise DocumentError("$.converged", "expected a boolean")
    payoffs = _object(_field(obj, "payoffs", "$"), "$.payoffs")
    method = _field(obj, "method", "$")
    if method not in SOLVER_METHODS:
        raise DocumentError("$.method", f"unknown solver method {method!r}")
    return SolveResult(
        play=play_from_obj(_field(obj, "play", "$"), "$.play"),
        report=report_from_obj(_field(obj, "report", "$"), "$.report"),
        converged=converged,
        iterations_used=_count(_field(obj, "iterations_used", "$"), "$.iterations_used"),
        restarts_used=_count(_field(obj, "restarts_used", "$"), "$.restarts_used"),
        method=method,
        payoffs=payoffs,
    )


def reduction_to_obj(mapping: Union[KripkeToMinMap, WorldChooserMap]) -> Dict[str, Any]:
    if isinstance(mapping, KripkeToMinMap):
        return {
            "format_version": FORMAT_VERSION,
            "kind": "reduction",
            "to": "min",
            "game": game_to_obj(mapping.min_game),
            "player_map": [
                {"player": p, "class": list(block), "class_player": name}
                for (p, block), name in mapping.player_map.items()
            ],
            "world_order": list(mapping.world_order),
            "penalty": mapping.penalty.value,
        }
    return {
        "format_version": FORMAT_VERSION,
        "kind": "reduction",
        "to": "finite",
        "game": game_to_obj(mapping.finite_game),
        "chooser_of": dict(mapping.chooser_of),
    }
