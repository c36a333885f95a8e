from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from .equilibrium import (
    GapReport,
    best_response,
    pure_best_response,
    solve_finite,
    solve_kripke,
    solve_min_game,
    verify_equilibrium,
)
from .exceptions import DocumentError, EpigamesError
from .fixtures import FIXTURES, fixture
from .games import (
    AnyGame,
    FiniteGame,
    KripkeGame,
    KripkePlay,
    MinGame,
    MixedStrategy,
    Play,
    block_key,
    expected_payoff,
    kripke_worst_case,
    min_game_worst_case,
)
from .json_io import (
    dumps,
    parse_game,
    parse_play,
    reduction_to_obj,
    report_to_obj,
    result_to_obj,
    serialize_game,
    serialize_play,
)
from .log import configure_logging
from .reductions import flatten_play, kripke_to_min, min_to_finite
from .schemas import (
    BEST_RESPONSE_COLUMNS,
    GAP_COLUMNS,
    PAYOFF_COLUMNS,
    format_probabilities,
    render,
    table,
)
from .settings import AppSettings, load_settings

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_USAGE = 2
EXIT_NOT_CONVERGED = 3
EXIT_REJECTED = 4


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser("epigames")
    p.add_argument("--config", default=None, help="Path to settings TOML (defaults to epigames.toml if present)")
    p.add_argument("--log-level", default=None, help="Logging level (DEBUG, INFO, WARNING, ERROR)")
    p.add_argument("--json", action="store_true", help="Print machine-readable JSON on stdout")
    sub = p.add_subparsers(dest="cmd", required=True)

    payoff = sub.add_parser("payoff", help="Evaluate (worst-case) payoffs of a play")
    payoff.add_argument("--game", required=True, help="Game document")
    payoff.add_argument("--play", required=True, help="Play document")
    payoff.add_argument("--player", default=None, help="Only this player")
    payoff.add_argument("--world", default=None, help="Only this world (Kripke games)")

    br = sub.add_parser("best-response", help="LP best response of one player")
    br.add_argument("--game", required=True)
    br.add_argument("--play", required=True)
    br.add_argument("--player", required=True)
    br.add_argument("--pure", action="store_true", help="Best pure strategy instead of the LP mixed response")

    reduce_ = sub.add_parser("reduce", help="Reduce Kripke -> min or min -> finite")
    reduce_.add_argument("--game", required=True)
    reduce_.add_argument("--to", required=True, choices=["min", "finite"])
    reduce_.add_argument("--out", default=None, help="Write the reduction document here")

    solve = sub.add_parser("solve", help="Search for an epsilon-equilibrium")
    solve.add_argument("--game", required=True)
    solve.add_argument("--epsilon", type=float, default=None, help="Target max gap (default from settings)")
    solve.add_argument("--seed", type=int, default=None)
    solve.add_argument("--restarts", type=int, default=None)
    solve.add_argument("--max-iterations", type=int, default=None)
    solve.add_argument("--workers", type=int, default=None)
    solve.add_argument("--out", default=None, help="Write the solve result document here")

    verify = sub.add_parser("verify", help="Check a play against an epsilon")
    verify.add_argument("--game", required=True)
    verify.add_argument("--play", required=True)
    verify.add_argument("--epsilon", type=float, default=None, help="Accepted max gap (default from settings)")

    example = sub.add_parser("example", help="Write a built-in example game")
    example.add_argument("--name", required=True, choices=list(FIXTURES))
    example.add_argument("--out", default=None, help="Write the game here instead of stdout")
    example.add_argument("--play", default=None, help="Also write the bundled reference play here")
    return p


# --- helpers ------------------------------------------------------------------


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise DocumentError(path, f"cannot read file: {e.strerror or e}") from e
    except UnicodeDecodeError as e:
        raise DocumentError(path, f"not valid UTF-8: byte {e.start}: {e.reason}") from e


def _write(path: str, text: str) -> None:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")


def _load_game(path: str) -> AnyGame:
    text = _read(path)
    try:
        return parse_game(text).body
    except DocumentError as e:
        raise DocumentError(f"{path}:{e.path}", e.message) from e


def _load_play(path: str, game: AnyGame) -> Union[Play, KripkePlay]:
    text = _read(path)
    try:
        play = parse_play(text, game)
    except DocumentError as e:
        raise DocumentError(f"{path}:{e.path}", e.message) from e
    if isinstance(game, KripkeGame) != isinstance(play, KripkePlay):
        expected = "kripke_play" if isinstance(game, KripkeGame) else "play"
        raise DocumentError(f"{path}:$.kind", f"this game needs a {expected!r} document")
    return play


def _as_min(game: AnyGame) -> MinGame:
    return game.as_min_game() if isinstance(game, FiniteGame) else game


def _emit(args: argparse.Namespace, obj: Dict[str, Any], text: str) -> None:
    print(dumps(obj).rstrip("\n") if args.json else text)


def _gap_rows(report: GapReport) -> List[Dict[str, Any]]:
    rows = []
    for key in report.per_player_gap:
        player, klass = key if isinstance(key, tuple) else (key, None)
        rows.append(
            {
                "Player": player,
                "Class": block_key(klass) if klass is not None else "-",
                "Payoff": report.payoffs[key],
                "BestValue": report.best_values[key],
                "Gap": report.per_player_gap[key],
                "BestResponse": format_probabilities(report.best_responses[key].probabilities),
            }
        )
    return rows


def _gap_text(report: GapReport) -> str:
    return f"{render(table(_gap_rows(report), GAP_COLUMNS))}\nmax_gap: {report.max_gap:.6g}"


# --- commands -----------------------------------------------------------------


def _cmd_payoff(args: argparse.Namespace) -> int:
    game = _load_game(args.game)
    play = _load_play(args.play, game)
    players = [args.player] if args.player else list(game.players)
    if args.world is not None and not isinstance(game, KripkeGame):
        raise EpigamesError("--world applies to Kripke games only")

    rows: List[Dict[str, Any]] = []
    for p in players:
        if isinstance(game, KripkeGame):
            worlds = [args.world] if args.world is not None else list(game.worlds)
            for w in worlds:
                worst = kripke_worst_case(game, play, p, w)
                rows.append({"Player": p, "World": w, "Payoff": worst.value, "Minimizers": list(worst.minimizers)})
        elif isinstance(game, MinGame):
            worst = min_game_worst_case(game, play, p)
            rows.append({"Player": p, "World": None, "Payoff": worst.value, "Minimizers": list(worst.minimizers)})
        else:
            rows.append({"Player": p, "World": None, "Payoff": expected_payoff(game, play, p), "Minimizers": []})

    obj = {
        "kind": "payoffs",
        "payoffs": [
            {"player": r["Player"], "world": r["World"], "payoff": r["Payoff"], "minimizers": r["Minimizers"]}
            for r in rows
        ],
    }
    display = [dict(r, World=r["World"] or "-", Minimizers=",".join(str(m) for m in r["Minimizers"])) for r in rows]
    _emit(args, obj, render(table(display, PAYOFF_COLUMNS)))
    return EXIT_OK


def _cmd_best_response(args: argparse.Namespace) -> int:
    game = _load_game(args.game)
    play = _load_play(args.play, game)
    # (class, min game, play, player in that game)
    targets: List[Tuple[Optional[str], MinGame, Play, str]] = []
    if isinstance(game, KripkeGame):
        if args.player not in game.players:
            raise EpigamesError(f"unknown player {args.player!r}")
        mapping = kripke_to_min(game)
        sigma = flatten_play(mapping, play)
        for block in game.partitions[args.player]:
            targets.append((block_key(block), mapping.min_game, sigma, mapping.player_map[(args.player, block)]))
    else:
        targets.append((None, _as_min(game), play, args.player))

    rows: List[Dict[str, Any]] = []
    for klass, min_game, sigma, name in targets:
        if args.pure:
            pure = pure_best_response(min_game, sigma, name)
            strategy = MixedStrategy.pure(len(min_game.strategies[name]), pure.index)
            value = pure.value
        else:
            strategy, value = best_response(min_game, sigma, name)
        rows.append({"Player": args.player, "Class": klass, "Value": value, "Strategy": strategy})

    obj = {
        "kind": "best_response",
        "pure": bool(args.pure),
        "best_responses": [
            {
                "player": r["Player"],
                "class": r["Class"],
                "value": r["Value"],
                "strategy": list(r["Strategy"].probabilities),
            }
            for r in rows
        ],
    }
    display = [
        dict(r, Class=r["Class"] or "-", Strategy=format_probabilities(r["Strategy"].probabilities)) for r in rows
    ]
    _emit(args, obj, render(table(display, BEST_RESPONSE_COLUMNS)))
    return EXIT_OK


def _cmd_reduce(args: argparse.Namespace) -> int:
    game = _load_game(args.game)
    if args.to == "min":
        if not isinstance(game, KripkeGame):
            raise EpigamesError("--to min needs a Kripke game")
        obj = reduction_to_obj(kripke_to_min(game))
    else:
        if isinstance(game, KripkeGame):
            raise EpigamesError("--to finite needs a min or finite game; reduce Kripke games to min first")
        obj = reduction_to_obj(min_to_finite(_as_min(game)))

    text = dumps(obj)
    if args.out:
        _write(args.out, text)
        reduced = obj["game"]
        summary = f"Written {reduced['kind']} game with {len(reduced['players'])} players to {args.out}"
        _emit(args, {"kind": "written", "path": args.out}, summary)
    else:
        print(text.rstrip("\n"))
    return EXIT_OK


def _cmd_solve(args: argparse.Namespace, settings: AppSettings) -> int:
    game = _load_game(args.game)
    cfg = settings.solver.with_overrides(
        epsilon_target=args.epsilon,
        seed=args.seed,
        restarts=args.restarts,
        max_iterations=args.max_iterations,
        workers=args.workers,
    )
    if isinstance(game, KripkeGame):
        result = solve_kripke(game, cfg)
    elif isinstance(game, MinGame):
        result = solve_min_game(game, cfg)
    else:
        result = solve_finite(game, cfg)

    obj = result_to_obj(result)
    if args.out:
        _write(args.out, dumps(obj))
    status = "converged" if result.converged else "NOT converged (best effort)"
    text = "\n".join(
        [
            f"method: {result.method}  iterations: {result.iterations_used}  restarts: {result.restarts_used}",
            _gap_text(result.report),
            f"status: {status} at epsilon={cfg.epsilon_target:g}",
        ]
    )
    _emit(args, obj, text)
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def _cmd_verify(args: argparse.Namespace, settings: AppSettings) -> int:
    game = _load_game(args.game)
    play = _load_play(args.play, game)
    epsilon = args.epsilon if args.epsilon is not None else settings.solver.epsilon_target
    if not epsilon >= 0:
        raise EpigamesError("--epsilon must be >= 0")
    verdict = verify_equilibrium(game, play, epsilon)
    obj = {
        "kind": "verification",
        "accepted": verdict.accepted,
        "epsilon": epsilon,
        "report": report_to_obj(verdict.report),
    }
    status = "ACCEPTED" if verdict.accepted else "REJECTED"
    _emit(args, obj, f"{_gap_text(verdict.report)}\n{status} at epsilon={epsilon:g}")
    return EXIT_OK if verdict.accepted else EXIT_REJECTED


def _cmd_example(args: argparse.Namespace) -> int:
    game, play = fixture(args.name)
    text = serialize_game(game)
    if args.play:
        _write(args.play, serialize_play(play))
    if args.out:
        _write(args.out, text)
        _emit(args, {"kind": "written", "path": args.out}, f"Written example {args.name} to {args.out}")
    else:
        print(text.rstrip("\n"))
    return EXIT_OK


def main(argv=None) -> int:
    p = build_parser()
    try:
        args = p.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors and 0 on --help
        return int(e.code or 0)

    configure_logging(args.log_level)
    try:
        settings = load_settings(args.config)
        if args.log_level is None:
            configure_logging(settings.log_level)

        if args.cmd == "payoff":
            return _cmd_payoff(args)
        if args.cmd == "best-response":
            return _cmd_best_response(args)
        if args.cmd == "reduce":
            return _cmd_reduce(args)
        if args.cmd == "solve":
            return _cmd_solve(args, settings)
        if args.cmd == "verify":
            return _cmd_verify(args, settings)
        if args.cmd == "example":
            return _cmd_example(args)
    except (EpigamesError, json.JSONDecodeError) as e:
        logger.debug("command %s failed", args.cmd, exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT

    return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
