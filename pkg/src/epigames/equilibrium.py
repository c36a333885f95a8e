"""Best responses, gap certificates and equilibrium search. The search is described in docs/SOLVER.md."""
from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Any, Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .config import SolveConfig
from .exceptions import GridBudgetError, ShapeError
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
    check_play,
    contract_except,
    ensure_valid,
    kripke_payoff,
    max_abs_payoff,
)
from .lp import SimplexMaxMinProblem, solve_simplex_maxmin, solve_zero_sum
from .reductions import KripkeToMinMap, flatten_play, kripke_to_min, lift_play

logger = logging.getLogger(__name__)

GAP_SLACK = 1e-9
BRUTE_FORCE_BUDGET = 10**7

SUPPORT_THRESHOLDS = (0.05, 0.01, 0.001)
ACTIVE_THRESHOLDS = (0.05, 0.01, 0.001)
NEWTON_STEPS = 40
NEWTON_TOLERANCE = 1e-12
FALLBACK_SEEDS = 4

ReportKey = Union[PlayerId, Tuple[PlayerId, Block]]


@dataclass(frozen=True)
class GapReport:
    """Gaps keyed by player, or by (player, knowledge class) for Kripke games."""

    per_player_gap: Mapping[ReportKey, float]
    max_gap: float
    best_responses: Mapping[ReportKey, MixedStrategy]
    payoffs: Mapping[ReportKey, float]
    best_values: Mapping[ReportKey, float]


class BestResponse(NamedTuple):
    strategy: MixedStrategy
    value: float


class Verification(NamedTuple):
    accepted: bool
    report: GapReport


@dataclass(frozen=True)
class SolveResult:
    play: Union[Play, KripkePlay]
    report: GapReport
    converged: bool
    iterations_used: int
    restarts_used: int
    method: str
    # min games: player -> payoff; Kripke games: player -> world -> payoff
    payoffs: Mapping[PlayerId, object]


# --- array-level kernels ------------------------------------------------------


def _gains(game: MinGame, arrays: Sequence[np.ndarray], axis: int) -> np.ndarray:
    """k x m matrix: expected payoff of each pure strategy under each component."""
    player = game.players[axis]
    return np.stack([contract_except(t, arrays, axis) for t in game.payoffs[player]])


class _PlayerGap(NamedTuple):
    payoff: float
    best_value: float
    best_response: np.ndarray


def _player_gaps(game: MinGame, arrays: Sequence[np.ndarray]) -> List[_PlayerGap]:
    out = []
    for axis in range(len(game.players)):
        gains = _gains(game, arrays, axis)
        current = float((gains @ arrays[axis]).min())
        solution = solve_simplex_maxmin(SimplexMaxMinProblem(gains))
        out.append(_PlayerGap(current, solution.value, solution.x))
    return out


def _max_gap(gaps: Sequence[_PlayerGap]) -> float:
    return max(g.best_value - g.payoff for g in gaps)


def _report(game: MinGame, gaps: Sequence[_PlayerGap]) -> GapReport:
    per_player = {p: g.best_value - g.payoff for p, g in zip(game.players, gaps)}
    return GapReport(
        per_player_gap=per_player,
        max_gap=max(per_player.values()),
        best_responses={p: MixedStrategy.from_array(g.best_response) for p, g in zip(game.players, gaps)},
        payoffs={p: g.payoff for p, g in zip(game.players, gaps)},
        best_values={p: g.best_value for p, g in zip(game.players, gaps)},
    )


# --- public certificates ------------------------------------------------------


def best_response(game: MinGame, sigma: Play, player: PlayerId) -> BestResponse:
    """The LP maximizer of min_j E[u^j_p] over p's mixed strategies, opponents fixed."""
    arrays = check_play(game, sigma)
    try:
        axis = game.players.index(player)
    except ValueError:
        raise ShapeError(f"unknown player {player!r}")
    solution = solve_simplex_maxmin(SimplexMaxMinProblem(_gains(game, arrays, axis)))
    return BestResponse(MixedStrategy.from_array(solution.x), solution.value)


class PureBestResponse(NamedTuple):
    index: int
    label: str
    value: float


def pure_best_response(game: MinGame, sigma: Play, player: PlayerId) -> PureBestResponse:
    """Best pure strategy by worst-case payoff (lowest index on ties).

    Never better than `best_response`: mixing can raise a minimum of linear
    functions above every vertex.
    """
    arrays = check_play(game, sigma)
    try:
        axis = game.players.index(player)
    except ValueError:
        raise ShapeError(f"unknown player {player!r}")
    worst = _gains(game, arrays, axis).min(axis=0)
    index = int(np.argmax(worst))
    return PureBestResponse(index, game.strategies[player][index], float(worst[index]))


def gap_report(game: MinGame, sigma: Play) -> GapReport:
    """Per-player best-response gaps of `sigma`."""
    arrays = check_play(game, sigma)
    return _report(game, _player_gaps(game, arrays))


def finite_gap_report(game: FiniteGame, sigma: Play) -> GapReport:
    """Nash gaps of a finite game (its min-1 form)."""
    return gap_report(game.as_min_game(), sigma)


def per_class_report(mapping: KripkeToMinMap, report: GapReport) -> GapReport:
    """Re-key a class-player report by the (player, class) pair each class-player stands for."""

    def rekey(values: Mapping[ReportKey, Any]) -> Dict[ReportKey, Any]:
        return {mapping.class_of(name): v for name, v in values.items()}

    return GapReport(
        per_player_gap=rekey(report.per_player_gap),
        max_gap=report.max_gap,
        best_responses=rekey(report.best_responses),
        payoffs=rekey(report.payoffs),
        best_values=rekey(report.best_values),
    )


def verify_equilibrium(
    game: Union[MinGame, KripkeGame, FiniteGame],
    play: Union[Play, KripkePlay],
    epsilon: float,
) -> Verification:
    """Accept iff every player's gap is at most `epsilon`.

    A Kripke play is checked on its min-game reduction; the reduction keeps
    payoffs world by world, so this covers every world and every deviation.
    """
    if isinstance(game, KripkeGame):
        if not isinstance(play, KripkePlay):
            raise ShapeError("a Kripke game needs a KripkePlay")
        mapping = kripke_to_min(game)
        report = per_class_report(mapping, gap_report(mapping.min_game, flatten_play(mapping, play)))
    else:
        if not isinstance(play, Play):
            raise ShapeError("a finite or min game needs a Play")
        min_game = game.as_min_game() if isinstance(game, FiniteGame) else game
        report = gap_report(min_game, play)
    return Verification(report.max_gap <= epsilon, report)


# --- active-set refinement ----------------------------------------------------


class _Structure(NamedTuple):
    support: Tuple[int, ...]
    active: Tuple[int, ...]


def _guess(game: MinGame, arrays: Sequence[np.ndarray], tau: float, delta: float) -> Tuple[_Structure, ...]:
    out = []
    for axis, x in enumerate(arrays):
        support = set(np.nonzero(x > tau)[0].tolist()) | {int(np.argmax(x))}
        values = _gains(game, arrays, axis) @ x
        active = np.nonzero(values <= values.min() + delta)[0]
        out.append(_Structure(tuple(sorted(support)), tuple(int(j) for j in active)))
    return tuple(out)


def _newton(
    game: MinGame, arrays: Sequence[np.ndarray], structure: Sequence[_Structure]
) -> Optional[List[np.ndarray]]:
    """Solve the indifference system of a guessed support/active structure.

    Unknowns per player: support probabilities x_S, component weights lam_J and
    value v. Equations: sum x_S = 1, sum lam_J = 1, g_j . x = v on J, and
    sum_j lam_j g_j[i] = v on S. Every residual is affine in each single
    unknown, so unit forward differences give the exact Jacobian.
    """
    sizes = [len(arr) for arr in arrays]
    blocks = []
    z0: List[float] = []
    for axis, (x, st) in enumerate(zip(arrays, structure)):
        xs = np.asarray(x)[list(st.support)]
        xs = xs / xs.sum() if xs.sum() > 0 else np.full(len(st.support), 1.0 / len(st.support))
        values = _gains(game, arrays, axis) @ x
        start = len(z0)
        z0.extend(xs.tolist())
        z0.extend([1.0 / len(st.active)] * len(st.active))
        z0.append(float(values[list(st.active)].min()))
        blocks.append(start)

    def unpack(z: np.ndarray) -> List[np.ndarray]:
        full = []
        for axis, st in enumerate(structure):
            x = np.zeros(sizes[axis])
            x[list(st.support)] = z[blocks[axis] : blocks[axis] + len(st.support)]
            full.append(x)
        return full

    def residual(z: np.ndarray) -> np.ndarray:
        full = unpack(z)
        parts = []
        for axis, st in enumerate(structure):
            base = blocks[axis]
            ns, na = len(st.support), len(st.active)
            xs = z[base : base + ns]
            lam = z[base + ns : base + ns + na]
            v = z[base + ns + na]
            gains = _gains(game, full, axis)[list(st.active)]
            parts.append([xs.sum() - 1.0, lam.sum() - 1.0])
            parts.append(gains @ full[axis] - v)
            parts.append(lam @ gains[:, list(st.support)] - v)
        return np.concatenate([np.atleast_1d(np.asarray(p, dtype=float)) for p in parts])

    z = np.asarray(z0, dtype=float)
    f = residual(z)
    norm = float(np.max(np.abs(f)))
    for _ in range(NEWTON_STEPS):
        if norm <= NEWTON_TOLERANCE:
            break
        jac = np.empty((f.size, z.size))
        for c in range(z.size):
            shifted = z.copy()
            shifted[c] += 1.0
            jac[:, c] = residual(shifted) - f
        step = np.linalg.lstsq(jac, -f, rcond=None)[0]
        z = z + step
        f = residual(z)
        new_norm = float(np.max(np.abs(f)))
        if not math.isfinite(new_norm) or new_norm > 1e6:
            return None
        norm = new_norm
    if norm > 1e-9:
        return None

    full = unpack(z)
    if any(np.min(x) < -1e-9 for x in full):
        return None
    return [np.clip(x, 0.0, None) / np.clip(x, 0.0, None).sum() for x in full]


def _refine(
    game: MinGame, arrays: Sequence[np.ndarray], epsilon: float
) -> Optional[Tuple[float, List[np.ndarray]]]:
    scale = 1.0 + max_abs_payoff(game)
    tried = set()
    best: Optional[Tuple[float, List[np.ndarray]]] = None
    for tau in SUPPORT_THRESHOLDS:
        for delta in ACTIVE_THRESHOLDS:
            structure = _guess(game, arrays, tau, delta * scale)
            if structure in tried:
                continue
            tried.add(structure)
            candidate = _newton(game, arrays, structure)
            if candidate is None:
                continue
            gap = _max_gap(_player_gaps(game, candidate))
            if best is None or gap < best[0]:
                best = (gap, candidate)
            if gap <= epsilon:
                return best
    return best


# --- dynamics -----------------------------------------------------------------


@dataclass
class _Outcome:
    arrays: List[np.ndarray]
    gap: float
    iterations: int
    converged: bool


def _initial(game: MinGame, cfg: SolveConfig, restart: int) -> List[np.ndarray]:
    if restart == 0:
        return [np.full(m, 1.0 / m) for m in game.shape]
    rng = np.random.default_rng([cfg.seed, restart])
    return [rng.dirichlet(np.ones(m)) for m in game.shape]


def _run_restart(game: MinGame, cfg: SolveConfig, restart: int) -> _Outcome:
    arrays = _initial(game, cfg, restart)
    best = _Outcome([a.copy() for a in arrays], math.inf, 0, False)
    next_refine = cfg.check_every
    n = 0
    while True:
        gaps = _player_gaps(game, arrays)
        if n % cfg.check_every == 0 or n == cfg.max_iterations:
            gap = _max_gap(gaps)
            logger.debug("restart %d step %d max_gap=%.3e", restart, n, gap)
            if gap < best.gap:
                best = _Outcome([a.copy() for a in arrays], gap, n, gap <= cfg.epsilon_target)
            if best.converged:
                break
            if n >= next_refine or n == cfg.max_iterations:
                refined = _refine(game, arrays, cfg.epsilon_target)
                next_refine *= 4
                if refined is not None and refined[0] < best.gap:
                    best = _Outcome(refined[1], refined[0], n, refined[0] <= cfg.epsilon_target)
                    if best.converged:
                        break
        if n >= cfg.max_iterations:
            break
        eta = 1.0 / (n + 2)
        arrays = [(1.0 - eta) * a + eta * g.best_response for a, g in zip(arrays, gaps)]
        n += 1
    best.iterations = n
    return best


def _run_restarts(game: MinGame, cfg: SolveConfig) -> List[_Outcome]:
    """Outcomes in restart order up to and including the first converged one."""
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(lambda r: _run_restart(game, cfg, r), range(cfg.restarts)))
        for i, outcome in enumerate(outcomes):
            if outcome.converged:
                return outcomes[: i + 1]
        return outcomes

    outcomes = []
    for r in range(cfg.restarts):
        logger.info("restart %d/%d", r + 1, cfg.restarts)
        outcome = _run_restart(game, cfg, r)
        outcomes.append(outcome)
        if outcome.converged:
            break
    return outcomes


# --- grid fallback ------------------------------------------------------------


def _simplex_grid(m: int, step: float) -> np.ndarray:
    """All points of the m-simplex whose coordinates are multiples of 1/n, n = round(1/step)."""
    n = max(1, int(round(1.0 / step)))
    points = []
    for bars in itertools.combinations(range(n + m - 1), m - 1):
        edges = (-1,) + bars + (n + m - 1,)
        points.append([edges[i + 1] - edges[i] - 1 for i in range(m)])
    return np.asarray(points, dtype=float) / n


def _grid_size(shape: Sequence[int], step: float) -> int:
    n = max(1, int(round(1.0 / step)))
    return math.prod(math.comb(n + m - 1, m - 1) for m in shape)


def _scan_grid(game: MinGame, step: float, keep: int) -> List[Tuple[float, List[np.ndarray]]]:
    grids = [_simplex_grid(m, step) for m in game.shape]
    best: List[Tuple[float, int, List[np.ndarray]]] = []
    for index, point in enumerate(itertools.product(*grids)):
        arrays = [np.asarray(x) for x in point]
        gap = _max_gap(_player_gaps(game, arrays))
        best.append((gap, index, arrays))
        if len(best) > 4 * keep:
            best.sort(key=lambda t: (t[0], t[1]))
            del best[keep:]
    best.sort(key=lambda t: (t[0], t[1]))
    return [(gap, arrays) for gap, _, arrays in best[:keep]]


def _polish(game: MinGame, arrays: List[np.ndarray], cfg: SolveConfig) -> Tuple[float, List[np.ndarray], int]:
    """Repeatedly move the worst player toward her best response with a shrinking step."""
    arrays = [a.copy() for a in arrays]
    best_gap, best_arrays = math.inf, arrays
    rounds = 0
    for r in range(cfg.polish_rounds + 1):
        gaps = _player_gaps(game, arrays)
        gap = _max_gap(gaps)
        if gap < best_gap:
            best_gap, best_arrays = gap, [a.copy() for a in arrays]
        if gap <= cfg.epsilon_target or r == cfg.polish_rounds:
            break
        worst = int(np.argmax([g.best_value - g.payoff for g in gaps]))
        eta = 1.0 / (r + 2)
        arrays[worst] = (1.0 - eta) * arrays[worst] + eta * gaps[worst].best_response
        rounds += 1
    return best_gap, best_arrays, rounds


def _fallback(game: MinGame, cfg: SolveConfig) -> _Outcome:
    step = cfg.grid_step
    while step < 1.0 and _grid_size(game.shape, step) > cfg.grid_budget:
        step = min(1.0, step * 2)
    logger.info("fallback grid search: step=%.3g points=%d", step, _grid_size(game.shape, step))
    best = _Outcome([], math.inf, 0, False)
    rounds_total = 0
    for _, seed_arrays in _scan_grid(game, step, FALLBACK_SEEDS):
        gap, arrays, rounds = _polish(game, seed_arrays, cfg)
        rounds_total += rounds
        refined = _refine(game, arrays, cfg.epsilon_target)
        if refined is not None and refined[0] < gap:
            gap, arrays = refined
        if gap < best.gap:
            best = _Outcome(arrays, gap, 0, gap <= cfg.epsilon_target)
        if best.converged:
            break
    best.iterations = rounds_total
    return best


def brute_force_gap_min(game: MinGame, step: float) -> Tuple[Play, float]:
    """Exhaustive grid minimizer of the max gap; an oracle independent of the solver."""
    ensure_valid(game)
    if not 0 < step <= 1:
        raise GridBudgetError(f"grid step must lie in (0, 1], got {step!r}")
    size = _grid_size(game.shape, step)
    if size > BRUTE_FORCE_BUDGET:
        raise GridBudgetError(f"grid of {size} points exceeds the budget of {BRUTE_FORCE_BUDGET}")
    (gap, arrays), = _scan_grid(game, step, 1)
    return Play.from_arrays(game.players, arrays), gap


# --- solvers ------------------------------------------------------------------


def _zero_sum_matrix(game: MinGame) -> Optional[np.ndarray]:
    if game.k != 1 or len(game.players) != 2:
        return None
    first, second = (game.payoffs[p][0] for p in game.players)
    if game.zero_sum or np.array_equal(second, -first):
        return first
    return None


def solve_min_game(game: MinGame, cfg: Optional[SolveConfig] = None) -> SolveResult:
    """Certified epsilon-equilibrium search, or an explicit best-effort result."""
    cfg = (cfg or SolveConfig()).validate()
    ensure_valid(game)

    matrix = _zero_sum_matrix(game)
    if matrix is not None:
        solution = solve_zero_sum(matrix)
        arrays = [solution.row_strategy, solution.col_strategy]
        return _result(game, arrays, cfg, iterations=0, restarts=0, method="exact-zero-sum")

    outcomes = _run_restarts(game, cfg)
    iterations = sum(o.iterations for o in outcomes)
    best = min(outcomes, key=lambda o: o.gap)
    method = "fictitious-play"
    if not best.converged:
        logger.info("no restart reached epsilon=%.3g (best %.3e); trying grid fallback", cfg.epsilon_target, best.gap)
        fallback = _fallback(game, cfg)
        iterations += fallback.iterations
        if fallback.gap < best.gap:
            best, method = fallback, "gap-grid-polish"

    result = _result(game, best.arrays, cfg, iterations=iterations, restarts=len(outcomes), method=method)
    if result.converged:
        logger.info("converged via %s: max_gap=%.3e", method, result.report.max_gap)
    else:
        logger.warning("not converged: best max_gap=%.3e > epsilon=%.3g", result.report.max_gap, cfg.epsilon_target)
    return result


def _result(
    game: MinGame, arrays: Sequence[np.ndarray], cfg: SolveConfig, *, iterations: int, restarts: int, method: str
) -> SolveResult:
    play = Play.from_arrays(game.players, arrays)
    # Re-certify on the normalized play that is actually returned.
    report = gap_report(game, play)
    return SolveResult(
        play=play,
        report=report,
        converged=report.max_gap <= cfg.epsilon_target,
        iterations_used=iterations,
        restarts_used=restarts,
        method=method,
        payoffs=dict(report.payoffs),
    )


def solve_finite(game: FiniteGame, cfg: Optional[SolveConfig] = None) -> SolveResult:
    return solve_min_game(game.as_min_game(), cfg)


def solve_kripke(game: KripkeGame, cfg: Optional[SolveConfig] = None) -> SolveResult:
    """Solve through the class-player min-game and lift the play back."""
    mapping = kripke_to_min(game)
    result = solve_min_game(mapping.min_game, cfg)
    kplay = lift_play(mapping, result.play)
    payoffs: Dict[PlayerId, Dict[WorldId, float]] = {
        p: {w: kripke_payoff(game, kplay, p, w) for w in game.worlds} for p in game.players
    }
    return replace(result, play=kplay, report=per_class_report(mapping, result.report), payoffs=payoffs)
