from __future__ import annotations

import numpy as np
import pytest

from conftest import random_kripke_game, random_min_game, random_play
from epigames.config import SolveConfig
from epigames.exceptions import ConfigError, GridBudgetError, ShapeError
from epigames.games import (
    FiniteGame,
    KripkeGame,
    KripkePlay,
    MinGame,
    MixedStrategy,
    Play,
    min_game_payoff,
)
from epigames.equilibrium import (
    best_response,
    brute_force_gap_min,
    finite_gap_report,
    gap_report,
    pure_best_response,
    solve_finite,
    solve_kripke,
    solve_min_game,
    verify_equilibrium,
)
from epigames.reductions import choosers_best_play, flatten_play, kripke_to_min, lift_play, min_to_finite

MATCHING_PENNIES = np.array([[-1.0, 1.0], [1.0, -1.0]])
FAST = SolveConfig(restarts=4, max_iterations=4000)


def pennies_min_game(zero_sum: bool = False) -> MinGame:
    return MinGame(
        ("Row", "Column"),
        {"Row": ("h", "t"), "Column": ("h", "t")},
        1,
        {"Row": (MATCHING_PENNIES,), "Column": (-MATCHING_PENNIES,)},
        zero_sum=zero_sum,
    )


# --- best responses and gaps --------------------------------------------------------


def test_sec4_best_responses(sec4):
    column_first = Play({"Row": MixedStrategy.uniform(2), "Column": MixedStrategy.pure(2, 0)})
    pure = pure_best_response(sec4, column_first, "Row")
    assert (pure.index, pure.label, pure.value) == (1, "r2", 0.0)
    mixed = best_response(sec4, column_first, "Row")
    assert mixed.strategy.probabilities == pytest.approx((0.25, 0.75), abs=1e-12)
    assert mixed.value == pytest.approx(0.5, abs=1e-12)
    assert mixed.value >= pure.value


def test_remark_best_response(remark):
    br = best_response(remark, Play({"Player": MixedStrategy.pure(2, 0)}), "Player")
    assert br.strategy.probabilities == pytest.approx((0.5, 0.5), abs=1e-12)
    assert br.value == pytest.approx(1.5, abs=1e-12)


def test_k1_best_response_is_best_pure_strategy(rng):
    for _ in range(30):
        game = random_min_game(rng, k=1)
        sigma = random_play(rng, game)
        br = best_response(game, sigma, "P0")
        values = [
            min_game_payoff(game, sigma.replace("P0", MixedStrategy.pure(game.shape[0], i)), "P0")
            for i in range(game.shape[0])
        ]
        assert br.value == pytest.approx(max(values), abs=1e-9)


def test_unknown_player_rejected(sec4, sec4_play):
    with pytest.raises(ShapeError):
        best_response(sec4, sec4_play, "Nobody")


def test_pure_heads_matching_pennies_gap_is_two():
    heads = Play({"Row": MixedStrategy.pure(2, 0), "Column": MixedStrategy.pure(2, 0)})
    report = gap_report(pennies_min_game(), heads)
    assert report.max_gap == pytest.approx(2.0, abs=1e-12)
    # Row loses at (heads, heads) and gains 2 by switching to tails
    assert report.per_player_gap["Row"] == pytest.approx(2.0, abs=1e-12)
    assert report.per_player_gap["Column"] == pytest.approx(0.0, abs=1e-12)


def test_gaps_are_nonnegative(rng):
    for _ in range(50):
        game = random_min_game(rng, n_players=int(rng.integers(1, 4)), k=int(rng.integers(1, 4)))
        report = gap_report(game, random_play(rng, game))
        assert all(g >= -1e-9 for g in report.per_player_gap.values())
        assert report.max_gap == max(report.per_player_gap.values())


def test_one_player_best_response_has_zero_gap(rng):
    for _ in range(20):
        game = random_min_game(rng, n_players=1, k=3)
        sigma = random_play(rng, game)
        br = best_response(game, sigma, "P0")
        assert gap_report(game, Play({"P0": br.strategy})).max_gap == pytest.approx(0.0, abs=1e-9)


# --- verification -----------------------------------------------------------------


def test_section2_reference_play_verifies(section2, section2_eq):
    verdict = verify_equilibrium(section2, section2_eq, 1e-6)
    assert verdict.accepted
    assert verdict.report.max_gap <= 1e-9


def test_section2_perturbed_play_rejected(section2, section2_eq):
    perturbed = KripkePlay(
        {"Row": section2_eq["Row"], "Column": {("1",): section2_eq["Column"][("1",)], ("2", "3"): MixedStrategy((0.7, 0.3))}}
    )
    verdict = verify_equilibrium(section2, perturbed, 1e-6)
    assert not verdict.accepted
    assert verdict.report.max_gap > 1e-6


def test_infinite_epsilon_accepts_anything(rng, sec4):
    assert verify_equilibrium(sec4, random_play(rng, sec4), float("inf")).accepted


def test_play_kind_must_match_game(section2, sec4_play):
    with pytest.raises(ShapeError):
        verify_equilibrium(section2, sec4_play, 1e-6)


def test_verifier_soundness_against_random_deviations(rng, section2, section2_eq):
    mapping = kripke_to_min(section2)
    game = mapping.min_game
    sigma = flatten_play(mapping, section2_eq)
    eps = 1e-6
    assert verify_equilibrium(game, sigma, eps).accepted
    for p in game.players:
        current = min_game_payoff(game, sigma, p)
        for x in rng.dirichlet(np.ones(2), size=1000):
            deviated = sigma.replace(p, MixedStrategy.from_array(x))
            assert min_game_payoff(game, deviated, p) <= current + eps + 1e-9


def test_kripke_and_min_verifiers_agree(rng):
    for _ in range(40):
        game = random_kripke_game(rng, max_strategies=2)
        mapping = kripke_to_min(game)
        sigma = random_play(rng, mapping.min_game)
        for eps in (1e-6, 0.5, 2.0):
            kripke = verify_equilibrium(game, lift_play(mapping, sigma), eps).accepted
            assert kripke == verify_equilibrium(mapping.min_game, sigma, eps).accepted


def test_nash_of_chooser_game_lowers_to_equilibrium(rng):
    eps = 1e-9
    checked = 0
    for _ in range(100):
        game = random_min_game(rng, n_players=2, k=2, sizes=(2, 2))
        mapping = min_to_finite(game)
        for i in range(2):
            for j in range(2):
                lowered = Play({"P0": MixedStrategy.pure(2, i), "P1": MixedStrategy.pure(2, j)})
                augmented = choosers_best_play(mapping, lowered)
                report = finite_gap_report(mapping.finite_game, augmented)
                if all(report.per_player_gap[p] <= eps for p in game.players):
                    checked += 1
                    assert verify_equilibrium(game, lowered, eps + 1e-9).accepted
    assert checked > 0


# --- solving ---------------------------------------------------------------------------


def test_solve_remark(remark):
    result = solve_min_game(remark)
    assert result.converged
    assert result.play["Player"].probabilities == pytest.approx((0.5, 0.5), abs=1e-6)
    assert result.payoffs["Player"] == pytest.approx(1.5, abs=1e-6)
    assert result.report.max_gap <= 1e-6


def test_zero_sum_dispatches_to_exact_lp():
    result = solve_min_game(pennies_min_game(zero_sum=True))
    assert result.method == "exact-zero-sum"
    assert result.converged and result.restarts_used == 0
    assert result.play["Row"].probabilities == pytest.approx((0.5, 0.5), abs=1e-12)
    assert result.report.max_gap <= 1e-9


def test_solve_finite_game():
    game = FiniteGame(
        ("A", "B"),
        {"A": ("x", "y"), "B": ("x", "y")},
        {"A": np.array([[3.0, 0.0], [0.0, 1.0]]), "B": np.array([[1.0, 0.0], [0.0, 3.0]])},
    )
    result = solve_finite(game, FAST)
    assert result.converged
    assert finite_gap_report(game, result.play).max_gap <= 1e-6


def test_solve_section2(section2):
    result = solve_kripke(section2)
    assert result.converged
    assert isinstance(result.play, KripkePlay)
    assert verify_equilibrium(section2, result.play, 1e-3).accepted
    assert set(result.payoffs["Row"]) == {"1", "2", "3"}


def test_kripke_reports_are_keyed_by_player_and_class(section2, section2_eq):
    expected = {(p, b) for p in section2.players for b in section2.partitions[p]}
    result = solve_kripke(section2)
    verdict = verify_equilibrium(section2, section2_eq, 1e-6)
    for report in (result.report, verdict.report):
        for section in (report.per_player_gap, report.payoffs, report.best_values, report.best_responses):
            assert set(section) == expected
        assert report.max_gap == max(report.per_player_gap.values())
    assert verdict.report.per_player_gap[("Column", ("2", "3"))] <= 1e-9


def test_single_world_kripke_pennies_is_uniform():
    game = KripkeGame(
        ("Row", "Column"),
        {"Row": ("h", "t"), "Column": ("h", "t")},
        ("1",),
        {"Row": [["1"]], "Column": [["1"]]},
        {"Row": {"1": MATCHING_PENNIES}, "Column": {"1": -MATCHING_PENNIES}},
    )
    result = solve_kripke(game)
    assert result.converged
    for p in game.players:
        assert result.play[p][("1",)].probabilities == pytest.approx((0.5, 0.5), abs=1e-9)


def test_identical_worlds_trivial_partitions():
    game = KripkeGame(
        ("Row", "Column"),
        {"Row": ("h", "t"), "Column": ("h", "t")},
        ("1", "2"),
        {"Row": [["1", "2"]], "Column": [["1", "2"]]},
        {"Row": {w: MATCHING_PENNIES for w in "12"}, "Column": {w: -MATCHING_PENNIES for w in "12"}},
    )
    result = solve_kripke(game, FAST)
    assert result.converged
    assert result.play["Row"][("1", "2")].probabilities == pytest.approx((0.5, 0.5), abs=1e-6)


def test_solver_is_deterministic_and_worker_independent(rng):
    game = random_min_game(rng, n_players=2, k=2, sizes=(3, 2))
    first = solve_min_game(game, FAST)
    second = solve_min_game(game, FAST)
    threaded = solve_min_game(game, FAST.with_overrides(workers=3))
    for other in (second, threaded):
        assert other.play == first.play
        assert other.report.max_gap == first.report.max_gap
        assert other.iterations_used == first.iterations_used
        assert other.restarts_used == first.restarts_used


def test_non_converged_result_is_truthful(rng):
    game = random_min_game(rng, n_players=3, k=3, sizes=(3, 3, 3))
    cfg = SolveConfig(restarts=1, max_iterations=1, epsilon_target=1e-12, polish_rounds=0, grid_budget=1)
    result = solve_min_game(game, cfg)
    recomputed = gap_report(game, result.play)
    assert result.report.max_gap == recomputed.max_gap
    assert result.converged == (recomputed.max_gap <= cfg.epsilon_target)


def test_invalid_config_rejected():
    with pytest.raises(ConfigError):
        SolveConfig(epsilon_target=0.0).validate()
    with pytest.raises(ConfigError):
        SolveConfig().with_overrides(grid_step=1.5)


# --- brute-force oracle -------------------------------------------------------------


def test_brute_force_remark(remark):
    play, gap = brute_force_gap_min(remark, 0.01)
    assert play["Player"].probabilities == pytest.approx((0.5, 0.5), abs=0.01)
    assert gap <= 0.03


def test_brute_force_pennies():
    play, gap = brute_force_gap_min(pennies_min_game(), 0.1)
    assert gap == pytest.approx(0.0, abs=1e-12)
    assert play["Row"].probabilities == pytest.approx((0.5, 0.5), abs=1e-12)


def test_brute_force_budget_guard(rng):
    game = random_min_game(rng, n_players=3, k=1, sizes=(4, 4, 4))
    with pytest.raises(GridBudgetError):
        brute_force_gap_min(game, 0.01)
