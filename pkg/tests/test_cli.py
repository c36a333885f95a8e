from __future__ import annotations

import json
from dataclasses import replace

import pytest

import epigames.cli as cli
from epigames.cli import EXIT_INPUT, EXIT_NOT_CONVERGED, EXIT_OK, EXIT_REJECTED, EXIT_USAGE, main
from epigames.config import SolveConfig
from epigames.equilibrium import solve_min_game
from epigames.exceptions import ConfigError
from epigames.settings import load_settings


@pytest.fixture(autouse=True)
def isolated_cwd(tmp_path, monkeypatch):
    # keeps a stray epigames.toml out of the default settings lookup
    monkeypatch.chdir(tmp_path)
    return tmp_path


def write_example(name: str) -> None:
    assert main(["example", "--name", name, "--out", f"{name}.json", "--play", f"{name}.play.json"]) == EXIT_OK


def json_out(capsys) -> dict:
    return json.loads(capsys.readouterr().out)


def test_example_prints_game_document(capsys):
    assert main(["example", "--name", "section2"]) == EXIT_OK
    obj = json_out(capsys)
    assert obj["kind"] == "kripke"
    assert obj["partitions"]["Column"] == [["1"], ["2", "3"]]


def test_verify_reference_play_is_accepted(capsys):
    write_example("section2")
    capsys.readouterr()
    assert main(["--json", "verify", "--game", "section2.json", "--play", "section2.play.json", "--epsilon", "1e-6"]) == EXIT_OK
    obj = json_out(capsys)
    assert obj["accepted"] is True
    assert obj["report"]["max_gap"] <= 1e-9
    assert obj["report"]["per_player_gap"]["Column"].keys() == {"1", "2,3"}


def test_verify_rejected_play_exits_4(tmp_path, capsys):
    write_example("mingame-sec4")
    play = {"kind": "play", "strategies": {"Row": [1, 0], "Column": [1, 0]}}
    (tmp_path / "bad.json").write_text(json.dumps(play))
    capsys.readouterr()
    assert main(["verify", "--game", "mingame-sec4.json", "--play", "bad.json", "--epsilon", "1e-6"]) == EXIT_REJECTED
    assert "REJECTED" in capsys.readouterr().out


def test_payoff_of_remark_play(capsys):
    write_example("one-player-remark")
    capsys.readouterr()
    assert main(["--json", "payoff", "--game", "one-player-remark.json", "--play", "one-player-remark.play.json"]) == EXIT_OK
    (row,) = json_out(capsys)["payoffs"]
    assert row["player"] == "Player"
    assert row["payoff"] == pytest.approx(1.5, abs=1e-12)


def test_payoff_table_lists_every_world(capsys):
    write_example("section2")
    capsys.readouterr()
    assert main(["payoff", "--game", "section2.json", "--play", "section2.play.json", "--player", "Row"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "Player" in out and "World" in out
    assert len([line for line in out.splitlines() if line.strip().startswith("Row")]) == 3


def test_best_response_pure_and_mixed(tmp_path, capsys):
    write_example("mingame-sec4")
    play = {"kind": "play", "strategies": {"Row": [0.5, 0.5], "Column": [1, 0]}}
    (tmp_path / "p.json").write_text(json.dumps(play))
    capsys.readouterr()

    assert main(["--json", "best-response", "--game", "mingame-sec4.json", "--play", "p.json", "--player", "Row", "--pure"]) == EXIT_OK
    (pure,) = json_out(capsys)["best_responses"]
    assert pure["strategy"] == [0.0, 1.0] and pure["value"] == 0.0

    assert main(["--json", "best-response", "--game", "mingame-sec4.json", "--play", "p.json", "--player", "Row"]) == EXIT_OK
    (mixed,) = json_out(capsys)["best_responses"]
    assert mixed["strategy"] == pytest.approx([0.25, 0.75], abs=1e-12)
    assert mixed["value"] == pytest.approx(0.5, abs=1e-12)


def test_best_response_kripke_reports_each_class(capsys):
    write_example("section2")
    capsys.readouterr()
    args = ["--json", "best-response", "--game", "section2.json", "--play", "section2.play.json", "--player", "Column"]
    assert main(args) == EXIT_OK
    rows = json_out(capsys)["best_responses"]
    assert [r["class"] for r in rows] == ["1", "2,3"]


def test_reduce_to_min_and_finite(isolated_cwd, capsys):
    write_example("section2")
    capsys.readouterr()
    assert main(["reduce", "--game", "section2.json", "--to", "min", "--out", "min.json"]) == EXIT_OK
    assert "Written min game with 4 players" in capsys.readouterr().out
    reduced = json.loads((isolated_cwd / "min.json").read_text(encoding="utf-8"))
    (isolated_cwd / "inner.json").write_text(json.dumps(reduced["game"]), encoding="utf-8")

    assert main(["reduce", "--game", "inner.json", "--to", "finite"]) == EXIT_OK
    obj = json_out(capsys)
    assert obj["to"] == "finite"
    assert len(obj["game"]["players"]) == 8


def test_reduce_kind_mismatch_is_input_error(capsys):
    write_example("one-player-remark")
    capsys.readouterr()
    assert main(["reduce", "--game", "one-player-remark.json", "--to", "min"]) == EXIT_INPUT
    assert capsys.readouterr().err.startswith("error:")


def test_non_utf8_document_is_input_error(isolated_cwd, capsys):
    (isolated_cwd / "bad.json").write_bytes(b'{"kind": "finite", "players": ["\xff"]}')
    assert main(["payoff", "--game", "bad.json", "--play", "bad.json"]) == EXIT_INPUT
    err = capsys.readouterr().err
    assert err.startswith("error:")
    assert "not valid UTF-8" in err


def test_oversized_payoff_is_input_error(isolated_cwd, capsys):
    text = '{"kind": "finite", "players": ["A"], "strategies": {"A": ["x"]}, "payoffs": {"A": [' + "9" * 400 + "]}}"
    (isolated_cwd / "big.json").write_text(text, encoding="utf-8")
    assert main(["payoff", "--game", "big.json", "--play", "big.json"]) == EXIT_INPUT
    assert "number must be finite" in capsys.readouterr().err


def test_solve_remark_writes_result(isolated_cwd, capsys):
    write_example("one-player-remark")
    capsys.readouterr()
    assert main(["solve", "--game", "one-player-remark.json", "--seed", "3", "--out", "result.json"]) == EXIT_OK
    assert "status: converged" in capsys.readouterr().out
    result = json.loads((isolated_cwd / "result.json").read_text(encoding="utf-8"))
    assert result["kind"] == "solve_result" and result["converged"] is True
    assert result["play"]["strategies"]["Player"] == pytest.approx([0.5, 0.5], abs=1e-6)


def test_solve_not_converged_exits_3(monkeypatch, capsys):
    write_example("one-player-remark")

    def give_up(game, config=None):
        return replace(solve_min_game(game, config), converged=False)

    monkeypatch.setattr(cli, "solve_min_game", give_up)
    capsys.readouterr()
    assert main(["solve", "--game", "one-player-remark.json"]) == EXIT_NOT_CONVERGED
    assert "NOT converged" in capsys.readouterr().out


def test_usage_errors_exit_2(capsys):
    assert main([]) == EXIT_USAGE
    assert main(["solve"]) == EXIT_USAGE
    assert main(["example", "--name", "nope"]) == EXIT_USAGE
    capsys.readouterr()


def test_missing_and_malformed_files_exit_1(tmp_path, capsys):
    assert main(["solve", "--game", "missing.json"]) == EXIT_INPUT
    assert "missing.json" in capsys.readouterr().err

    (tmp_path / "broken.json").write_text('{"kind": "finite", "players": [')
    assert main(["solve", "--game", "broken.json"]) == EXIT_INPUT
    assert "broken.json:$" in capsys.readouterr().err


def test_play_kind_mismatch_exit_1(tmp_path, capsys):
    write_example("section2")
    write_example("one-player-remark")
    capsys.readouterr()
    assert main(["verify", "--game", "section2.json", "--play", "one-player-remark.play.json"]) == EXIT_INPUT
    assert "kripke_play" in capsys.readouterr().err


def test_invalid_solver_flag_exit_1(capsys):
    write_example("one-player-remark")
    capsys.readouterr()
    assert main(["solve", "--game", "one-player-remark.json", "--restarts", "0"]) == EXIT_INPUT
    assert "restarts" in capsys.readouterr().err


# --- settings ---------------------------------------------------------------------


def test_settings_defaults_without_file():
    settings = load_settings()
    assert settings.log_level == "WARNING"
    assert settings.solver == SolveConfig()


def test_settings_read_from_default_file(tmp_path):
    (tmp_path / "epigames.toml").write_text('[app]\nlog_level = "debug"\n[solver]\nepsilon = 1e-4\nrestarts = 5\n')
    settings = load_settings()
    assert settings.log_level == "DEBUG"
    assert settings.solver.epsilon_target == 1e-4
    assert settings.solver.restarts == 5


@pytest.mark.parametrize(
    "body",
    [
        "[solver]\nunknown = 1\n",
        "[solver]\nrestarts = 1.5\n",
        "[solver]\nrestarts = true\n",
        "[solver]\nepsilon = -1.0\n",
        "[solver\n",
    ],
)
def test_bad_settings_rejected(tmp_path, body):
    path = tmp_path / "bad.toml"
    path.write_text(body)
    with pytest.raises(ConfigError):
        load_settings(str(path))


def test_explicit_missing_config_exit_1(capsys):
    assert main(["--config", "nope.toml", "example", "--name", "one-player-remark"]) == EXIT_INPUT
    assert "Config file not found" in capsys.readouterr().err


def test_cli_flags_override_settings(tmp_path, capsys):
    (tmp_path / "epigames.toml").write_text("[solver]\nepsilon = 1e-300\nrestarts = 1\n")
    write_example("one-player-remark")
    capsys.readouterr()
    assert main(["--json", "solve", "--game", "one-player-remark.json", "--epsilon", "1e-3", "--restarts", "2"]) == EXIT_OK
    assert json_out(capsys)["converged"] is True
