from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Optional

from .config import SolveConfig
from .exceptions import ConfigError

try:
    import tomllib  # Python 3.11+
except Exception:  # pragma: no cover
    tomllib = None  # type: ignore


DEFAULT_SETTINGS_FILE = "epigames.toml"

# TOML key -> SolveConfig field
_SOLVER_KEYS = {
    "max_iterations": "max_iterations",
    "restarts": "restarts",
    "epsilon": "epsilon_target",
    "seed": "seed",
    "grid_step": "grid_step",
    "check_every": "check_every",
    "workers": "workers",
    "polish_rounds": "polish_rounds",
    "grid_budget": "grid_budget",
}


@dataclass
class AppSettings:
    log_level: str = "WARNING"
    solver: SolveConfig = field(default_factory=SolveConfig)


def _load_toml(path: Path) -> Dict[str, Any]:
    if tomllib is None:
        raise ConfigError("tomllib not available; requires Python 3.11+")
    try:
        data = path.read_bytes()
        return tomllib.loads(data.decode("utf-8"))
    except FileNotFoundError:
        return {}
    except Exception as e:
        raise ConfigError(f"Failed to parse TOML config: {path}: {e}") from e


def _coerce(key: str, value: Any, target: type) -> Any:
    if isinstance(value, bool):
        raise ConfigError(f"solver.{key} must be numeric")
    try:
        if target is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"solver.{key} must be {'an integer' if target is int else 'a number'}")


def load_settings(config_path: Optional[str] = None) -> AppSettings:
    """Load settings from TOML.

    Precedence (lowest → highest): defaults → TOML. CLI flags are applied on
    top by the caller. An explicitly named file must exist.
    """
    settings = AppSettings()

    if config_path:
        path = Path(config_path)
        if not path.exists():
            raise ConfigError(f"Config file not found: {path}")
        cfg = _load_toml(path)
    else:
        # Optional default config file if present.
        cfg = _load_toml(Path(DEFAULT_SETTINGS_FILE))

    app = cfg.get("app", {}) if isinstance(cfg, dict) else {}
    solver = cfg.get("solver", {}) if isinstance(cfg, dict) else {}

    if isinstance(app, dict) and app.get("log_level"):
        settings.log_level = str(app["log_level"]).upper()

    if isinstance(solver, dict):
        types = {f.name: f.type for f in fields(SolveConfig)}
        overrides: Dict[str, Any] = {}
        for key, value in solver.items():
            name = _SOLVER_KEYS.get(key)
            if name is None:
                raise ConfigError(f"Unknown solver setting: solver.{key}")
            target = int if types[name] in (int, "int") else float
            overrides[name] = _coerce(key, value, target)
        settings.solver = settings.solver.with_overrides(**overrides)

    return settings
