from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any

from .exceptions import ConfigError


SOLVER_METHODS = (
    "fictitious-play",
    "gap-grid-polish",
    "exact-zero-sum",
)


@dataclass(frozen=True)
class SolveConfig:
    max_iterations: int = 20000
    restarts: int = 32
    epsilon_target: float = 1e-6
    seed: int = 0
    grid_step: float = 0.05
    check_every: int = 250
    workers: int = 1
    polish_rounds: int = 200
    # Upper bound on fallback grid points; the step is coarsened to fit.
    grid_budget: int = 20000

    def validate(self) -> "SolveConfig":
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be a positive integer")
        if self.restarts < 1:
            raise ConfigError("restarts must be a positive integer")
        if not self.epsilon_target > 0:
            raise ConfigError("epsilon_target must be > 0")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if not 0 < self.grid_step <= 1:
            raise ConfigError("grid_step must lie in (0, 1]")
        if self.check_every < 1:
            raise ConfigError("check_every must be a positive integer")
        if self.workers < 1:
            raise ConfigError("workers must be a positive integer")
        if self.polish_rounds < 0:
            raise ConfigError("polish_rounds must be >= 0")
        if self.grid_budget < 1:
            raise ConfigError("grid_budget must be a positive integer")
        return self

    def with_overrides(self, **overrides: Any) -> "SolveConfig":
        """Return a copy with the non-None overrides applied (CLI flags)."""
        values = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **values).validate()
