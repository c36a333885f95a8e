from __future__ import annotations

from typing import Iterable, List


class EpigamesError(Exception):
    """Base exception for epigames."""


class ConfigError(EpigamesError):
    pass


class GameValidationError(EpigamesError):
    """A game failed its structural invariants.

    `violations` holds the individual messages produced by `games.validate`.
    """

    def __init__(self, violations: Iterable[str]):
        self.violations: List[str] = list(violations)
        super().__init__("; ".join(self.violations) or "invalid game")


class ShapeError(EpigamesError):
    pass


class ProbabilityError(EpigamesError):
    pass


class ReductionError(EpigamesError):
    pass


class LPError(EpigamesError):
    pass


class GridBudgetError(EpigamesError):
    pass


class DocumentError(EpigamesError):
    """Rejected input document; `path` locates the offending element (e.g. `$.payoffs.Row[1]`)."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")
