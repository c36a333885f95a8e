from __future__ import annotations

from typing import Any, Dict, Iterable, List, Sequence

import pandas as pd


PAYOFF_COLUMNS: List[str] = [
    "Player",
    "World",
    "Payoff",
    "Minimizers",
]

GAP_COLUMNS: List[str] = [
    "Player",
    "Class",
    "Payoff",
    "BestValue",
    "Gap",
    "BestResponse",
]

BEST_RESPONSE_COLUMNS: List[str] = [
    "Player",
    "Class",
    "Value",
    "Strategy",
]


def ensure_columns(df: pd.DataFrame, columns: Iterable[str]) -> None:
    """Ensure DataFrame has the given columns (in-place add if missing)."""
    for c in columns:
        if c not in df.columns:
            df[c] = None


def ordered_df(df: pd.DataFrame, columns: List[str]) -> pd.DataFrame:
    ensure_columns(df, columns)
    return df.loc[:, columns]


def table(rows: Sequence[Dict[str, Any]], columns: List[str]) -> pd.DataFrame:
    return ordered_df(pd.DataFrame(list(rows)), columns)


def format_probabilities(probabilities: Sequence[float]) -> str:
    return "(" + ", ".join(f"{p:.6g}" for p in probabilities) + ")"


def render(df: pd.DataFrame) -> str:
    if df.empty:
        return "(no rows)"
    return df.to_string(index=False, float_format=lambda v: f"{v:.10g}")
