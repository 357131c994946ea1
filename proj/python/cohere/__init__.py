"""Coherent probabilistic reconciliation of hierarchical forecasts."""

from ._core import (
    ForecastStore,
    FormatError,
    Hierarchy,
    energy_score,
    evaluate,
    load_panel,
    ols_reconcile,
    oos_r2,
    reconcile,
    simulate,
)

__all__ = [
    "ForecastStore",
    "FormatError",
    "Hierarchy",
    "energy_score",
    "evaluate",
    "load_panel",
    "ols_reconcile",
    "oos_r2",
    "reconcile",
    "simulate",
]
