"""Volatility forecast accuracy against squared observations."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .filtering import run_filter
from .model import ModelSpec

__all__ = ["EvalReport", "Comparison", "forecast_errors", "compare_models"]

CGARCH = "MS-CGARCH"
GARCH = "MS-GARCH"


@dataclass(frozen=True, eq=False)
class EvalReport:
    model_name: str
    rmse: float
    mae: float
    n: int
    per_t_abs_error: np.ndarray

    def to_dict(self) -> dict:
        return {"model": self.model_name, "rmse": self.rmse, "mae": self.mae, "n": self.n}


def forecast_errors(var_forecast, y, model_name: str = "") -> EvalReport:
    """RMSE and MAE of ``var_forecast[t] - y[t]**2``.

    ``var_forecast[t]`` must be the forecast of ``y[t]`` made before seeing it.
    """
    f = np.asarray(var_forecast, dtype=float)
    y = np.asarray(y, dtype=float)
    if f.shape != y.shape or f.ndim != 1:
        raise DataError(f"forecast and observation lengths differ: {f.shape} vs {y.shape}")
    if f.size == 0:
        raise DataError("nothing to evaluate")
    e = f - y * y
    abs_e = np.abs(e)
    abs_e.setflags(write=False)
    return EvalReport(
        model_name, math.sqrt(float(np.mean(e * e))), float(abs_e.mean()), int(f.size), abs_e
    )


@dataclass(frozen=True, eq=False)
class Comparison:
    """Reports and forecasts in argument order: (MS-CGARCH, MS-GARCH)."""

    reports: tuple[EvalReport, EvalReport]
    forecasts: tuple[np.ndarray, np.ndarray]
    start: int

    @property
    def cgarch(self) -> EvalReport:
        return self.reports[0]

    @property
    def garch(self) -> EvalReport:
        return self.reports[1]

    @property
    def winner(self) -> dict:
        a, b = self.reports
        return {
            "rmse": a.model_name if a.rmse < b.rmse else b.model_name,
            "mae": a.model_name if a.mae < b.mae else b.model_name,
        }

    def table(self) -> list[list]:
        """Header plus one row per metric, baseline column first."""
        g, c = self.garch, self.cgarch
        return [
            ["metric", g.model_name, c.model_name],
            ["RMSE", g.rmse, c.rmse],
            ["MAE", g.mae, c.mae],
        ]

    def to_dict(self) -> dict:
        return {
            "models": [r.model_name for r in self.reports],
            "RMSE": {r.model_name: r.rmse for r in self.reports},
            "MAE": {r.model_name: r.mae for r in self.reports},
            "n": self.reports[0].n,
            "start": self.start,
            "winner": self.winner,
        }


def compare_models(
    y,
    spec_cgarch: ModelSpec,
    spec_garch: ModelSpec,
    start: int = 0,
    H_init: float | None = None,
    names: tuple[str, str] = (CGARCH, GARCH),
) -> Comparison:
    """Filter ``y`` under both specs and score forecasts of ``y[start:]``.

    ``start > 0`` gives a hold-out evaluation when the specs were estimated
    on ``y[:start]``.
    """
    y = np.asarray(y, dtype=float)
    if not 0 <= start < y.size:
        raise DataError(f"evaluation start {start} outside a series of length {y.size}")
    if H_init is None:
        # the variance scale available at the forecast origin
        H_init = float(np.var(y[:start])) if start >= 2 else None
    reports, forecasts = [], []
    for name, spec in zip(names, (spec_cgarch, spec_garch)):
        f = run_filter(spec, y, H_init).var_forecast
        forecasts.append(f)
        reports.append(forecast_errors(f[start:], y[start:], name))
    return Comparison(tuple(reports), tuple(forecasts), start)
