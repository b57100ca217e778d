"""Comparing time series: growth-rate fits and deviation reports."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["fit_growth_rate", "ComparisonReport", "compare_runs", "resample"]


def _window_mask(t, window):
    t = np.asarray(t, dtype=float)
    if window is None:
        return np.ones(t.shape, dtype=bool)
    lo, hi = window
    return (t >= lo) & (t <= hi)


def fit_growth_rate(t, y, window=None) -> float:
    """Least-squares slope of log(y) against t inside ``window`` (1/ms).

    For a population |phi|^2 this is twice the amplitude growth rate.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    m = _window_mask(t, window) & (y > 0)
    if m.sum() < 2:
        raise ValueError("need at least two positive samples inside the fit window")
    slope, _ = np.polyfit(t[m], np.log(y[m]), 1)
    return float(slope)


def resample(t_src, y_src, t_dst):
    """Linear interpolation onto ``t_dst`` (no extrapolation)."""
    t_src = np.asarray(t_src, dtype=float)
    t_dst = np.asarray(t_dst, dtype=float)
    if t_dst.size and (t_dst.min() < t_src.min() - 1e-12 or t_dst.max() > t_src.max() + 1e-12):
        raise ValueError("target times fall outside the source series")
    return np.interp(t_dst, t_src, np.asarray(y_src, dtype=float))


@dataclass(frozen=True)
class ComparisonReport:
    observable: str
    window: tuple
    n_points: int
    max_relative_deviation: float
    mean_relative_deviation: float
    growth_rate_a: float
    growth_rate_b: float

    @property
    def growth_rate_ratio(self) -> float:
        return self.growth_rate_b / self.growth_rate_a if self.growth_rate_a != 0 else float("nan")

    def as_dict(self) -> dict:
        return {"observable": self.observable, "t_start": self.window[0], "t_stop": self.window[1],
                "n_points": self.n_points, "max_relative_deviation": self.max_relative_deviation,
                "mean_relative_deviation": self.mean_relative_deviation,
                "growth_rate_a": self.growth_rate_a, "growth_rate_b": self.growth_rate_b}


def compare_runs(series_a: dict, series_b: dict, observable: str, window=None) -> ComparisonReport:
    """Relative deviation of ``b`` from ``a`` and both fitted growth rates.

    ``b`` is interpolated onto the times of ``a`` when the grids differ.
    Deviations are |b - a| / |a| on the samples of ``a`` inside the window.
    """
    ta = np.asarray(series_a["t"], dtype=float)
    tb = np.asarray(series_b["t"], dtype=float)
    ya = np.asarray(series_a[observable], dtype=float)
    yb = np.asarray(series_b[observable], dtype=float)
    lo = max(ta.min(), tb.min())
    hi = min(ta.max(), tb.max())
    if window is not None:
        lo, hi = max(lo, window[0]), min(hi, window[1])
    m = (ta >= lo) & (ta <= hi)
    if hi < lo or m.sum() == 0:
        raise ValueError("the two series share no samples inside the window")
    t = ta[m]
    a = ya[m]
    if tb.shape == ta.shape and np.array_equal(tb, ta):
        b = yb[m]
    else:
        b = resample(tb, yb, t)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.abs(b - a) / np.abs(a)
    rel = np.where((a == 0) & (b == 0), 0.0, rel)
    if m.sum() >= 2:
        ga = fit_growth_rate(t, a)
        gb = fit_growth_rate(t, b)
    else:
        ga = gb = float("nan")
    return ComparisonReport(observable=observable, window=(float(lo), float(hi)), n_points=int(m.sum()),
                            max_relative_deviation=float(np.max(rel)),
                            mean_relative_deviation=float(np.mean(rel)),
                            growth_rate_a=ga, growth_rate_b=gb)
