"""Synthetic price panels with planted correlation-spike regimes.

The generator repeats a four-phase cycle: calm drift, a correlation spike
(returns dominated by one common factor while price levels stay flat), a
crash (strong common negative drift), then a recovery. The spike starts
before the crash, so a forward-looking drawdown label turns positive while
the only visible signals are the dense correlation graph and rising
volatility. This makes the full pipeline testable end to end without any
market data, with a known planted lead structure.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from .errors import DataError
from . import tensor as tz

__all__ = ["RegimeParams", "planted_regime_panel", "write_synthetic_csv", "business_days"]


@dataclass
class RegimeParams:
    """Phase lengths (trading days) and return dynamics per phase."""

    calm_days: int = 95
    spike_days: int = 15
    crash_days: int = 15
    recovery_days: int = 15
    calm_drift: float = 0.0003
    calm_idio_vol: float = 0.010
    spike_common_vol: float = 0.022
    spike_idio_vol: float = 0.005
    crash_drift: float = -0.014
    crash_common_vol: float = 0.010
    crash_idio_vol: float = 0.006
    recovery_drift: float = 0.012
    recovery_idio_vol: float = 0.008

    @property
    def cycle_days(self) -> int:
        return self.calm_days + self.spike_days + self.crash_days + self.recovery_days


def business_days(start: str, count: int) -> list[str]:
    """`count` weekdays starting at the first weekday on/after `start`."""
    day = date.fromisoformat(start)
    out: list[str] = []
    while len(out) < count:
        if day.weekday() < 5:
            out.append(day.isoformat())
        day += timedelta(days=1)
    return out


def planted_regime_panel(n_tickers: int = 20, n_days: int = 600, seed: int = 7,
                         start: str = "2015-01-02",
                         params: RegimeParams | None = None
                         ) -> tuple[list[str], list[str], np.ndarray]:
    """Simulate the panel; returns (dates, tickers, prices N x T)."""
    if n_tickers < 2 or n_days < 10:
        raise DataError("need at least 2 tickers and 10 days of synthetic data")
    params = params or RegimeParams()
    rng = tz.seeded_rng(seed, 424242)
    tickers = [f"SYN{i:02d}" for i in range(n_tickers)]
    dates = business_days(start, n_days)

    log_ret = np.empty((n_tickers, n_days - 1))
    cycle = params.cycle_days
    for t in range(n_days - 1):
        phase_day = t % cycle
        common = rng.standard_normal()
        idio = rng.standard_normal(n_tickers)
        if phase_day < params.calm_days:
            log_ret[:, t] = params.calm_drift + params.calm_idio_vol * idio
        elif phase_day < params.calm_days + params.spike_days:
            log_ret[:, t] = (params.spike_common_vol * common
                             + params.spike_idio_vol * idio)
        elif phase_day < params.calm_days + params.spike_days + params.crash_days:
            log_ret[:, t] = (params.crash_drift + params.crash_common_vol * common
                             + params.crash_idio_vol * idio)
        else:
            log_ret[:, t] = params.recovery_drift + params.recovery_idio_vol * idio

    prices = np.empty((n_tickers, n_days))
    prices[:, 0] = 100.0
    prices[:, 1:] = 100.0 * np.exp(np.cumsum(log_ret, axis=1))
    return dates, tickers, prices


def write_synthetic_csv(path: str, n_tickers: int = 20, n_days: int = 600, seed: int = 7,
                        start: str = "2015-01-02", params: RegimeParams | None = None) -> dict:
    """Generate and write the long-format price CSV; returns a small echo dict."""
    dates, tickers, prices = planted_regime_panel(n_tickers, n_days, seed, start, params)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("date,ticker,adj_close\n")
        for t, day in enumerate(dates):
            for i, ticker in enumerate(tickers):
                fh.write(f"{day},{ticker},{float(prices[i, t])!r}\n")
    return {"path": str(path), "n_tickers": n_tickers, "n_days": n_days, "seed": seed}
