"""Synthetic stand-ins for a year of hub prices and wind records.

The shapes are loosely modelled on a Midwestern hub: a morning and an
evening price peak whose height grows in summer, and wind that is stronger
at night and in winter. Everything is seeded so tests and demos are
reproducible.
"""
from datetime import date, timedelta

import numpy as np

from .renewable import RenewableModel, scenario_rng

_SHAPE = np.array([0.62, 0.58, 0.56, 0.55, 0.57, 0.63, 0.74, 0.86, 0.92, 0.93, 0.92, 0.90,
                   0.89, 0.90, 0.93, 0.98, 1.05, 1.12, 1.15, 1.10, 1.00, 0.88, 0.76, 0.67])


def year_dates(year=2018):
    d = date(year, 1, 1)
    out = []
    while d.year == year:
        out.append(d.isoformat())
        d += timedelta(days=1)
    return out


def daily_prices(day, month, rng):
    """One 24-hour price curve in $/MWh."""
    season = 1.0 + 0.35 * np.cos(2 * np.pi * (month - 7) / 12)
    level = 28.0 * season * rng.uniform(0.85, 1.15)
    # peakiness varies day to day so both arbitrage and insurance-only days occur
    swing = rng.uniform(0.3, 1.6)
    curve = level * (1.0 + swing * (_SHAPE - 1.0))
    return np.round(curve + rng.normal(0.0, 0.6, 24), 2)


def monthly_wind_model(month, capacity=50.0):
    """Hourly Gaussian wind model for ``month``."""
    h = np.arange(24)
    season = 0.40 + 0.10 * np.cos(2 * np.pi * (month - 1) / 12)
    mu = capacity * season * (1.0 + 0.2 * np.cos(2 * np.pi * (h - 3) / 24))
    sigma = 0.22 * mu + 1.5
    return RenewableModel(mu, sigma, capacity)


def synthetic_year(year=2018, seed=0, capacity=50.0):
    """``(prices, wind)``: ``{date: 24 prices}`` and ``{month: RenewableModel}``."""
    prices = {}
    for d in year_dates(year):
        rng = scenario_rng(seed, int(d.replace("-", "")), 1)
        prices[d] = daily_prices(d, int(d[5:7]), rng)
    wind = {m: monthly_wind_model(m, capacity) for m in range(1, 13)}
    return prices, wind


def wind_records(wind, year=2018, seed=0, days=None):
    """Hourly ``(timestamp, power_mw)`` readings drawn from the monthly models."""
    rows = []
    for d in year_dates(year) if days is None else days:
        model = wind[int(d[5:7])]
        rng = scenario_rng(seed, int(d.replace("-", "")), 2)
        draw = np.clip(model.mu + model.sigma * rng.standard_normal(model.n), 0.0, model.capacity)
        rows.extend((f"{d}T{h:02d}:00:00", round(float(p), 4)) for h, p in enumerate(draw))
    return rows
