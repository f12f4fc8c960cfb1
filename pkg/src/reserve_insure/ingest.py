"""CSV readers and writers for prices, wind records and study outputs.

Readers validate every row and raise :class:`DataError` with the offending
line number. Writers format floats with ``repr`` so values survive a round
trip exactly and repeated runs produce identical bytes.
"""
import csv
from collections import defaultdict
from datetime import datetime
import math
import warnings

import numpy as np

from .errors import DataError
from .market import MarketPrices
from .renewable import fit_hourly_gaussian

N_HOURS = 24


def fmt(x):
    """Shortest string that parses back to the same float."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _rows(path, required):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = [h.strip() for h in (reader.fieldnames or [])]
        missing = [c for c in required if c not in header]
        if missing:
            raise DataError(f"missing column(s) {missing}; found {header}", line=1, path=str(path))
        reader.fieldnames = header
        for row in reader:
            yield reader.line_num, {k: (v.strip() if isinstance(v, str) else v) for k, v in row.items()}


def _float(text, what, line, path):
    try:
        v = float(text)
    except (TypeError, ValueError):
        raise DataError(f"{what} {text!r} is not a number", line=line, path=str(path)) from None
    if not math.isfinite(v):
        raise DataError(f"{what} is not finite ({text})", line=line, path=str(path))
    return v


def read_prices(path):
    """Daily price curves from ``hour,price_usd_per_mwh[,date]``.

    Returns an ordered dict ``{date: prices}`` with 24-entry arrays; files
    without a ``date`` column hold a single day keyed ``""``.
    """
    days = {}
    for line, row in _rows(path, ("hour", "price_usd_per_mwh")):
        try:
            hour = int(row["hour"])
        except (TypeError, ValueError):
            raise DataError(f"hour {row['hour']!r} is not an integer", line=line, path=str(path)) from None
        if not 0 <= hour < N_HOURS:
            raise DataError(f"hour {hour} outside 0-23", line=line, path=str(path))
        price = _float(row["price_usd_per_mwh"], "price", line, path)
        day = days.setdefault(row.get("date") or "", {})
        if hour in day:
            raise DataError(f"duplicate hour {hour} for day {row.get('date') or '(single)'}", line=line,
                            path=str(path))
        day[hour] = price
    if not days:
        raise DataError("no price rows", path=str(path))
    out = {}
    for date, hours in days.items():
        gaps = [h for h in range(N_HOURS) if h not in hours]
        if gaps:
            label = f" on {date}" if date else ""
            raise DataError(f"missing hour(s) {gaps}{label}", path=str(path))
        out[date] = np.array([hours[h] for h in range(N_HOURS)])
    return out


def load_prices(path, penalty=None, ratio=None):
    """Read a price file and attach the penalty, given absolutely or as ``max(lam) / lambda_p``."""
    if (penalty is None) == (ratio is None):
        raise ValueError("give exactly one of penalty or ratio")
    curves = read_prices(path)
    make = (lambda lam: MarketPrices(lam, penalty)) if ratio is None else (
        lambda lam: MarketPrices.from_ratio(lam, ratio))
    return {d: make(lam) for d, lam in curves.items()}


def read_wind(path):
    """Wind records ``timestamp,power_mw`` grouped by ``(month, hour)``.

    Negative readings are dropped with a single ``RuntimeWarning`` giving
    their count. Returns ``(groups, rejected)``.
    """
    groups = defaultdict(list)
    rejected = 0
    for line, row in _rows(path, ("timestamp", "power_mw")):
        try:
            ts = datetime.fromisoformat(row["timestamp"])
        except (TypeError, ValueError):
            raise DataError(f"timestamp {row['timestamp']!r} is not ISO 8601", line=line, path=str(path)) from None
        p = _float(row["power_mw"], "power", line, path)
        if p < 0:
            rejected += 1
            continue
        groups[(ts.month, ts.hour)].append(p)
    if rejected:
        warnings.warn(f"{rejected} negative wind reading(s) rejected", RuntimeWarning, stacklevel=2)
    return dict(groups), rejected


def fit_wind(path, capacity=None):
    """Per-month hourly Gaussian models, ``{month: RenewableModel}``."""
    groups, _ = read_wind(path)
    if not groups:
        raise DataError("no usable wind rows", path=str(path))
    top = max(max(v) for v in groups.values())
    cap = top if capacity is None else float(capacity)
    models = {}
    for month in sorted({m for m, _ in groups}):
        gaps = [h for h in range(N_HOURS) if (month, h) not in groups]
        if gaps:
            raise DataError(f"month {month} has no readings for hour(s) {gaps}", path=str(path))
        try:
            models[month] = fit_hourly_gaussian([groups[(month, h)] for h in range(N_HOURS)], cap)
        except DataError as e:
            raise DataError(f"month {month}: {e}", path=str(path)) from None
    return models


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def read_csv(path):
    """Header and rows as strings; the inverse of :func:`write_csv`."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError("empty file", path=str(path))
    return rows[0], rows[1:]


def write_lmp(path, buses, lmp):
    """``bus,slot,price`` rows from an ``(N, B)`` price array."""
    lmp = np.asarray(lmp)
    write_csv(path, ("bus", "slot", "price"),
              ((b, k, lmp[k, j]) for j, b in enumerate(buses) for k in range(lmp.shape[0])))


def read_lmp(path):
    header, rows = read_csv(path)
    if header != ["bus", "slot", "price"]:
        raise DataError(f"unexpected header {header}", line=1, path=str(path))
    buses = sorted({int(r[0]) for r in rows})
    n = max(int(r[1]) for r in rows) + 1
    out = np.full((n, len(buses)), np.nan)
    col = {b: j for j, b in enumerate(buses)}
    for r in rows:
        out[int(r[1]), col[int(r[0])]] = float(r[2])
    return buses, out


def write_matrix(path, buses, grid):
    """Feasibility grid; first column is the wind bus, header lists storage buses."""
    write_csv(path, ["wind_bus"] + [str(b) for b in buses],
              ([b] + [int(v) for v in row] for b, row in zip(buses, np.asarray(grid))))


def read_matrix(path):
    header, rows = read_csv(path)
    buses = [int(b) for b in header[1:]]
    grid = np.array([[int(v) for v in r[1:]] for r in rows], dtype=bool)
    return buses, grid
