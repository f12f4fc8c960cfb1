"""Monte Carlo study of the insurance contract over a calendar of daily prices.

Each day the storage runs the single-cycle arbitrage schedule, signs the
standard contract (its whole charge reserved at the discharge slot, priced
at that slot's day-ahead price), and the renewable producer bids optimally
with and without the reserve. Production scenarios are drawn per day from
the month's hourly Gaussian model and both players are settled ex post.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import os
import warnings

import numpy as np

from . import renewable as rn
from .contract import INSURANCE_ONLY, optimal_bid, profitability_classify, standard_contract
from .errors import DataError
from .ingest import write_csv
from .market import Contract, MarketPrices, settle_realized, storage_expected_profit
from .storage import StorageParams, single_cycle_policy

THREADS_ENV = "RESERVE_INSURE_THREADS"

METRICS = (
    "days",
    "baseline_mean", "baseline_min", "baseline_max",
    "contract_mean", "contract_min", "contract_max",
    "contract_expected",
    "insurance_only_days",
    "delivered_baseline", "delivered_contract",
    "share_baseline_pct", "share_contract_pct", "share_delta_pp",
)


def _month(date):
    return int(date[5:7])


def _day_key(date):
    return int(date.replace("-", ""))


@dataclass
class StudyConfig:
    """Inputs of a calendar study.

    Parameters
    ----------
    prices : dict
        ``{"YYYY-MM-DD": 24 prices}``.
    wind : dict
        ``{month: RenewableModel}``.
    params : StorageParams
    n_scenarios : int
    seed : int
    penalty_ratio : float, optional
        ``max(lam) / lambda_p`` per day; used when ``penalty`` is not given.
    penalty : float, optional
        Absolute shortfall penalty in $/MWh.
    peak_residual_mw : float
        Energy supplied by other sources at the peak slot; the renewable
        share there is ``delivered / (delivered + peak_residual_mw)``.
    months : list of int, optional
        Months to report; defaults to those present in ``prices``.
    clip : bool
        Clip sampled production to ``[0, capacity]``.
    """

    prices: dict
    wind: dict
    params: StorageParams = field(default_factory=lambda: StorageParams(e_max=12.0, cost_coeff=7.0))
    n_scenarios: int = 1000
    seed: int = 0
    penalty_ratio: float = 0.4
    penalty: float = None
    peak_residual_mw: float = 100.0
    months: list = None
    clip: bool = True

    def __post_init__(self):
        if int(self.n_scenarios) < 1:
            raise ValueError(f"n_scenarios must be at least 1, got {self.n_scenarios}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned value")
        if self.peak_residual_mw < 0:
            raise ValueError("peak residual must be nonnegative")

    def market(self, date):
        lam = np.asarray(self.prices[date], dtype=float)
        if self.penalty is not None:
            return MarketPrices(lam, self.penalty)
        return MarketPrices.from_ratio(lam, self.penalty_ratio)

    def selected_months(self):
        have = sorted({_month(d) for d in self.prices})
        return have if self.months is None else sorted(self.months)

    def days_in(self, month):
        return sorted(d for d in self.prices if _month(d) == month)

    def check_complete(self):
        """Raise :class:`DataError` listing months without prices or a wind model."""
        gaps = []
        for m in self.selected_months():
            if not self.days_in(m):
                gaps.append(f"month {m}: no price days")
            if m not in self.wind:
                gaps.append(f"month {m}: no wind model")
        if gaps:
            raise DataError("incomplete study data: " + "; ".join(gaps))


@dataclass(frozen=True)
class DayResult:
    date: str
    baseline: np.ndarray
    contract: np.ndarray
    contract_expected: float
    label: str
    peak_slot: int
    reserve: float
    delivered_baseline: float
    delivered_contract: float
    commitment_baseline: float


@dataclass(frozen=True)
class MonthRecord:
    month: int
    days: int
    baseline_mean: float
    baseline_min: float
    baseline_max: float
    contract_mean: float
    contract_min: float
    contract_max: float
    contract_expected: float
    insurance_only_days: int
    delivered_baseline: float
    delivered_contract: float
    share_baseline_pct: float
    share_contract_pct: float
    share_delta_pp: float


@dataclass(frozen=True)
class StudyReport:
    months: tuple
    days: tuple

    def record(self, month):
        for r in self.months:
            if r.month == month:
                return r
        raise KeyError(month)

    def rows(self):
        """``(month, metric, value)`` triples in a fixed order."""
        for r in self.months:
            for name in METRICS:
                yield r.month, name, getattr(r, name)

    def write_csv(self, path):
        write_csv(path, ("month", "metric", "value"), self.rows())


def _share(delivered, residual):
    total = delivered + residual
    return 100.0 * delivered / total if total > 0 else 0.0


def evaluate_day(config, date):
    """Settle one day's scenarios under the baseline and the standard contract."""
    prices = config.market(date)
    model = config.wind[_month(date)]
    params = config.params
    policy = single_cycle_policy(prices, params)
    contract = standard_contract(prices, model, params)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        bid_base = optimal_bid(prices, model)
        bid_contract = optimal_bid(prices, model, contract.g)

    rng = rn.scenario_rng(config.seed, _day_key(date))
    production = rn.sample_scenarios(model, rng, config.n_scenarios, clip=config.clip)
    empty = Contract.none(prices.n)
    base = settle_realized(production, bid_base, empty, policy, prices, params).storage.net
    signed = settle_realized(production, bid_contract, contract, policy, prices, params).storage.net
    expected = storage_expected_profit(policy, prices, params, contract, model, bid_contract)

    label = profitability_classify(prices, model, params).label
    peak = int(np.argmax(prices.lam))
    d_base = float(rn.expected_delivery(model, peak, bid_base[peak]))
    d_contract = float(rn.expected_delivery(model, peak, bid_contract[peak]))
    return DayResult(date, np.broadcast_to(base, (config.n_scenarios,)).astype(float),
                     np.asarray(signed, dtype=float), expected, label, peak,
                     float(contract.g[peak]), d_base, d_contract, float(bid_base[peak]))


def _threads():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, os.cpu_count() or 1)))
    except ValueError:
        return 1


def _evaluate_all(config, dates, threads=None):
    workers = threads or _threads()
    if workers > 1 and len(dates) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda d: evaluate_day(config, d), dates))
    return [evaluate_day(config, d) for d in dates]


def run_profit_study(config, threads=None):
    """Per-month profit statistics, insurance-only day counts and peak renewable share.

    Profit mean, min and max run over every (day, scenario) pair of the
    month. Results do not depend on the number of worker threads.
    """
    config.check_complete()
    months = config.selected_months()
    dates = [d for m in months for d in config.days_in(m)]
    results = _evaluate_all(config, dates, threads)
    by_date = dict(zip(dates, results))
    records = []
    for m in months:
        days = [by_date[d] for d in config.days_in(m)]
        base = np.concatenate([d.baseline for d in days])
        signed = np.concatenate([d.contract for d in days])
        db = float(np.mean([d.delivered_baseline for d in days]))
        dc = float(np.mean([d.delivered_contract for d in days]))
        sb = float(np.mean([_share(d.delivered_baseline, config.peak_residual_mw) for d in days]))
        sc = float(np.mean([_share(d.delivered_contract, config.peak_residual_mw) for d in days]))
        records.append(MonthRecord(
            month=m, days=len(days),
            baseline_mean=float(base.mean()), baseline_min=float(base.min()), baseline_max=float(base.max()),
            contract_mean=float(signed.mean()), contract_min=float(signed.min()),
            contract_max=float(signed.max()),
            contract_expected=float(np.mean([d.contract_expected for d in days])),
            insurance_only_days=sum(d.label == INSURANCE_ONLY for d in days),
            delivered_baseline=db, delivered_contract=dc,
            share_baseline_pct=sb, share_contract_pct=sc, share_delta_pp=sc - sb,
        ))
    return StudyReport(tuple(records), tuple(results))


def classify_days(config):
    """``{date: label}`` from the profitability classification at ``pi = lam_max``."""
    out = {}
    for m in config.selected_months():
        if m not in config.wind:
            raise DataError(f"month {m}: no wind model")
        for d in config.days_in(m):
            out[d] = profitability_classify(config.market(d), config.wind[m], config.params).label
    return out


def profitability_calendar(config):
    """Number of insurance-only days per month."""
    labels = classify_days(config)
    return {m: sum(labels[d] == INSURANCE_ONLY for d in config.days_in(m)) for m in config.selected_months()}


def peak_share_delta(config):
    """Per-month increase of the renewable share at the peak slot, in percentage points.

    Closed form only: the expected delivery ``E[min(R, C)] = C - E[(C - R)+]``
    is evaluated for the baseline bid and the bid with the reserve.
    """
    config.check_complete()
    out = {}
    for m in config.selected_months():
        deltas = []
        for d in config.days_in(m):
            prices = config.market(d)
            model = config.wind[m]
            contract = standard_contract(prices, model, config.params)
            peak = int(np.argmax(prices.lam))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                cb = optimal_bid(prices, model)[peak]
                cc = optimal_bid(prices, model, contract.g)[peak]
            db = float(rn.expected_delivery(model, peak, cb))
            dc = float(rn.expected_delivery(model, peak, cc))
            deltas.append(_share(dc, config.peak_residual_mw) - _share(db, config.peak_residual_mw))
        out[m] = float(np.mean(deltas))
    return out


def write_svg(report, path):
    """Bar chart of monthly mean profits and the peak share increase."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    months = [r.month for r in report.months]
    x = np.arange(len(months))
    with matplotlib.rc_context({"svg.hashsalt": "reserve-insure", "svg.fonttype": "none"}):
        fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
        ax1.bar(x - 0.2, [r.baseline_mean for r in report.months], 0.4, color="tab:red", label="baseline")
        ax1.bar(x + 0.2, [r.contract_mean for r in report.months], 0.4, color="tab:blue", label="contract")
        ax1.set_ylabel("storage profit ($/day)")
        ax1.legend()
        ax2.bar(x, [r.share_delta_pp for r in report.months], 0.6, color="tab:green")
        ax2.set_ylabel("peak share increase (pp)")
        ax2.set_xticks(x, [str(m) for m in months])
        ax2.set_xlabel("month")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


__all__ = [
    "StudyConfig", "StudyReport", "MonthRecord", "DayResult", "METRICS",
    "run_profit_study", "evaluate_day", "classify_days", "profitability_calendar",
    "peak_share_delta", "write_svg",
]
