"""Command-line front end: ``reserve-insure <subcommand> [--config FILE] [flags]``.

A JSON config supplies inputs; flags override it. Relative paths inside the
config resolve against the config file's directory. Every subcommand writes
CSV files to ``--out`` and prints a JSON summary on stdout. Failures print a
JSON object with ``error`` and ``message`` on stderr and exit nonzero.
"""
import argparse
import json
from pathlib import Path
import sys
import warnings

import numpy as np

from .contract import (feasibility_interval, optimal_bid, profitability_classify, standard_contract,
                       two_way_analysis, two_way_closed_form)
from .errors import ConsistencyError, DataError, LPInfeasibleError, LPUnboundedError, NumericError
from .ingest import fit_wind, load_prices, write_csv, write_lmp, write_matrix
from .lab import StudyConfig, classify_days, run_profit_study, write_svg
from .market import MarketPrices
from .network import feasibility_matrix, load_case, multi_period_dispatch
from .renewable import RenewableModel
from .storage import StorageParams
from .synthetic import synthetic_year

SUBCOMMANDS = ("fit", "bid", "contract", "classify", "simulate", "twoway", "network", "matrix")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="reserve-insure", description="Renewable/storage insurance contract toolkit.")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int, help="unsigned 64-bit seed")
    p.add_argument("--scenarios", type=int, help="Monte Carlo scenarios per day")
    p.add_argument("--out", help="output directory")
    p.add_argument("--svg", action="store_true", default=None, help="also write SVG charts")
    return p


class RunConfig:
    """Merged config file and flags, with paths resolved."""

    def __init__(self, subcommand, data, base):
        self.subcommand = subcommand
        self.data = data
        self.base = base
        seed = int(data.get("seed", 0))
        if not 0 <= seed < 2 ** 64:
            raise UsageError(f"seed {seed} is not an unsigned 64-bit value")
        self.seed = seed
        self.n_scenarios = int(data.get("n_scenarios", 1000))
        if self.n_scenarios < 1:
            raise UsageError("--scenarios must be at least 1")
        self.out = Path(data.get("out", "."))
        self.svg = bool(data.get("svg", False))

    @classmethod
    def from_args(cls, args):
        data, base = {}, Path.cwd()
        if args.config:
            path = Path(args.config)
            if not path.is_file():
                raise UsageError(f"config file {path} does not exist")
            try:
                data = json.loads(path.read_text())
            except json.JSONDecodeError as e:
                raise DataError(f"invalid JSON: {e.msg}", line=e.lineno, path=str(path)) from None
            if not isinstance(data, dict):
                raise DataError("config must be a JSON object", path=str(path))
            base = path.parent
        for key, flag in (("seed", args.seed), ("n_scenarios", args.scenarios), ("out", args.out),
                          ("svg", args.svg)):
            if flag is not None:
                data[key] = flag
        if "out" in data and args.out is None:
            data["out"] = str(base / data["out"])
        return cls(args.subcommand, data, base)

    def path(self, key):
        value = self.data.get(key)
        if not isinstance(value, str):
            return None
        p = Path(value)
        if not p.is_absolute():
            p = self.base / p
        if not p.exists():
            raise UsageError(f"{key} path {p} does not exist")
        return p

    def get(self, key, default=None):
        return self.data.get(key, default)

    def storage(self):
        d = dict(self.get("storage", {"e_max": 12.0, "cost_coeff": 7.0}))
        return StorageParams(**d)

    def penalty(self):
        value = self.get("penalty", {"ratio": 0.4})
        if isinstance(value, (int, float)):
            return {"penalty": float(value)}
        if "absolute" in value:
            return {"penalty": float(value["absolute"])}
        return {"ratio": float(value.get("ratio", 0.4))}

    def markets(self):
        """``{date: MarketPrices}`` from a CSV path or an inline price list."""
        pen = self.penalty()
        raw = self.get("prices")
        if isinstance(raw, list):
            lam = np.asarray(raw, dtype=float)
            if "penalty" in pen:
                return {"": MarketPrices(lam, pen["penalty"])}
            return {"": MarketPrices.from_ratio(lam, pen["ratio"])}
        path = self.path("prices")
        if path is None:
            raise UsageError("config needs 'prices' (CSV path or list)")
        return load_prices(path, **pen)

    def models(self):
        """``{month: RenewableModel}`` from inline model(s), a fit JSON, or a wind CSV."""
        raw = self.get("model")
        if isinstance(raw, dict):
            if "mu" in raw:
                return {0: RenewableModel.from_dict(raw)}
            return {int(m): RenewableModel.from_dict(v) for m, v in raw.items()}
        path = self.path("model")
        if path is not None:
            with open(path) as fh:
                return {int(m): RenewableModel.from_dict(v) for m, v in json.load(fh).items()}
        wind = self.path("wind")
        if wind is not None:
            return fit_wind(wind, self.get("capacity"))
        raise UsageError("config needs 'model' (inline or JSON path) or 'wind' (CSV path)")

    def model_for(self, models, date):
        if 0 in models:
            return models[0]
        month = int(date[5:7]) if date else self.get("month")
        if month is None:
            raise UsageError("undated prices need 'month' to select a wind model")
        if int(month) not in models:
            raise DataError(f"no wind model for month {month}")
        return models[int(month)]


def _ensure_out(cfg):
    cfg.out.mkdir(parents=True, exist_ok=True)
    return cfg.out


def cmd_fit(cfg):
    wind = cfg.path("wind")
    if wind is None:
        raise UsageError("fit needs 'wind' (CSV path)")
    models = fit_wind(wind, cfg.get("capacity"))
    out = _ensure_out(cfg)
    with open(out / "model.json", "w") as fh:
        json.dump({str(m): v.to_dict() for m, v in models.items()}, fh, indent=1, sort_keys=True)
        fh.write("\n")
    write_csv(out / "model.csv", ("month", "hour", "mu", "sigma", "capacity"),
              ((m, k, v.mu[k], v.sigma[k], v.capacity) for m, v in models.items() for k in range(v.n)))
    return {"months": sorted(models), "files": ["model.json", "model.csv"]}


def cmd_bid(cfg):
    markets, models = cfg.markets(), cfg.models()
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for date, prices in markets.items():
            model = cfg.model_for(models, date)
            bid = optimal_bid(prices, model)
            rows.extend((date, k, prices.lam[k], prices.lambda_p, bid[k]) for k in range(prices.n))
    write_csv(_ensure_out(cfg) / "bids.csv", ("date", "hour", "price", "penalty", "commitment"), rows)
    return {"days": len(markets), "files": ["bids.csv"]}


def cmd_contract(cfg):
    markets, models, params = cfg.markets(), cfg.models(), cfg.storage()
    rows, summary = [], []
    for date, prices in markets.items():
        model = cfg.model_for(models, date)
        iv = feasibility_interval(prices, model, params)
        std = standard_contract(prices, model, params)
        rows.append((date, iv.charge_slot, iv.slot, iv.reserve, iv.commitment, iv.floor, iv.cap,
                     std.pi[iv.slot]))
        summary.append({"date": date, "slot": iv.slot, "floor": iv.floor, "cap": iv.cap,
                        "reserve": iv.reserve, "standard_price": float(std.pi[iv.slot])})
    write_csv(_ensure_out(cfg) / "contract.csv",
              ("date", "charge_slot", "slot", "reserve", "commitment", "floor", "cap", "standard_price"), rows)
    return {"contracts": summary, "files": ["contract.csv"]}


def cmd_classify(cfg):
    markets, models, params = cfg.markets(), cfg.models(), cfg.storage()
    rows, counts = [], {}
    for date, prices in markets.items():
        b = profitability_classify(prices, cfg.model_for(models, date), params)
        rows.append((date, b.ratio, b.lambda_lower_bar, b.lambda_upper_bar, b.label))
        counts[b.label] = counts.get(b.label, 0) + 1
    write_csv(_ensure_out(cfg) / "classify.csv", ("date", "ratio", "lower", "upper", "label"), rows)
    return {"counts": dict(sorted(counts.items())), "files": ["classify.csv"]}


def _study_config(cfg):
    synth = cfg.get("synthetic")
    params = cfg.storage()
    pen = cfg.penalty()
    common = dict(params=params, n_scenarios=cfg.n_scenarios, seed=cfg.seed,
                  peak_residual_mw=float(cfg.get("peak_residual_mw", 100.0)), months=cfg.get("months"),
                  clip=bool(cfg.get("clip", True)))
    if "penalty" in pen:
        common["penalty"] = pen["penalty"]
    else:
        common["penalty_ratio"] = pen["ratio"]
    if synth is not None:
        synth = synth if isinstance(synth, dict) else {}
        prices, wind = synthetic_year(int(synth.get("year", 2018)), int(synth.get("seed", 0)),
                                      float(synth.get("capacity", 50.0)))
        return StudyConfig(prices, wind, **common)
    markets = cfg.markets()
    if "" in markets:
        raise DataError("simulate needs a dated price file")
    return StudyConfig({d: m.lam for d, m in markets.items()}, cfg.models(), **common)


def cmd_simulate(cfg):
    study = _study_config(cfg)
    report = run_profit_study(study)
    out = _ensure_out(cfg)
    report.write_csv(out / "report.csv")
    labels = classify_days(study)
    write_csv(out / "calendar.csv", ("date", "label"), sorted(labels.items()))
    files = ["report.csv", "calendar.csv"]
    if cfg.svg:
        write_svg(report, out / "report.svg")
        files.append("report.svg")
    return {"months": [r.month for r in report.months], "files": files}


def cmd_twoway(cfg):
    markets, models, params = cfg.markets(), cfg.models(), cfg.storage()
    points = int(cfg.get("pi_e_points", 11))
    rows = []
    for date, prices in markets.items():
        model = cfg.model_for(models, date)
        k = int(cfg.get("slot", int(np.argmax(prices.lam))))
        reserve = float(cfg.get("reserve", params.e_max))
        lam = float(prices.lam[k])
        for pi_e in np.linspace(0.0, lam, points):
            res = two_way_analysis(prices, model, k, reserve, float(pi_e))
            rows.append((date, k, reserve, float(pi_e), res.commitment, res.regime,
                         two_way_closed_form(prices, model, k, float(pi_e))))
    write_csv(_ensure_out(cfg) / "twoway.csv",
              ("date", "slot", "reserve", "pi_e", "commitment", "regime", "commitment_no_reserve"), rows)
    return {"rows": len(rows), "files": ["twoway.csv"]}


def _case(cfg):
    return load_case(cfg.path("case"))


def cmd_network(cfg):
    case = _case(cfg)
    res = multi_period_dispatch(case)
    out = _ensure_out(cfg)
    write_lmp(out / "lmp.csv", res.buses, res.lmp)
    pol = res.storage
    write_csv(out / "storage.csv", ("slot", "u_plus", "u_minus", "soc"),
              ((k, pol.u_plus[k], pol.u_minus[k], res.soc[k + 1]) for k in range(pol.n)))
    return {"objective": res.objective, "max_abs_flow": float(np.abs(res.flows).max()),
            "files": ["lmp.csv", "storage.csv"]}


def cmd_matrix(cfg):
    case = _case(cfg)
    m = feasibility_matrix(case, cfg.get("lambda_ratio"))
    out = _ensure_out(cfg)
    write_matrix(out / "matrix.csv", m.buses, m.feasible)
    write_csv(out / "placements.csv",
              ("wind_bus", "storage_bus", "feasible", "slot", "reserve", "floor", "cap", "reason"),
              ((o.wind_bus, o.storage_bus, int(o.feasible), o.slot, o.reserve, o.floor, o.cap, o.reason)
               for o in m.outcomes))
    files = ["matrix.csv", "placements.csv"]
    if cfg.svg:
        _matrix_svg(m, out / "matrix.svg")
        files.append("matrix.svg")
    return {"diagonal_feasible": bool(np.diag(m.feasible).all()), "feasible": int(m.feasible.sum()),
            "files": files}


def _matrix_svg(m, path):
    import matplotlib
    matplotlib.use("Agg")
    from matplotlib.colors import ListedColormap
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "reserve-insure", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5, 5))
        # rows of the grid are wind buses; draw them on the x axis
        ax.imshow(m.feasible.T.astype(int), cmap=ListedColormap(["tab:red", "tab:green"]), vmin=0, vmax=1,
                  origin="lower")
        ticks = range(len(m.buses))
        ax.set_xticks(ticks, [str(b) for b in m.buses])
        ax.set_yticks(ticks, [str(b) for b in m.buses])
        ax.set_xlabel("wind bus")
        ax.set_ylabel("storage bus")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


COMMANDS = {
    "fit": cmd_fit, "bid": cmd_bid, "contract": cmd_contract, "classify": cmd_classify,
    "simulate": cmd_simulate, "twoway": cmd_twoway, "network": cmd_network, "matrix": cmd_matrix,
}


def _error(kind, exc, code):
    payload = {"error": kind, "message": str(exc)}
    for attr in ("line", "path"):
        if getattr(exc, attr, None) is not None:
            payload[attr] = getattr(exc, attr)
    if isinstance(exc, LPInfeasibleError) and exc.violations:
        payload["violations"] = [list(v) for v in exc.violations[:5]]
    print(json.dumps(payload, default=str), file=sys.stderr)
    return code


def run(cfg):
    """Execute one subcommand; returns its JSON summary."""
    return COMMANDS[cfg.subcommand](cfg)


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        cfg = RunConfig.from_args(args)
        summary = run(cfg)
    except UsageError as e:
        return _error("usage", e, 2)
    except DataError as e:
        return _error("data", e, 3)
    except (ConsistencyError, NumericError, LPInfeasibleError, LPUnboundedError) as e:
        return _error(type(e).__name__, e, 4)
    except (ValueError, TypeError, KeyError) as e:
        return _error("invalid-config", e, 2)
    print(json.dumps(summary, sort_keys=True, default=float))
    return 0


if __name__ == "__main__":
    sys.exit(main())
