"""Multi-period DC optimal power flow with storage and wind, and nodal prices.

One linear program covers all slots of the day. Per slot the variables are
generator outputs, bus voltage angles, line flows and the storage's
discharge, charge and end-of-slot state of charge. Nodal prices are the
duals of the bus balance rows.

Units: MW for power (one-hour slots, so MW and MWh coincide), radians for
angles, per-unit susceptances on ``base_mva``.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
import json
import os

import numpy as np
import scipy.sparse as sp

from . import renewable as rn
from .errors import DataError
from .lp import solve_lp
from .storage import StoragePolicy, StorageParams

THREADS_ENV = "RESERVE_INSURE_THREADS"


@dataclass(frozen=True)
class Line:
    from_bus: int
    to_bus: int
    susceptance: float
    capacity: float


@dataclass(frozen=True)
class Generator:
    """Dispatchable unit.

    ``segments`` optionally splits ``[p_min, p_max]`` into consecutive
    ``(width, marginal cost)`` blocks, a piecewise-linear stand-in for a
    convex cost curve; otherwise ``cost`` applies to the whole range.
    """

    bus: int
    cost: float
    p_min: float
    p_max: float
    ramp: float = None
    segments: tuple = ()

    def blocks(self):
        if self.segments:
            return tuple(self.segments)
        return ((self.p_max - self.p_min, self.cost),)


@dataclass(frozen=True)
class Wind:
    """Wind plant scheduled as a fixed injection of ``commitment`` MW per slot."""

    bus: int
    capacity: float
    commitment: np.ndarray
    model: rn.RenewableModel = None


@dataclass(frozen=True)
class StorageUnit:
    bus: int
    params: StorageParams


@dataclass(frozen=True)
class NetworkCase:
    buses: tuple
    lines: tuple
    generators: tuple
    loads: dict
    profile: np.ndarray
    slack: int
    wind: Wind = None
    storage: StorageUnit = None
    base_mva: float = 100.0
    lambda_ratio: float = 0.4
    name: str = "case"

    def __post_init__(self):
        buses = set(self.buses)
        if self.slack not in buses:
            raise DataError(f"slack bus {self.slack} is not a bus")
        for ln in self.lines:
            if ln.from_bus not in buses or ln.to_bus not in buses:
                raise DataError(f"line {ln.from_bus}-{ln.to_bus} references an unknown bus")
        if np.any(np.asarray(self.profile) <= 0):
            raise DataError("load profile multipliers must be positive")
        if not _connected(self.buses, self.lines):
            raise DataError("network is not connected")

    @property
    def n_slots(self):
        return len(self.profile)

    def bus_index(self, bus):
        return self.buses.index(bus)

    def load_matrix(self):
        """``(T, B)`` nodal load in MW."""
        base = np.array([self.loads.get(b, 0.0) for b in self.buses])
        return np.outer(np.asarray(self.profile, float), base)

    def with_wind_at(self, bus):
        return replace(self, wind=replace(self.wind, bus=bus))

    def with_storage_at(self, bus):
        return replace(self, storage=replace(self.storage, bus=bus))

    def with_line_limits_scaled(self, factor):
        return replace(self, lines=tuple(replace(ln, capacity=ln.capacity * factor) for ln in self.lines))

    def without_storage(self):
        return replace(self, storage=None)


def _connected(buses, lines):
    adj = {b: set() for b in buses}
    for ln in lines:
        adj[ln.from_bus].add(ln.to_bus)
        adj[ln.to_bus].add(ln.from_bus)
    seen, stack = set(), [buses[0]]
    while stack:
        b = stack.pop()
        if b in seen:
            continue
        seen.add(b)
        stack.extend(adj[b] - seen)
    return len(seen) == len(buses)


def case_from_dict(d):
    """Build a :class:`NetworkCase` from the JSON case layout."""
    try:
        lines = tuple(Line(int(ln["from"]), int(ln["to"]), float(ln["susceptance"]), float(ln["capacity"]))
                      for ln in d["lines"])
        gens = tuple(Generator(int(g["bus"]), float(g["cost"]), float(g.get("p_min", 0.0)), float(g["p_max"]),
                               None if g.get("ramp") is None else float(g["ramp"]),
                               tuple((float(w), float(c)) for w, c in g.get("segments", ())))
                     for g in d["generators"])
        loads = {int(ld["bus"]): float(ld["base"]) for ld in d["loads"]}
        profile = np.asarray(d["profile"], float)
        ratio = float(d.get("lambda_ratio", 0.4))
        wind = None
        if d.get("wind"):
            w = d["wind"]
            model = None
            if "mu" in w:
                model = rn.RenewableModel(np.asarray(w["mu"], float), np.asarray(w["sigma"], float),
                                          float(w["capacity"]))
            if "commitment" in w:
                commitment = np.asarray(w["commitment"], float)
            elif model is not None:
                commitment = baseline_commitment(model, ratio)
            else:
                raise DataError("wind entry needs either 'commitment' or a 'mu'/'sigma' model")
            wind = Wind(int(w["bus"]), float(w["capacity"]), commitment, model)
        storage = None
        if d.get("storage"):
            s = dict(d["storage"])
            bus = int(s.pop("bus"))
            storage = StorageUnit(bus, StorageParams(**{k: float(v) for k, v in s.items()}))
        return NetworkCase(
            buses=tuple(int(b) for b in d["buses"]), lines=lines, generators=gens, loads=loads,
            profile=profile, slack=int(d["slack"]), wind=wind, storage=storage,
            base_mva=float(d.get("base_mva", 100.0)), lambda_ratio=ratio, name=d.get("name", "case"),
        )
    except (KeyError, TypeError) as exc:
        raise DataError(f"malformed case file: {exc!r}") from exc


def load_case(path=None):
    """Read a JSON case file; ``None`` loads the shipped modified IEEE 14-bus case."""
    if path is None:
        text = resources.files("reserve_insure").joinpath("data/ieee14.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    return case_from_dict(json.loads(text))


def baseline_commitment(model, ratio):
    """Wind schedule without insurance when every slot has ``lam / lambda_p = ratio``."""
    return np.maximum(np.array([rn.quantile(model, k, ratio) for k in range(model.n)]), 0.0)


@dataclass(frozen=True)
class DispatchResult:
    """Optimal dispatch; time-indexed arrays have slots along axis 0."""

    generation: np.ndarray
    storage: StoragePolicy
    soc: np.ndarray
    angles: np.ndarray
    flows: np.ndarray
    lmp: np.ndarray
    objective: float
    dual_objective: float
    balance_residual: np.ndarray = field(repr=False)
    buses: tuple = ()

    def lmp_at(self, bus):
        return self.lmp[:, self.buses.index(bus)]


class _Layout:
    def __init__(self, case):
        self.T = case.n_slots
        self.G = len(case.generators)
        self.B = len(case.buses)
        self.L = len(case.lines)
        self.S = 3 if case.storage is not None else 0
        self.blocks = [g.blocks() for g in case.generators]
        self.seg_offset = np.cumsum([0] + [len(b) for b in self.blocks]).tolist()
        self.per = self.G + self.B + self.L + self.S + self.seg_offset[-1]
        self.n = self.T * self.per

    def gen(self, t, g):
        return t * self.per + g

    def theta(self, t, b):
        return t * self.per + self.G + b

    def flow(self, t, l):
        return t * self.per + self.G + self.B + l

    def u_plus(self, t):
        return t * self.per + self.G + self.B + self.L

    def u_minus(self, t):
        return self.u_plus(t) + 1

    def soc(self, t):
        """State at the end of slot ``t``."""
        return self.u_plus(t) + 2

    def segment(self, t, g, j):
        return t * self.per + self.G + self.B + self.L + self.S + self.seg_offset[g] + j


def _build(case):
    lay = _Layout(case)
    T, B = lay.T, lay.B
    idx = {b: i for i, b in enumerate(case.buses)}
    cost = np.zeros(lay.n)
    lb = np.full(lay.n, -np.inf)
    ub = np.full(lay.n, np.inf)
    rows, cols, vals, beq, names = [], [], [], [], []
    urows, ucols, uvals, bub, unames = [], [], [], [], []

    load = case.load_matrix()
    wind = np.zeros((T, B))
    if case.wind is not None:
        wind[:, idx[case.wind.bus]] = case.wind.commitment

    def eq(entries, rhs, name):
        r = len(beq)
        for c, v in entries:
            rows.append(r)
            cols.append(c)
            vals.append(v)
        beq.append(rhs)
        names.append(name)

    def le(entries, rhs, name):
        r = len(bub)
        for c, v in entries:
            urows.append(r)
            ucols.append(c)
            uvals.append(v)
        bub.append(rhs)
        unames.append(name)

    for t in range(T):
        for g, gen in enumerate(case.generators):
            j = lay.gen(t, g)
            lb[j], ub[j] = gen.p_min, gen.p_max
            for s, (width, price) in enumerate(lay.blocks[g]):
                js = lay.segment(t, g, s)
                cost[js] = price
                lb[js], ub[js] = 0.0, width
        for b in range(B):
            j = lay.theta(t, b)
            if case.buses[b] == case.slack:
                lb[j] = ub[j] = 0.0
        for l, ln in enumerate(case.lines):
            j = lay.flow(t, l)
            lb[j], ub[j] = -ln.capacity, ln.capacity
        if case.storage is not None:
            p = case.storage.params
            cost[lay.u_plus(t)] = cost[lay.u_minus(t)] = p.cost_coeff
            lb[lay.u_plus(t)] = lb[lay.u_minus(t)] = 0.0
            ub[lay.u_plus(t)] = p.eta_plus * p.p_max
            ub[lay.u_minus(t)] = p.p_max / p.eta_minus
            lb[lay.soc(t)], ub[lay.soc(t)] = 0.0, p.e_max

    # row order: balance rows first so their duals are the first T*B entries
    for t in range(T):
        for b, bus in enumerate(case.buses):
            entries = [(lay.gen(t, g), 1.0) for g, gen in enumerate(case.generators) if gen.bus == bus]
            for l, ln in enumerate(case.lines):
                if ln.from_bus == bus:
                    entries.append((lay.flow(t, l), -1.0))
                elif ln.to_bus == bus:
                    entries.append((lay.flow(t, l), 1.0))
            if case.storage is not None and case.storage.bus == bus:
                entries += [(lay.u_plus(t), 1.0), (lay.u_minus(t), -1.0)]
            eq(entries, load[t, b] - wind[t, b], f"balance bus {bus} slot {t}")
    for t in range(T):
        for g, gen in enumerate(case.generators):
            eq([(lay.gen(t, g), 1.0)] + [(lay.segment(t, g, s), -1.0) for s in range(len(lay.blocks[g]))],
               gen.p_min, f"cost blocks generator at bus {gen.bus} slot {t}")
        for l, ln in enumerate(case.lines):
            k = case.base_mva * ln.susceptance
            eq([(lay.flow(t, l), 1.0), (lay.theta(t, idx[ln.from_bus]), -k), (lay.theta(t, idx[ln.to_bus]), k)],
               0.0, f"flow line {ln.from_bus}-{ln.to_bus} slot {t}")
        if case.storage is not None:
            p = case.storage.params
            entries = [(lay.soc(t), 1.0), (lay.u_plus(t), 1.0 / p.eta_plus), (lay.u_minus(t), -p.eta_minus)]
            if t == 0:
                eq(entries, p.alpha * p.x0, "storage state slot 0")
            else:
                eq(entries + [(lay.soc(t - 1), -p.alpha)], 0.0, f"storage state slot {t}")
    for t in range(1, T):
        for g, gen in enumerate(case.generators):
            if gen.ramp is None:
                continue
            a, b = lay.gen(t, g), lay.gen(t - 1, g)
            le([(a, 1.0), (b, -1.0)], gen.ramp, f"ramp-up generator at bus {gen.bus} slot {t}")
            le([(a, -1.0), (b, 1.0)], gen.ramp, f"ramp-down generator at bus {gen.bus} slot {t}")

    A_eq = sp.csr_matrix((vals, (rows, cols)), shape=(len(beq), lay.n))
    A_ub = sp.csr_matrix((uvals, (urows, ucols)), shape=(len(bub), lay.n)) if bub else None
    return lay, cost, A_eq, np.asarray(beq), A_ub, (np.asarray(bub) if bub else None), lb, ub, \
        {"eq": names, "ub": unames}


def multi_period_dispatch(case):
    """Least-cost dispatch over all slots with DC flows, ramps and storage.

    Raises :class:`~reserve_insure.errors.LPInfeasibleError` naming the
    first resource that cannot be satisfied.
    """
    lay, cost, A_eq, b_eq, A_ub, b_ub, lb, ub, names = _build(case)
    res = solve_lp(cost, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, lb=lb, ub=ub, row_names=names)
    x = res.x
    T, G, B, L = lay.T, lay.G, lay.B, lay.L
    block = x.reshape(T, lay.per)
    gen = block[:, :G]
    theta = block[:, G:G + B]
    flows = block[:, G + B:G + B + L]
    if case.storage is not None:
        s0 = G + B + L
        up = np.where(block[:, s0] < 1e-9, 0.0, block[:, s0])
        um = np.where(block[:, s0 + 1] < 1e-9, 0.0, block[:, s0 + 1])
        soc = np.concatenate([[case.storage.params.x0], block[:, s0 + 2]])
    else:
        up = um = np.zeros(T)
        soc = np.zeros(T + 1)
    lmp = res.eq_duals[:T * B].reshape(T, B)
    residual = np.abs(A_eq @ x - b_eq)[:T * B].reshape(T, B)
    return DispatchResult(
        generation=gen, storage=StoragePolicy(up, um), soc=soc, angles=theta, flows=flows, lmp=lmp,
        objective=res.objective, dual_objective=res.dual_objective, balance_residual=residual,
        buses=tuple(case.buses),
    )


@dataclass(frozen=True)
class PlacementOutcome:
    """Contract check for one (wind bus, storage bus) placement."""

    wind_bus: int
    storage_bus: int
    feasible: bool
    slot: int = -1
    reserve: float = 0.0
    floor: float = float("nan")
    cap: float = float("nan")
    reason: str = ""


@dataclass(frozen=True)
class FeasibilityMatrix:
    """Boolean grid indexed ``[wind bus position, storage bus position]``."""

    buses: tuple
    feasible: np.ndarray
    outcomes: tuple

    def at(self, wind_bus, storage_bus):
        return bool(self.feasible[self.buses.index(wind_bus), self.buses.index(storage_bus)])


def evaluate_placement(case, wind_bus, storage_bus, lambda_ratio=None):
    """Dispatch with wind at ``wind_bus`` and storage at ``storage_bus`` and test the contract.

    The reserve is the storage's scheduled discharge at its highest-price
    discharge slot. The producer's cap is its own nodal price there; the
    storage's floor uses its own nodal price, the reserve in place of the
    energy capacity, and the producer's optimal commitment with that reserve.
    """
    ratio = case.lambda_ratio if lambda_ratio is None else lambda_ratio
    placed = case.with_wind_at(wind_bus).with_storage_at(storage_bus)
    result = multi_period_dispatch(placed)
    up = result.storage.u_plus
    slots = np.flatnonzero(up > 1e-6)
    if slots.size == 0:
        return PlacementOutcome(wind_bus, storage_bus, False, reason="no reserve schedulable")
    lmp_s = result.lmp_at(storage_bus)
    k = int(slots[np.argmax(lmp_s[slots])])
    g = float(up[k])
    cap = float(result.lmp_at(wind_bus)[k])
    model = placed.wind.model
    if model is None:
        raise DataError("feasibility check needs the wind production model")
    commitment = g + float(rn.quantile(model, k, ratio))
    params = placed.storage.params
    called = float(rn.expected_capped_cost(model, k, commitment, g, params.cost_coeff))
    floor = float(lmp_s[k]) - params.cost_coeff + called / g
    return PlacementOutcome(wind_bus, storage_bus, floor <= cap, k, g, floor, cap)


def _threads():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, os.cpu_count() or 1)))
    except ValueError:
        return 1


def feasibility_matrix(case, lambda_ratio=None, threads=None):
    """Contract feasibility for every (wind bus, storage bus) placement."""
    pairs = [(x, y) for x in case.buses for y in case.buses]
    workers = threads or _threads()

    def run(pair):
        return evaluate_placement(case, pair[0], pair[1], lambda_ratio)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, pairs))
    else:
        outcomes = [run(p) for p in pairs]
    B = len(case.buses)
    grid = np.array([o.feasible for o in outcomes], dtype=bool).reshape(B, B)
    return FeasibilityMatrix(tuple(case.buses), grid, tuple(outcomes))
