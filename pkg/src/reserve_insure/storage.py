"""Storage dynamics, feasibility, operating cost and the arbitrage policy.

State of charge evolves as::

    x[k+1] = alpha * x[k] - u_plus[k] / eta_plus + eta_minus * u_minus[k]

with ``u_plus`` the energy discharged to the grid and ``u_minus`` the energy
drawn from it during slot ``k``. With ``alpha = eta_plus = eta_minus = 1``
this is the lossless model, whose state can also be written as
``x0 + A_plus @ u_plus + A_minus @ u_minus`` with lower-triangular
cumulative-sum matrices (see :func:`cumulative_matrices`).
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .lp import solve_lp

_TOL = 1e-9


def _prices(prices):
    return np.asarray(getattr(prices, "lam", prices), dtype=float)


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class StorageParams:
    """Physical and economic parameters of a storage unit.

    Energies in MWh; ``p_max`` is a per-slot energy limit (1-hour slots) and
    may be ``inf``. ``cost_coeff`` is the linear operating cost per MWh of
    throughput, charged on both charge and discharge.
    """

    e_max: float
    p_max: float = math.inf
    alpha: float = 1.0
    eta_plus: float = 1.0
    eta_minus: float = 1.0
    x0: float = 0.0
    cost_coeff: float = 0.0

    def __post_init__(self):
        if not self.e_max > 0:
            raise ValueError(f"e_max must be positive, got {self.e_max}")
        if not self.p_max > 0:
            raise ValueError(f"p_max must be positive, got {self.p_max}")
        for name in ("alpha", "eta_plus", "eta_minus"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")
        if not 0.0 <= self.x0 <= self.e_max:
            raise ValueError(f"x0 must lie in [0, e_max], got {self.x0}")
        if self.cost_coeff < 0:
            raise ValueError(f"cost_coeff must be nonnegative, got {self.cost_coeff}")

    @property
    def ideal(self):
        """True for the lossless, power-unconstrained model."""
        return (self.alpha == 1.0 and self.eta_plus == 1.0 and self.eta_minus == 1.0
                and math.isinf(self.p_max))


@dataclass(frozen=True)
class StoragePolicy:
    """Per-slot discharge (``u_plus``) and charge (``u_minus``) quantities in MWh.

    Signs are not enforced here; :func:`check_feasible` reports negative
    entries together with every other violated constraint.
    """

    u_plus: np.ndarray
    u_minus: np.ndarray

    def __post_init__(self):
        up, um = _frozen(self.u_plus), _frozen(self.u_minus)
        if up.ndim != 1 or up.shape != um.shape:
            raise ValueError(f"u_plus and u_minus must be 1-d of equal length, got {up.shape} and {um.shape}")
        object.__setattr__(self, "u_plus", up)
        object.__setattr__(self, "u_minus", um)

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n), np.zeros(n))

    @property
    def n(self):
        return self.u_plus.size

    @property
    def net(self):
        """Net injection into the grid, ``u_plus - u_minus``."""
        return self.u_plus - self.u_minus


@dataclass(frozen=True)
class StateTrajectory:
    """States of charge ``x[0..N]`` in MWh."""

    x: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _frozen(self.x))


@dataclass(frozen=True)
class Violation:
    """One violated storage constraint.

    ``kind`` is one of ``soc_lower``, ``soc_upper``, ``power_discharge``,
    ``power_charge``, ``negative_discharge``, ``negative_charge``,
    ``complementarity``. ``slot`` is the state index for SOC bounds and the
    decision slot otherwise.
    """

    kind: str
    slot: int
    magnitude: float

    def __post_init__(self):
        object.__setattr__(self, "magnitude", float(self.magnitude))


@dataclass(frozen=True)
class FeasibilityReport:
    trajectory: StateTrajectory
    violations: tuple = field(default_factory=tuple)

    @property
    def feasible(self):
        return not self.violations

    def kinds(self):
        return {v.kind for v in self.violations}


@dataclass(frozen=True)
class KKTCertificate:
    """Lagrange multipliers for the lossless baseline storage problem.

    ``mu_lower[i]``/``mu_upper[i]`` price the bounds ``0 <= x[i+1] <= e_max``;
    ``rho_plus``/``rho_minus`` price ``u_plus >= 0``/``u_minus >= 0``.
    ``energy_value`` is the implied marginal value of stored energy per slot.
    """

    mu_lower: np.ndarray
    mu_upper: np.ndarray
    rho_plus: np.ndarray
    rho_minus: np.ndarray
    energy_value: np.ndarray
    stationarity_residual: np.ndarray
    complementarity_residual: np.ndarray

    @property
    def max_stationarity_residual(self):
        return float(self.stationarity_residual.max(initial=0.0))

    @property
    def max_complementarity_residual(self):
        return float(self.complementarity_residual.max(initial=0.0))

    def certifies(self, tol=1e-9):
        return self.max_stationarity_residual < tol and self.max_complementarity_residual < tol


def _advance(x, u_plus, u_minus, params):
    return params.alpha * x - u_plus / params.eta_plus + params.eta_minus * u_minus


def step_state(x, u_plus, u_minus, params):
    """Next state of charge. No clamping; bound violations are left to :func:`check_feasible`."""
    if u_plus < 0 or u_minus < 0:
        raise ValueError(f"charge/discharge quantities must be nonnegative, got {u_plus}, {u_minus}")
    return _advance(x, u_plus, u_minus, params)


def simulate(policy, params):
    x = np.empty(policy.n + 1)
    x[0] = params.x0
    for k in range(policy.n):
        x[k + 1] = _advance(x[k], policy.u_plus[k], policy.u_minus[k], params)
    return StateTrajectory(x)


def cumulative_matrices(n):
    """Lower-triangular ``(A_plus, A_minus)`` with entries -1 and +1 on and below the diagonal."""
    low = np.tril(np.ones((n, n)))
    return -low, low


def check_feasible(policy, params, tol=_TOL):
    """Simulate ``policy`` and list every violated constraint."""
    traj = simulate(policy, params)
    scale = max(1.0, params.e_max)
    out = []
    for k in range(1, policy.n + 1):
        xk = traj.x[k]
        if xk < -tol * scale:
            out.append(Violation("soc_lower", k, -xk))
        elif xk > params.e_max + tol * scale:
            out.append(Violation("soc_upper", k, xk - params.e_max))
    for k in range(policy.n):
        up, um = policy.u_plus[k], policy.u_minus[k]
        if up < -tol:
            out.append(Violation("negative_discharge", k, -up))
        if um < -tol:
            out.append(Violation("negative_charge", k, -um))
        if up / params.eta_plus > params.p_max + tol * scale:
            out.append(Violation("power_discharge", k, up / params.eta_plus - params.p_max))
        if params.eta_minus * um > params.p_max + tol * scale:
            out.append(Violation("power_charge", k, params.eta_minus * um - params.p_max))
        if up > tol and um > tol:
            out.append(Violation("complementarity", k, up * um))
    return FeasibilityReport(traj, tuple(out))


def stage_cost(u_plus, u_minus, params):
    """Per-slot operating cost ``g(u_plus, u_minus)``; linear in throughput."""
    return params.cost_coeff * (np.asarray(u_plus, dtype=float) + np.asarray(u_minus, dtype=float))


def operating_cost(policy, params):
    return float(np.sum(stage_cost(policy.u_plus, policy.u_minus, params)))


def baseline_profit(policy, prices, params):
    """Day-ahead profit ``sum(lam * (u_plus - u_minus)) - g`` of a policy."""
    lam = _prices(prices)
    return float(lam @ policy.net) - operating_cost(policy, params)


def arbitrage_pair(prices):
    """Best ordered (charge, discharge) slot pair.

    Maximises ``lam[j] - lam[i]`` over ``i < j``; ties go to the earliest
    ``i`` and then the earliest ``j``. The spread may be zero or negative.
    """
    lam = _prices(prices)
    n = lam.size
    if n < 2:
        raise ValueError("need at least two slots for an arbitrage pair")
    spread = lam[None, :] - lam[:, None]
    spread[np.tril_indices(n)] = -np.inf
    flat = int(np.argmax(spread))
    return divmod(flat, n)


def single_cycle_policy(prices, params, pair=None):
    """Charge ``e_max`` at the pair's first slot and discharge it at the second."""
    lam = _prices(prices)
    i, j = arbitrage_pair(lam) if pair is None else pair
    up = np.zeros(lam.size)
    um = np.zeros(lam.size)
    um[i] = params.e_max
    up[j] = params.e_max
    return StoragePolicy(up, um)


def arbitrage_policy(prices, params):
    """Profit-maximising day-ahead policy without insurance.

    For the lossless unit with no power limit this is a sequence of full
    charge/discharge cycles found by dynamic programming over the two
    extreme states; when one cycle is optimal it is the best ordered pair
    of :func:`arbitrage_pair` and a cycle is only run if its spread exceeds
    the round-trip operating cost ``2 * cost_coeff``. Other parameter sets
    are solved as the linear program of :func:`baseline_lp_policy`.
    """
    lam = _prices(prices)
    if lam.size < 2:
        raise ValueError("arbitrage needs at least two slots")
    if params.x0 != 0.0:
        raise ValueError("arbitrage policy assumes an initially empty storage (x0 = 0)")
    if not params.ideal:
        return baseline_lp_policy(lam, params)

    n, e, c = lam.size, params.e_max, params.cost_coeff
    # value[s] after processing slots < k, s=0 empty, s=1 full; ties keep the earlier trade
    value = [0.0, -math.inf]
    back = []
    for k in range(n):
        stay_empty, discharge = value[0], value[1] + (lam[k] - c) * e
        stay_full, charge = value[1], value[0] - (lam[k] + c) * e
        from_empty = 1 if discharge > stay_empty else 0
        from_full = 0 if charge > stay_full else 1
        value = [max(stay_empty, discharge), max(stay_full, charge)]
        back.append((from_empty, from_full))

    up = np.zeros(n)
    um = np.zeros(n)
    state = 0 if value[0] >= value[1] else 1
    for k in range(n - 1, -1, -1):
        prev = back[k][state]
        if state == 0 and prev == 1:
            up[k] = e
        elif state == 1 and prev == 0:
            um[k] = e
        state = prev
    return StoragePolicy(up, um)


def _soc_matrix(n, params):
    """Matrix ``M`` and offset ``x0_term`` with ``x[1:] = x0_term + M_plus @ u_plus + M_minus @ u_minus``."""
    k = np.arange(n)
    expo = k[:, None] - k[None, :]
    decay = np.where(expo >= 0, params.alpha ** np.maximum(expo, 0), 0.0)
    x0_term = params.x0 * params.alpha ** (k + 1)
    return -decay / params.eta_plus, decay * params.eta_minus, x0_term


def baseline_lp_policy(prices, params):
    """Solve the baseline problem as an LP, without the complementarity constraint."""
    lam = _prices(prices)
    n, c = lam.size, params.cost_coeff
    m_plus, m_minus, x0_term = _soc_matrix(n, params)
    A = np.hstack([m_plus, m_minus])
    A_ub = np.vstack([A, -A])
    b_ub = np.concatenate([params.e_max - x0_term, x0_term])
    cost = np.concatenate([-(lam - c), lam + c])
    ub = np.concatenate([np.full(n, params.eta_plus * params.p_max),
                         np.full(n, params.p_max / params.eta_minus)])
    res = solve_lp(cost, A_ub=A_ub, b_ub=b_ub, lb=0.0, ub=ub)
    x = np.where(np.abs(res.x) < 1e-12, 0.0, res.x)
    return StoragePolicy(x[:n], x[n:])


def kkt_certificate(policy, prices, params, tol=_TOL):
    """Construct multipliers proving (or locating the failure of) optimality.

    Targets the lossless baseline problem. Stationarity pins the marginal
    value ``w[k]`` of stored energy to ``lam[k] - c`` where the unit
    discharges and ``lam[k] + c`` where it charges, and to the band between
    these otherwise; ``w`` may only step up (going backwards in time) across
    an empty state and down across a full one. A backward pass intersects
    these interval constraints; where the intersection is empty, the nearest
    admissible value is kept and the gap is reported as that slot's
    stationarity residual.
    """
    if not params.ideal:
        raise ValueError("KKT certificate is defined for the lossless, power-unconstrained storage")
    report = check_feasible(policy, params, tol)
    if not report.feasible:
        raise ValueError(f"policy is infeasible: {report.violations[0]}")
    lam = _prices(prices)
    n = policy.n
    if lam.size != n:
        raise ValueError("price and policy lengths differ")
    c, e = params.cost_coeff, params.e_max
    x = report.trajectory.x
    scale = tol * max(1.0, e)
    empty = np.abs(x[1:]) <= scale
    full = np.abs(x[1:] - e) <= scale
    discharging = policy.u_plus > tol
    charging = policy.u_minus > tol

    band_lo = np.where(charging, lam + c, lam - c)
    band_hi = np.where(discharging, lam - c, lam + c)

    lo = np.empty(n)
    hi = np.empty(n)
    gap = np.zeros(n)
    nxt_lo, nxt_hi = 0.0, 0.0
    for k in range(n - 1, -1, -1):
        elo = nxt_lo if not full[k] else -math.inf
        ehi = nxt_hi if not empty[k] else math.inf
        a, b = max(elo, band_lo[k]), min(ehi, band_hi[k])
        if a <= b:
            lo[k], hi[k] = a, b
        else:
            # nearest point of the reachable set to the stationarity band
            p = ehi if ehi < band_lo[k] else elo
            gap[k] = band_lo[k] - ehi if ehi < band_lo[k] else elo - band_hi[k]
            lo[k] = hi[k] = p
        nxt_lo, nxt_hi = lo[k], hi[k]

    w = np.empty(n)
    w[0] = _pick(lo[0], hi[0], lam[0])
    for k in range(1, n):
        w[k] = min(max(w[k - 1], lo[k]), hi[k])

    nu = w - np.append(w[1:], 0.0)
    mu_lower = np.maximum(nu, 0.0)
    mu_upper = np.maximum(-nu, 0.0)
    rho_plus_raw = w - lam + c
    rho_minus_raw = lam + c - w
    rho_plus = np.maximum(rho_plus_raw, 0.0)
    rho_minus = np.maximum(rho_minus_raw, 0.0)
    stat = np.maximum(-rho_plus_raw, 0.0) + np.maximum(-rho_minus_raw, 0.0)
    stat = np.maximum(stat, gap)

    comp = np.abs(rho_plus * policy.u_plus) + np.abs(rho_minus * policy.u_minus) \
        + np.abs(mu_lower * x[1:]) + np.abs(mu_upper * (e - x[1:]))
    return KKTCertificate(
        mu_lower=_frozen(mu_lower),
        mu_upper=_frozen(mu_upper),
        rho_plus=_frozen(rho_plus),
        rho_minus=_frozen(rho_minus),
        energy_value=_frozen(w),
        stationarity_residual=_frozen(stat),
        complementarity_residual=_frozen(comp),
    )


def _pick(lo, hi, hint):
    if math.isfinite(lo) and math.isfinite(hi):
        return min(max(hint, lo), hi)
    if math.isfinite(lo):
        return max(hint, lo)
    if math.isfinite(hi):
        return min(hint, hi)
    return hint
