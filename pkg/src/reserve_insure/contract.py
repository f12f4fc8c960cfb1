"""Decision rules for the renewable/storage insurance contract.

The renewable producer buys a reserve of ``G`` MWh at ``pi`` $/MWh from a
storage unit; in real time the storage covers the producer's shortfall up
to ``G``. This module holds the closed-form rules: optimal day-ahead bids,
the producer's price cap, the storage's price floor, the resulting
feasibility interval, the standard contract priced at the cap, the
profitability classification of a storage unit, and the optimal commitment
under a two-way contract in which excess production is sold to the storage.
"""
from dataclasses import dataclass
import warnings

import numpy as np

from . import renewable as rn
from .errors import ConsistencyError, NumericError
from .market import Contract
from .storage import arbitrage_pair

DA_PROFITABLE = "da-profitable"
INSURANCE_ONLY = "insurance-only"
UNPROFITABLE = "unprofitable"


@dataclass(frozen=True)
class FeasibilityInterval:
    """Reserve prices acceptable to both players at the contract slot."""

    floor: float
    cap: float
    slot: int
    reserve: float
    charge_slot: int
    commitment: float

    @property
    def width(self):
        return self.cap - self.floor

    def contains(self, price):
        return self.floor <= price <= self.cap


@dataclass(frozen=True)
class ProfitabilityBounds:
    lambda_lower_bar: float
    lambda_upper_bar: float
    ratio: float
    label: str


def _check_ratio(prices, k):
    lam = prices.lam[k]
    if lam >= prices.lambda_p:
        raise ValueError(f"slot {k}: price {lam} must be below the penalty {prices.lambda_p}")
    return lam / prices.lambda_p


def optimal_bid(prices, model, reserve=None):
    """Profit-maximising day-ahead commitment per slot.

    ``C[k] = G[k] + F_k^{-1}(lam[k] / lambda_p)``, floored at zero. Slots
    with a nonpositive price bid zero, which is the constrained optimum
    there. Any floored slot triggers a ``RuntimeWarning``.
    """
    n = prices.n
    g = np.zeros(n) if reserve is None else np.broadcast_to(np.asarray(reserve, float), (n,))
    if model.n != n:
        raise ValueError(f"model has {model.n} slots, prices have {n}")
    bid = np.zeros(n)
    floored = []
    for k in range(n):
        ratio = _check_ratio(prices, k)
        if ratio <= 0:
            floored.append(k)
            continue
        c = g[k] + rn.quantile(model, k, ratio)
        if c < 0:
            floored.append(k)
            c = 0.0
        bid[k] = c
    if floored:
        warnings.warn(f"bids floored at zero in slots {floored}", RuntimeWarning, stacklevel=2)
    return bid


def renewable_price_cap(prices, k):
    """Highest reserve price the producer accepts at slot ``k``: the day-ahead price."""
    return float(prices.lam[k])


def renewable_reserve_choice(prices, k, pi, available):
    """Reserve the producer buys at price ``pi``: everything offered, or nothing above the cap."""
    return float(available) if pi <= renewable_price_cap(prices, k) else 0.0


def storage_price_floor(prices, model, params, commitment, slot=None, reserve=None):
    """Lowest reserve price the storage accepts for reserving ``reserve`` MWh at ``slot``.

    Equals the day-ahead price at ``slot`` less the operating cost the unit
    saves because it is only called for part of the reserve::

        lam[slot] - c + c * E[min((C - R)+, reserve)] / reserve

    ``slot`` defaults to the discharge slot of the arbitrage pair and
    ``reserve`` to the energy capacity.
    """
    k = arbitrage_pair(prices)[1] if slot is None else slot
    e = params.e_max if reserve is None else float(reserve)
    if not e > 0:
        raise ValueError("reserve must be positive")
    called = rn.expected_capped_cost(model, k, commitment, e, params.cost_coeff)
    return float(prices.lam[k] - params.cost_coeff + called / e)


def feasibility_interval(prices, model, params):
    """Interval ``[floor, cap]`` of mutually acceptable prices under the arbitrage policy.

    The storage charges ``e_max`` at the arbitrage pair's first slot and
    reserves it for the producer at the second, where the producer bids its
    optimal commitment given that reserve.
    """
    i, j = arbitrage_pair(prices)
    e = params.e_max
    ratio = _check_ratio(prices, j)
    if ratio <= 0:
        raise ValueError(f"contract slot {j} has nonpositive price")
    commitment = max(e + float(rn.quantile(model, j, ratio)), 0.0)
    floor = storage_price_floor(prices, model, params, commitment, slot=j, reserve=e)
    cap = renewable_price_cap(prices, j)
    if floor > cap + 1e-9:
        raise ConsistencyError(f"empty feasibility interval: floor {floor} above cap {cap}")
    return FeasibilityInterval(floor=floor, cap=cap, slot=j, reserve=e, charge_slot=i, commitment=commitment)


def standard_contract(prices, model, params):
    """Reserve ``e_max`` at the arbitrage discharge slot, priced at that slot's day-ahead price."""
    _, j = arbitrage_pair(prices)
    pi = np.zeros(prices.n)
    g = np.zeros(prices.n)
    pi[j] = prices.lam[j]
    g[j] = params.e_max
    return Contract(pi, g)


def profitability_classify(prices, model, params, pi=None):
    """Classify a storage unit as day-ahead profitable, insurance-only, or unprofitable.

    With the arbitrage pair's prices ``lam_min``/``lam_max`` and linear cost
    ``c``, the unit loses money in the day-ahead market when
    ``lam_min / lam_max >= 1 - 2c / lam_max`` and profits from the contract
    at price ``pi`` when the ratio is below the upper bound, which nets the
    reserve price against charging and expected call-out costs. ``pi``
    defaults to ``lam_max``.
    """
    i, j = arbitrage_pair(prices)
    lam_min, lam_max = float(prices.lam[i]), float(prices.lam[j])
    if lam_max <= 0:
        raise ValueError("classification needs a positive peak price")
    price = lam_max if pi is None else float(pi)
    c, e = params.cost_coeff, params.e_max
    ratio_p = _check_ratio(prices, j)
    commitment = max(e + float(rn.quantile(model, j, ratio_p)), 0.0)
    called = float(rn.expected_capped_cost(model, j, commitment, e, c))

    lower = 1.0 - 2.0 * c / lam_max
    upper = price / lam_max - c / lam_max - called / (lam_max * e)
    ratio = lam_min / lam_max
    if ratio < lower:
        label = DA_PROFITABLE
    elif ratio < upper:
        label = INSURANCE_ONLY
    else:
        label = UNPROFITABLE
    return ProfitabilityBounds(lower, upper, ratio, label)


@dataclass(frozen=True)
class TwoWayBid:
    """Optimal commitment under a two-way contract and how it was found.

    ``regime`` is ``concave`` (root of the first-order condition), ``convex``
    (boundary comparison) or ``mixed`` (best of boundaries and interior
    local maxima).
    """

    commitment: float
    regime: str
    residual: float


def _two_way_terms(model, k, lam, lambda_p, g, pi_e):
    mu, sigma = model.slot(k)

    def slope(c):
        return lam - lambda_p * rn.cdf(model, k, c - g) - pi_e * (1.0 - rn.cdf(model, k, c))

    def value(c, pi_r=0.0):
        resale = mu - c + rn.expected_shortfall(model, k, c)
        return lam * c - pi_r * g + pi_e * resale - lambda_p * rn.expected_shortfall(model, k, c - g)

    return slope, value


def _bisect(f, a, b, tol=1e-12):
    fa = f(a)
    for _ in range(200):
        m = 0.5 * (a + b)
        if m == a or m == b:
            break
        fm = f(m)
        if abs(fm) < tol:
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def two_way_analysis(prices, model, k, reserve, pi_e, pi_r=0.0, grid=1000):
    """Optimal commitment at slot ``k`` when excess production is sold to the storage at ``pi_e``.

    Curvature of expected profit is ``-lambda_p f(C - G) + pi_e f(C)``,
    sampled on ``grid`` points over ``[mu - 6 sigma, mu + 6 sigma + G]``.
    Where it is nonpositive throughout, the first-order condition
    ``lam = lambda_p F(C - G) + pi_e (1 - F(C))`` is solved by bisection on
    ``[0, capacity + G]``. Where it is nonnegative throughout, the producer
    bids either its capacity or nothing, whichever side of
    ``pi_e * mu <= lam * cap - pi_r G - lambda_p E[(cap - G - R)+]`` holds.
    Otherwise the best of the boundaries and interior local maxima is taken.
    """
    lam, lambda_p = float(prices.lam[k]), prices.lambda_p
    g = float(reserve)
    if not 0 <= pi_e <= lam:
        raise ValueError(f"resale price must lie in [0, {lam}], got {pi_e}")
    if lam >= lambda_p:
        raise ValueError("day-ahead price must be below the penalty")
    mu, sigma = model.slot(k)
    if sigma <= 0:
        raise ValueError("two-way analysis needs a nondegenerate production distribution")
    slope, value = _two_way_terms(model, k, lam, lambda_p, g, pi_e)
    hi = model.capacity + g

    pts = np.linspace(mu - 6 * sigma, mu + 6 * sigma + g, grid)
    curv = -lambda_p * rn.pdf(model, k, pts - g) + pi_e * rn.pdf(model, k, pts)

    if np.all(curv <= 0):
        s0, s1 = slope(0.0), slope(hi)
        if s0 <= 0:
            return TwoWayBid(0.0, "concave", float(s0))
        if s1 > 0:
            raise NumericError("first-order condition has no root in [0, capacity + G]",
                               {"slot": k, "slope_at_0": float(s0), "slope_at_hi": float(s1), "hi": hi})
        root = _bisect(slope, 0.0, hi)
        return TwoWayBid(root, "concave", abs(float(slope(root))))

    if np.all(curv >= 0):
        cap = model.capacity
        take_all = pi_e * mu <= lam * cap - pi_r * g - lambda_p * rn.expected_shortfall(model, k, cap - g)
        c = cap if take_all else 0.0
        return TwoWayBid(c, "convex", abs(float(slope(c))))

    candidates = [0.0, model.capacity, hi]
    scan = np.linspace(0.0, hi, 4 * grid + 1)
    s = slope(scan)
    for a, b, sa, sb in zip(scan[:-1], scan[1:], s[:-1], s[1:]):
        if sa > 0 >= sb:
            candidates.append(_bisect(slope, a, b))
    best = max(candidates, key=lambda c: (value(c, pi_r), -c))
    return TwoWayBid(float(best), "mixed", abs(float(slope(best))))


def two_way_commitment(prices, model, k, reserve, pi_e, pi_r=0.0):
    """Commitment in MW; see :func:`two_way_analysis`."""
    return two_way_analysis(prices, model, k, reserve, pi_e, pi_r).commitment


def two_way_closed_form(prices, model, k, pi_e):
    """Optimal commitment without reserve: ``F^{-1}((lam - pi_e) / (lambda_p - pi_e))``."""
    lam = float(prices.lam[k])
    if lam - pi_e <= 0:
        return 0.0
    return max(float(rn.quantile(model, k, (lam - pi_e) / (prices.lambda_p - pi_e))), 0.0)
