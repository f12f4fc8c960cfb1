"""Day-ahead prices, insurance contracts, expected profits and ex-post settlement.

Cash flows are recorded with their sign (inflow positive), so a player's
``net`` is the plain sum of its components.
"""
from dataclasses import dataclass, fields

import numpy as np

from . import renewable as rn
from .errors import ConsistencyError
from .storage import check_feasible, stage_cost

_TOL = 1e-9


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MarketPrices:
    """Day-ahead prices ``lam`` ($/MWh per slot) and the shortfall penalty ``lambda_p``."""

    lam: np.ndarray
    lambda_p: float

    def __post_init__(self):
        lam = _frozen(self.lam)
        if lam.ndim != 1:
            raise ValueError("lam must be 1-d")
        if not self.lambda_p > 0:
            raise ValueError(f"penalty must be positive, got {self.lambda_p}")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "lambda_p", float(self.lambda_p))

    @classmethod
    def from_ratio(cls, lam, ratio):
        """Penalty set so that ``max(lam) / lambda_p == ratio``."""
        lam = np.asarray(lam, dtype=float)
        if not 0 < ratio < 1:
            raise ValueError(f"price/penalty ratio must lie in (0, 1), got {ratio}")
        return cls(lam, float(lam.max()) / ratio)

    @property
    def n(self):
        return self.lam.size


@dataclass(frozen=True)
class Contract:
    """Per-slot reserve price ``pi`` ($/MWh) and reserved energy ``g`` (MWh)."""

    pi: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        pi, g = _frozen(self.pi), _frozen(self.g)
        if pi.shape != g.shape or pi.ndim != 1:
            raise ValueError("pi and g must be 1-d arrays of equal length")
        if np.any(pi < 0) or np.any(g < 0):
            raise ValueError("contract prices and quantities must be nonnegative")
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "g", g)

    @classmethod
    def none(cls, n):
        return cls(np.zeros(n), np.zeros(n))

    @property
    def premium(self):
        return float(self.pi @ self.g)


@dataclass(frozen=True)
class Cashflows:
    """Signed cash flows of one player; arrays when settling many scenarios at once."""

    da_revenue: object = 0.0
    contract_payment: object = 0.0
    penalty: object = 0.0
    operating_cost: object = 0.0
    excess_sale: object = 0.0

    @property
    def net(self):
        return sum(getattr(self, f.name) for f in fields(self))


@dataclass(frozen=True)
class SettlementResult:
    renewable: Cashflows
    storage: Cashflows
    storage_dispatch: np.ndarray
    shortfall: np.ndarray


def _check_len(n, **arrays):
    for name, a in arrays.items():
        if np.shape(a)[-1] != n:
            raise ValueError(f"{name} has length {np.shape(a)[-1]}, expected {n}")


def renewable_expected_profit(commitment, contract, prices, model):
    """Expected renewable profit with reserve ``contract.g`` bought at ``contract.pi``.

    With an empty contract this is the baseline profit.
    """
    C = np.asarray(commitment, dtype=float)
    _check_len(prices.n, commitment=C, pi=contract.pi, model_mu=model.mu)
    if np.any(C < 0):
        raise ValueError("commitments must be nonnegative")
    es = np.array([rn.expected_shortfall(model, k, C[k] - contract.g[k]) for k in range(prices.n)])
    return float(prices.lam @ C - contract.pi @ contract.g - prices.lambda_p * es.sum())


def storage_expected_profit(policy, prices, params, contract=None, model=None, commitment=None):
    """Expected storage profit for ``policy``.

    Without a contract this is the day-ahead arbitrage profit. With one, the
    reserved energy ``g[k]`` (which must not exceed ``u_plus[k]``) earns
    ``pi[k]`` per MWh and only costs operation when called on, which happens
    for ``min((C[k] - R[k])+, g[k])``; any discharge beyond the reserve is
    sold day-ahead as usual.
    """
    report = check_feasible(policy, params)
    if not report.feasible:
        raise ValueError(f"policy is infeasible: {report.violations[0]}")
    lam = prices.lam
    _check_len(lam.size, u_plus=policy.u_plus)
    if contract is None:
        return float(lam @ policy.net - stage_cost(policy.u_plus, policy.u_minus, params).sum())
    if model is None or commitment is None:
        raise ValueError("contract evaluation needs the production model and renewable commitments")
    g = contract.g
    _check_len(lam.size, g=g, commitment=commitment)
    if np.any(g > policy.u_plus + _TOL):
        raise ConsistencyError("reserve exceeds the discharge scheduled by the policy")
    g = np.minimum(g, policy.u_plus)
    free = policy.u_plus - g
    called = np.array([rn.expected_capped_cost(model, k, commitment[k], g[k], params.cost_coeff)
                       if g[k] > 0 else 0.0 for k in range(lam.size)])
    total = (contract.pi @ g + lam @ (free - policy.u_minus)
             - stage_cost(free, policy.u_minus, params).sum() - called.sum())
    return float(total)


def settle_realized(production, commitment, contract, policy, prices, params, pi_e=None):
    """Ex-post settlement of one or many production scenarios.

    ``production`` has shape ``(N,)`` or ``(M, N)``; cash-flow fields of the
    result then have shape ``()`` or ``(M,)``. Production above the
    commitment is curtailed unless a two-way price ``pi_e`` is given, in
    which case the storage buys it.
    """
    r = np.asarray(getattr(production, "r", production), dtype=float)
    C = np.asarray(commitment, dtype=float)
    n = prices.n
    _check_len(n, production=r, commitment=C, g=contract.g, u_plus=policy.u_plus)
    g = contract.g
    if np.any(g > policy.u_plus + _TOL):
        raise ConsistencyError("reserve exceeds the discharge scheduled by the policy")
    g = np.minimum(g, policy.u_plus)

    shortfall = np.maximum(C - r, 0.0)
    dispatch = np.minimum(shortfall, g)
    excess = np.maximum(r - C, 0.0)
    free = policy.u_plus - g
    lam, c = prices.lam, params.cost_coeff
    premium = float(contract.pi @ g)

    excess_value = 0.0 if pi_e is None else (np.asarray(pi_e, float) * excess).sum(axis=-1)
    renewable = Cashflows(
        da_revenue=float(lam @ C),
        contract_payment=-premium,
        penalty=-prices.lambda_p * (shortfall - dispatch).sum(axis=-1),
        excess_sale=excess_value,
    )
    storage = Cashflows(
        da_revenue=float(lam @ (free - policy.u_minus)),
        contract_payment=premium,
        operating_cost=-c * (float(free.sum() + policy.u_minus.sum()) + dispatch.sum(axis=-1)),
        excess_sale=-excess_value if pi_e is not None else 0.0,
    )
    return SettlementResult(renewable, storage, dispatch, shortfall)
