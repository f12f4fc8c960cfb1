"""Per-slot Gaussian production model for a renewable plant.

Production in each slot is modelled as an independent normal random
variable. Analytic quantities (CDF, quantiles, expected shortfall) use the
untruncated distribution; sampling clips draws to ``[0, capacity]``.
"""
from dataclasses import dataclass
import warnings

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import DataError

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RenewableModel:
    """Independent normal production per slot.

    Parameters
    ----------
    mu, sigma : array_like
        Per-slot mean and standard deviation in MW.
    capacity : float
        Nameplate capacity in MW.
    """

    mu: np.ndarray
    sigma: np.ndarray
    capacity: float

    def __post_init__(self):
        mu, sigma = _frozen(self.mu), _frozen(self.sigma)
        if mu.ndim != 1 or mu.shape != sigma.shape:
            raise ValueError("mu and sigma must be 1-d arrays of equal length")
        if np.any(sigma < 0):
            raise ValueError("sigma must be nonnegative")
        if np.any(mu < 0) or np.any(mu > self.capacity):
            raise ValueError("each slot mean must lie in [0, capacity]")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "capacity", float(self.capacity))

    @property
    def n(self):
        return self.mu.size

    @property
    def degenerate(self):
        """Boolean mask of slots with zero spread."""
        return self.sigma == 0

    def slot(self, k):
        return float(self.mu[k]), float(self.sigma[k])

    def to_dict(self):
        return {"mu": self.mu.tolist(), "sigma": self.sigma.tolist(), "capacity": self.capacity}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["mu"], float), np.asarray(d["sigma"], float), float(d["capacity"]))


@dataclass(frozen=True)
class Scenario:
    """One realisation of production, MW per slot."""

    r: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "r", _frozen(self.r))


def fit_hourly_gaussian(samples, capacity=None):
    """Fit mean and unbiased standard deviation per slot.

    ``samples`` is a sequence with one array of observations per slot.
    Capacity defaults to the largest observation. Slots with zero spread are
    kept (the distribution degenerates to a point) and reported through a
    ``RuntimeWarning`` and :attr:`RenewableModel.degenerate`.
    """
    mu, sigma = [], []
    top = 0.0
    for k, obs in enumerate(samples):
        obs = np.asarray(obs, dtype=float)
        if obs.size < 2:
            raise DataError(f"slot {k} has {obs.size} observation(s); at least 2 are needed")
        if not np.all(np.isfinite(obs)):
            raise DataError(f"slot {k} contains non-finite observations")
        mu.append(obs.mean())
        sigma.append(obs.std(ddof=1))
        top = max(top, obs.max())
    if not mu:
        raise DataError("no slots to fit")
    sigma = np.asarray(sigma)
    sigma[sigma < 1e-12 * np.maximum(1.0, np.abs(mu))] = 0.0
    if np.any(sigma == 0):
        warnings.warn(f"degenerate (zero-variance) slots: {np.flatnonzero(sigma == 0).tolist()}",
                      RuntimeWarning, stacklevel=2)
    cap = top if capacity is None else float(capacity)
    return RenewableModel(np.asarray(mu), sigma, cap)


def _params(model, k):
    return model.mu[k], model.sigma[k]


def cdf(model, k, x):
    """``P(R_k <= x)``."""
    mu, sigma = _params(model, k)
    x = np.asarray(x, dtype=float)
    if sigma == 0:
        return np.where(x >= mu, 1.0, 0.0)[()]
    return ndtr((x - mu) / sigma)


def pdf(model, k, x):
    mu, sigma = _params(model, k)
    x = np.asarray(x, dtype=float)
    if sigma == 0:
        return np.where(x == mu, np.inf, 0.0)[()]
    z = (x - mu) / sigma
    return _INV_SQRT_2PI * np.exp(-0.5 * z * z) / sigma


def quantile(model, k, p):
    """Inverse CDF of slot ``k`` production; ``p`` must lie strictly in (0, 1)."""
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0) | (p >= 1)) or np.any(~np.isfinite(p)):
        raise ValueError(f"probability must lie in (0, 1), got {p}")
    mu, sigma = _params(model, k)
    return (mu + sigma * ndtri(p))[()]


def expected_shortfall(model, k, commitment):
    """``E[(C - R_k)+]``, the mean undelivered energy for commitment ``C``."""
    mu, sigma = _params(model, k)
    c = np.asarray(commitment, dtype=float)
    if sigma == 0:
        return np.maximum(c - mu, 0.0)[()]
    d = c - mu
    z = d / sigma
    return (d * ndtr(z) + sigma * _INV_SQRT_2PI * np.exp(-0.5 * z * z))[()]


def expected_delivery(model, k, commitment):
    """``E[min(R_k, C)]``."""
    return np.asarray(commitment, dtype=float) - expected_shortfall(model, k, commitment)


def expected_capped_cost(model, k, commitment, cap, cost):
    """``cost * E[min((C - R_k)+, cap)]``.

    Uses ``min(s+, cap) = (C - R)+ - (C - cap - R)+``, i.e. the difference of
    two expected shortfalls; ``cap`` may be ``inf``.
    """
    cap = np.asarray(cap, dtype=float)
    if np.any(cap < 0):
        raise ValueError(f"cap must be nonnegative, got {cap}")
    full = expected_shortfall(model, k, commitment)
    tail = np.where(np.isinf(cap), 0.0,
                    expected_shortfall(model, k, np.asarray(commitment, float) - np.where(np.isinf(cap), 0.0, cap)))
    return (cost * np.maximum(full - tail, 0.0))[()]


def scenario_rng(seed, *key):
    """Independent generator for ``(seed, *key)``; identical keys give identical streams."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, key)]))


def sample(model, k, rng, size=None, clip=True):
    """Draw production for slot ``k``; clipped to ``[0, capacity]`` unless ``clip`` is False."""
    mu, sigma = _params(model, k)
    draw = mu + sigma * rng.standard_normal(size)
    if clip:
        draw = np.clip(draw, 0.0, model.capacity)
    return draw


def sample_scenarios(model, rng, n_scenarios, clip=True):
    """``(n_scenarios, N)`` production matrix; row ``m`` is scenario ``m``."""
    z = rng.standard_normal((n_scenarios, model.n))
    r = model.mu + model.sigma * z
    if clip:
        r = np.clip(r, 0.0, model.capacity)
    return r


def truncated_mean(mu, sigma, lo, hi):
    """Mean of ``N(mu, sigma^2)`` clipped (not conditioned) to ``[lo, hi]``."""
    if sigma == 0:
        return float(np.clip(mu, lo, hi))
    a, b = (lo - mu) / sigma, (hi - mu) / sigma
    phi = lambda z: _INV_SQRT_2PI * np.exp(-0.5 * z * z)  # noqa: E731
    inside = mu * (ndtr(b) - ndtr(a)) + sigma * (phi(a) - phi(b))
    return float(lo * ndtr(a) + inside + hi * (1.0 - ndtr(b)))
