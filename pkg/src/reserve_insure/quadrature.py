"""Adaptive Simpson quadrature, used as an independent check on closed forms."""
import math


def adaptive_simpson(f, a, b, tol=1e-9, max_depth=60):
    """Integrate ``f`` over ``[a, b]`` to absolute tolerance ``tol``."""
    if a == b:
        return 0.0
    if a > b:
        return -adaptive_simpson(f, b, a, tol, max_depth)
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _recurse(f, a, b, fa, fm, fb, whole, tol, max_depth)


def _recurse(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0
    return (_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + _recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1))


def gaussian_pdf(r, mu, sigma):
    z = (r - mu) / sigma
    return math.exp(-0.5 * z * z) / (sigma * math.sqrt(2.0 * math.pi))


def shortfall_quad(mu, sigma, commitment, tol=1e-10, width=14.0):
    """``E[(C - R)+]`` for ``R ~ N(mu, sigma^2)`` by direct integration."""
    lo = mu - width * sigma
    if commitment <= lo:
        return 0.0
    return adaptive_simpson(lambda r: (commitment - r) * gaussian_pdf(r, mu, sigma), lo, commitment, tol)


def capped_cost_quad(mu, sigma, commitment, cap, cost, tol=1e-10, width=14.0):
    """``cost * E[min((C - R)+, cap)]`` by direct integration, split at the kink ``C - cap``."""
    lo = mu - width * sigma
    if commitment <= lo or cap == 0:
        return 0.0
    kink = max(commitment - cap, lo)
    flat = adaptive_simpson(lambda r: cap * gaussian_pdf(r, mu, sigma), lo, kink, tol) if kink > lo else 0.0
    ramp = adaptive_simpson(lambda r: (commitment - r) * gaussian_pdf(r, mu, sigma), kink, commitment, tol)
    return cost * (flat + ramp)
