"""Linear programs with dual extraction.

Thin layer over HiGHS (through :func:`scipy.optimize.linprog`) that returns
primal values together with sign-normalised multipliers, and turns solver
failures into diagnostics: a minimum-violation relaxation for infeasible
problems and a recession direction for unbounded ones.

Problem form::

    minimise    c @ x
    subject to  A_ub @ x <= b_ub
                A_eq @ x == b_eq
                lb <= x <= ub
"""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .errors import LPInfeasibleError, LPUnboundedError

_OPTIONS = {
    "presolve": True,
    "dual_feasibility_tolerance": 1e-10,
    "primal_feasibility_tolerance": 1e-10,
}


@dataclass(frozen=True)
class LPResult:
    """Optimal primal/dual pair.

    Attributes
    ----------
    x : ndarray
        Primal optimum.
    objective : float
        ``c @ x``.
    eq_duals : ndarray
        Sensitivity of the optimal objective to ``b_eq`` (free sign). For a
        nodal balance row ``injection == load`` this is the nodal price.
    ineq_duals : ndarray
        Nonnegative multipliers of ``A_ub @ x <= b_ub``.
    lower_duals, upper_duals : ndarray
        Nonnegative multipliers of the variable bounds.
    """

    x: np.ndarray
    objective: float
    eq_duals: np.ndarray
    ineq_duals: np.ndarray
    lower_duals: np.ndarray
    upper_duals: np.ndarray
    b_ub: np.ndarray
    b_eq: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    @property
    def dual_objective(self):
        lo = np.where(np.isfinite(self.lb), self.lb, 0.0)
        hi = np.where(np.isfinite(self.ub), self.ub, 0.0)
        return float(
            self.b_eq @ self.eq_duals
            - self.b_ub @ self.ineq_duals
            + lo @ self.lower_duals
            - hi @ self.upper_duals
        )


def _normalise_bounds(bounds, n):
    lb = np.zeros(n)
    ub = np.full(n, np.inf)
    if bounds is None:
        return lb, ub
    if len(bounds) == 2 and all(b is None or np.isscalar(b) for b in bounds):
        bounds = [bounds] * n
    for i, (lo, hi) in enumerate(bounds):
        lb[i] = -np.inf if lo is None else lo
        ub[i] = np.inf if hi is None else hi
    return lb, ub


def _as_matrix(A, n):
    if A is None:
        return sp.csr_matrix((0, n))
    return sp.csr_matrix(A)


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None,
             lb=None, ub=None, row_names=None):
    """Solve a linear program and return primal and dual solutions.

    Bounds are given either as ``bounds`` (a single ``(lo, hi)`` pair or a
    list of pairs, ``None`` meaning unbounded) or as arrays ``lb``/``ub``.
    The default is ``x >= 0``.

    ``row_names`` optionally maps ``"eq"`` and ``"ub"`` to lists of labels,
    used to name the violated rows when the problem is infeasible.

    Raises
    ------
    LPInfeasibleError
        With the rows that the minimum-violation relaxation had to relax.
    LPUnboundedError
        With a direction ``d`` along which the objective decreases without
        leaving the feasible region.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    if lb is not None or ub is not None:
        lo = np.zeros(n) if lb is None else np.broadcast_to(np.asarray(lb, float), n).copy()
        hi = np.full(n, np.inf) if ub is None else np.broadcast_to(np.asarray(ub, float), n).copy()
    else:
        lo, hi = _normalise_bounds(bounds, n)
    if np.any(lo > hi):
        bad = int(np.flatnonzero(lo > hi)[0])
        raise LPInfeasibleError(f"variable {bad} has lower bound above upper bound",
                                [("bound", bad, float(lo[bad] - hi[bad]))])

    Aub = _as_matrix(A_ub, n)
    Aeq = _as_matrix(A_eq, n)
    bub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    beq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()

    res = linprog(
        c,
        A_ub=Aub if Aub.shape[0] else None,
        b_ub=bub if Aub.shape[0] else None,
        A_eq=Aeq if Aeq.shape[0] else None,
        b_eq=beq if Aeq.shape[0] else None,
        bounds=np.column_stack([lo, hi]),
        method="highs",
        options=_OPTIONS,
    )
    if res.status == 2:
        violations = _min_violation(n, Aub, bub, Aeq, beq, lo, hi, row_names)
        head = violations[0] if violations else None
        msg = "linear program is infeasible"
        if head is not None:
            msg += f"; first violated row: {head[0]} {head[1]} (short by {head[2]:.6g})"
        raise LPInfeasibleError(msg, violations)
    if res.status == 3:
        ray = _recession_ray(c, Aub, Aeq, lo, hi)
        raise LPUnboundedError("linear program is unbounded", ray)
    if res.status != 0:
        raise RuntimeError(f"LP solver failed: {res.message}")

    ineq = -np.asarray(res.ineqlin.marginals) if Aub.shape[0] else np.zeros(0)
    eq = np.asarray(res.eqlin.marginals) if Aeq.shape[0] else np.zeros(0)
    return LPResult(
        x=np.asarray(res.x, dtype=float),
        objective=float(res.fun),
        eq_duals=eq,
        ineq_duals=np.maximum(ineq, 0.0),
        lower_duals=np.maximum(np.asarray(res.lower.marginals), 0.0),
        upper_duals=np.maximum(-np.asarray(res.upper.marginals), 0.0),
        b_ub=bub,
        b_eq=beq,
        lb=lo,
        ub=hi,
    )


def _min_violation(n, Aub, bub, Aeq, beq, lo, hi, row_names):
    m_ub, m_eq = Aub.shape[0], Aeq.shape[0]
    # x, s_ub (>=0), s_eq_plus, s_eq_minus
    nv = n + m_ub + 2 * m_eq
    cost = np.concatenate([np.zeros(n), np.ones(m_ub + 2 * m_eq)])
    A1 = sp.hstack([Aub, -sp.identity(m_ub), sp.csr_matrix((m_ub, 2 * m_eq))]) if m_ub else None
    A2 = sp.hstack([Aeq, sp.csr_matrix((m_eq, m_ub)), sp.identity(m_eq), -sp.identity(m_eq)]) if m_eq else None
    bnds = np.column_stack([np.concatenate([lo, np.zeros(nv - n)]),
                            np.concatenate([hi, np.full(nv - n, np.inf)])])
    res = linprog(cost, A_ub=A1, b_ub=bub if m_ub else None, A_eq=A2, b_eq=beq if m_eq else None,
                  bounds=bnds, method="highs")
    if res.status != 0:
        return []
    names = row_names or {}
    out = []
    s = res.x[n:]
    for i in range(m_ub):
        if s[i] > 1e-9:
            label = names.get("ub", [None] * m_ub)[i]
            out.append(("ub", label if label is not None else i, float(s[i])))
    for i in range(m_eq):
        amount = s[m_ub + i] + s[m_ub + m_eq + i]
        if amount > 1e-9:
            label = names.get("eq", [None] * m_eq)[i]
            out.append(("eq", label if label is not None else i, float(amount)))
    out.sort(key=lambda t: -t[2])
    return out


def _recession_ray(c, Aub, Aeq, lo, hi):
    n = c.size
    dlo = np.where(np.isfinite(lo), 0.0, -1.0)
    dhi = np.where(np.isfinite(hi), 0.0, 1.0)
    res = linprog(
        c,
        A_ub=Aub if Aub.shape[0] else None,
        b_ub=np.zeros(Aub.shape[0]) if Aub.shape[0] else None,
        A_eq=Aeq if Aeq.shape[0] else None,
        b_eq=np.zeros(Aeq.shape[0]) if Aeq.shape[0] else None,
        bounds=np.column_stack([dlo, dhi]),
        method="highs",
    )
    if res.status == 0 and res.fun < 0:
        return np.asarray(res.x)
    return None
