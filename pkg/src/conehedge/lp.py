"""Exact LP front end over the simplex kernel.

Variables are nonnegative by default; free variables are transparently
split into positive and negative parts.  Constraints are entered sparsely
and densified once at solve time.  Statuses map infeasible/unbounded to
first-class outcomes so callers can translate them to +inf/-inf prices.
"""

from __future__ import annotations

from conehedge import kernels
from conehedge._rat import R0, rat

OPTIMAL = kernels.LP_OPTIMAL
INFEASIBLE = kernels.LP_INFEASIBLE
UNBOUNDED = kernels.LP_UNBOUNDED

_REL = {"<=": kernels.REL_LE, "==": kernels.REL_EQ, ">=": kernels.REL_GE}


class LPResult:
    __slots__ = ("status", "objective", "_x", "_lp")

    def __init__(self, status, objective, x, lp):
        self.status = status
        self.objective = objective
        self._x = x
        self._lp = lp

    def value_of(self, var):
        pos, neg = self._lp._cols[var]
        v = self._x[pos]
        if neg >= 0:
            v = v - self._x[neg]
        return v

    def __repr__(self):
        return f"LPResult(status={self.status}, objective={self.objective})"


class LinearProgram:
    """Sparse builder for an exact-rational LP."""

    def __init__(self):
        self._ncols = 0
        self._cols = {}  # var id -> (pos column, neg column or -1)
        self._nvars = 0
        self._rows = []  # list of dict col->coef
        self._rels = []
        self._rhs = []

    def var(self):
        """Nonnegative variable; returns an opaque handle."""
        vid = self._nvars
        self._nvars += 1
        self._cols[vid] = (self._ncols, -1)
        self._ncols += 1
        return vid

    def free_var(self):
        """Unrestricted variable (split into two nonnegative columns)."""
        vid = self._nvars
        self._nvars += 1
        self._cols[vid] = (self._ncols, self._ncols + 1)
        self._ncols += 2
        return vid

    def add_constraint(self, terms, rel, rhs):
        """terms: iterable of (var, coef); rel in {"<=", "==", ">="}."""
        row = {}
        for v, coef in terms:
            if coef == 0:
                continue
            pos, neg = self._cols[v]
            row[pos] = row.get(pos, R0) + coef
            if neg >= 0:
                row[neg] = row.get(neg, R0) - coef
        self._rows.append(row)
        self._rels.append(_REL[rel])
        self._rhs.append(rat(rhs))

    def _densify(self, objective_terms):
        obj = [R0] * self._ncols
        for v, coef in objective_terms:
            pos, neg = self._cols[v]
            obj[pos] = obj[pos] + coef
            if neg >= 0:
                obj[neg] = obj[neg] - coef
        rows = []
        for sparse in self._rows:
            row = [R0] * self._ncols
            for j, coef in sparse.items():
                row[j] = coef
            rows.append(row)
        return rows, obj

    def minimize(self, objective_terms):
        rows, obj = self._densify(objective_terms)
        status, x, value = kernels.simplex_two_phase(
            self._ncols, rows, list(self._rels), list(self._rhs), obj
        )
        if status != OPTIMAL:
            return LPResult(status, None, None, self)
        return LPResult(status, value, x, self)

    def maximize(self, objective_terms):
        res = self.minimize([(v, -c) for v, c in objective_terms])
        if res.status == OPTIMAL:
            res.objective = -res.objective
        return res
