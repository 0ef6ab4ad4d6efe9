"""Arithmetic-geometric mean robustness for STL formulas.

The metric returns a score in [-1, 1] (for formulas whose predicates are
normalized): positive iff the trace satisfies the formula, negative iff it
violates it, with magnitude reflecting both spatial margin and how much of
the relevant time window contributes. Conjunction-like combinations take a
geometric mean of (1 + score) when every operand is satisfied and an
arithmetic mean of the negative parts otherwise; disjunction-like ones are
their exact duals.
"""

from __future__ import annotations

import numpy as np

from .stl import (
    Always,
    And,
    Eventually,
    Formula,
    Not,
    Or,
    Predicate,
    Trace,
    TrueFormula,
    Until,
    check_horizon,
    eval_signal_array,
)

__all__ = [
    "agm_rob",
    "clipped_pos",
    "clipped_neg",
    "conjunction_rule",
    "disjunction_rule",
]


def clipped_pos(v):
    """[v]+ = max(0, v)."""
    return max(0.0, v)


def clipped_neg(v):
    """[v]- = -max(0, -v) = min(0, v)."""
    return min(0.0, v)


def conjunction_rule(values):
    """Combine operand scores as a conjunction.

    All strictly positive: geometric mean of (1 + v), minus 1. Otherwise:
    arithmetic mean of the negative parts (zeros route here, giving 0).
    The geometric branch runs in log space so hundreds of operands cannot
    overflow.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("conjunction over no operands")
    if np.all(v > 0.0):
        return float(np.expm1(np.mean(np.log1p(v))))
    return float(np.mean(np.minimum(v, 0.0)))


def disjunction_rule(values):
    """Dual of conjunction_rule: -conj(-v)."""
    v = np.asarray(values, dtype=float)
    return -conjunction_rule(-v)


def agm_rob(f, tr, t=0):
    """AGM robustness of formula f on trace tr at step index t.

    Sign agrees with bool_sat whenever the value is non-zero. Predicates
    h <= u score (u - h)/2, oriented so satisfaction is positive.
    """
    check_horizon(f, tr, t)
    cache = {}
    return _rob(f, tr, t, cache)


def _pred_margins(p, tr, cache):
    key = id(p)
    got = cache.get(key)
    if got is None:
        got = 0.5 * (p.threshold - eval_signal_array(p.expr, tr))
        cache[key] = got
    return got


def _rob(f, tr, t, cache):
    if isinstance(f, TrueFormula):
        return 1.0
    if isinstance(f, Predicate):
        return float(_pred_margins(f, tr, cache)[t])
    if isinstance(f, Not):
        return -_rob(f.child, tr, t, cache)
    if isinstance(f, And):
        return conjunction_rule([_rob(c, tr, t, cache) for c in f.children])
    if isinstance(f, Or):
        return disjunction_rule([_rob(c, tr, t, cache) for c in f.children])
    if isinstance(f, Always):
        steps = f.interval.step_range(tr.dt)
        return conjunction_rule([_rob(f.child, tr, t + k, cache) for k in steps])
    if isinstance(f, Eventually):
        steps = f.interval.step_range(tr.dt)
        return disjunction_rule([_rob(f.child, tr, t + k, cache) for k in steps])
    if isinstance(f, Until):
        # For each candidate step k: right operand at t+k together with the
        # left operand over the prefix t..t+k-1, combined as a conjunction;
        # candidates then combine as a disjunction across k.
        steps = f.interval.step_range(tr.dt)
        candidates = []
        for k in steps:
            parts = [_rob(f.right, tr, t + k, cache)]
            parts.extend(_rob(f.left, tr, j, cache) for j in range(t, t + k))
            candidates.append(conjunction_rule(parts))
        return disjunction_rule(candidates)
    raise TypeError(f"not a formula: {f!r}")
