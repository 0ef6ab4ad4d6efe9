"""Tests for AGM robustness: hand-derived case vectors, soundness against
boolean satisfaction, and algebraic properties."""

import numpy as np
import pytest

from stlsurrogate.agm import (
    agm_rob,
    clipped_neg,
    clipped_pos,
    conjunction_rule,
    disjunction_rule,
)
from stlsurrogate.stl import (
    Always,
    And,
    Channel,
    Eventually,
    HorizonError,
    Interval,
    Negate,
    Not,
    Or,
    Predicate,
    Trace,
    TrueFormula,
    Until,
    bool_sat,
)
from test_stl import random_bounded_formula, random_trace


def const_trace(**channels):
    return Trace({k: [v] for k, v in channels.items()}, 1.0)


def pred_le(name, u):
    return Predicate(Channel(name), u)


# ---------------------------------------------------------------------------
# Case vectors (hand-computed)


def test_true_scores_one():
    assert agm_rob(TrueFormula(), const_trace(a=0.0), 0) == 1.0


def test_predicate_satisfied_by_margin():
    # h = 0.3, u = 0.5: satisfied by 0.2, score (u - h)/2 = +0.1.
    tr = const_trace(a=0.3)
    assert agm_rob(pred_le("a", 0.5), tr, 0) == pytest.approx(0.1, abs=1e-12)


def test_predicate_violated():
    tr = const_trace(a=0.9)
    assert agm_rob(pred_le("a", 0.5), tr, 0) == pytest.approx(-0.2, abs=1e-12)


def test_and_both_positive_geometric():
    # children 0.2 and 0.2: sqrt(1.2 * 1.2) - 1 = 0.2.
    tr = const_trace(a=0.0, b=0.0)
    f = And((pred_le("a", 0.4), pred_le("b", 0.4)))
    assert agm_rob(f, tr, 0) == pytest.approx(0.2, abs=1e-12)


def test_and_mixed_arithmetic():
    # children -0.4 and 0.6: (1/2)([-0.4]- + [0.6]-) = -0.2.
    tr = const_trace(a=0.8, b=-0.2)
    f = And((pred_le("a", 0.0), pred_le("b", 1.0)))
    assert agm_rob(f, tr, 0) == pytest.approx(-0.2, abs=1e-12)


def test_always_arithmetic_branch():
    # step scores (0.2, -0.1, 0.3) over N=3: (1/3)(-0.1) = -0.0333...
    tr = Trace({"a": [-0.4, 0.2, -0.6]}, 1.0)
    f = Always(Interval(0, 2), pred_le("a", 0.0))
    assert agm_rob(f, tr, 0) == pytest.approx(-0.1 / 3.0, abs=1e-12)


def test_not_negates():
    tr = const_trace(a=0.3)
    f = pred_le("a", 0.5)
    assert agm_rob(Not(f), tr, 0) == pytest.approx(-0.1, abs=1e-12)


def test_clipped_helpers():
    assert clipped_pos(-2.0) == 0.0
    assert clipped_pos(3.0) == 3.0
    assert clipped_neg(-2.0) == -2.0
    assert clipped_neg(3.0) == 0.0


def test_conjunction_rule_all_zero_gives_zero():
    # zeros route to the arithmetic branch, which gives exactly 0.
    assert conjunction_rule([0.0, 0.0, 0.0]) == 0.0


def test_conjunction_rule_zero_among_positive():
    # a single zero forces the arithmetic branch: mean of negative parts = 0.
    assert conjunction_rule([0.0, 0.5, 0.9]) == 0.0


def test_conjunction_rule_log_space_stability():
    # hundreds of operands: naive product of (1+v) would overflow/underflow.
    v = np.full(500, 0.9)
    out = conjunction_rule(v)
    assert out == pytest.approx(0.9, rel=1e-12)
    v = np.full(500, -0.999)
    assert conjunction_rule(v) == pytest.approx(-0.999, rel=1e-12)


def test_disjunction_rule_duality():
    rng = np.random.default_rng(3)
    for _ in range(100):
        v = rng.uniform(-1, 1, size=rng.integers(1, 6))
        assert disjunction_rule(v) == pytest.approx(-conjunction_rule(-v), abs=0)


# ---------------------------------------------------------------------------
# Temporal operators


def test_eventually_is_dual_of_always():
    rng = np.random.default_rng(4)
    for _ in range(50):
        vals = rng.uniform(-1, 1, size=4)
        tr = Trace({"a": vals}, 1.0)
        f = pred_le("a", 0.0)
        ev = agm_rob(Eventually(Interval(0, 3), f), tr, 0)
        dual = -agm_rob(Always(Interval(0, 3), Not(f)), tr, 0)
        assert ev == pytest.approx(dual, abs=1e-15)


def test_until_single_step_equals_right():
    # interval [0,0]: the only candidate is right-at-t with empty prefix.
    tr = const_trace(a=0.3, b=0.1)
    f = Until(Interval(0, 0), pred_le("a", 0.5), pred_le("b", 0.5))
    assert agm_rob(f, tr, 0) == pytest.approx(
        agm_rob(pred_le("b", 0.5), tr, 0), abs=1e-15
    )


def test_until_hand_case():
    # steps 0..2; left scores l=[0.1, 0.2, ...], right scores r=[-0.05, 0.15, -0.1]
    left = Trace({"a": [-0.2, -0.4, 0.6], "b": [0.1, -0.3, 0.2]}, 1.0).channels
    tr = Trace({"a": [-0.2, -0.4, 0.6], "b": [0.1, -0.3, 0.2]}, 1.0)
    fl = pred_le("a", 0.0)  # scores: 0.1, 0.2, -0.3
    fr = pred_le("b", 0.0)  # scores: -0.05, 0.15, -0.1
    f = Until(Interval(0, 2), fl, fr)
    # candidates: k=0: conj([-0.05]) = -0.05
    #             k=1: conj([0.15, 0.1]) = sqrt(1.15*1.1)-1
    #             k=2: conj([-0.1, 0.1, 0.2]) = (1/3)(-0.1)
    c0 = -0.05
    c1 = np.sqrt(1.15 * 1.1) - 1
    c2 = -0.1 / 3
    expected = disjunction_rule([c0, c1, c2])
    assert agm_rob(f, tr, 0) == pytest.approx(expected, abs=1e-12)


def test_horizon_violation_raises():
    f = Always(Interval(0, 5), pred_le("a", 0.0))
    tr = Trace({"a": np.zeros(3)}, 1.0)
    with pytest.raises(HorizonError):
        agm_rob(f, tr, 0)


# ---------------------------------------------------------------------------
# Properties


def test_soundness_random_pairs():
    rng = np.random.default_rng(5)
    checked = 0
    for _ in range(2000):
        f = random_bounded_formula(rng, depth=int(rng.integers(0, 4)))
        tr = random_trace(rng, f)
        rob = agm_rob(f, tr, 0)
        if abs(rob) <= 1e-9:
            continue
        checked += 1
        assert (rob > 0) == bool_sat(f, tr, 0), (f, tr.channels)
    assert checked > 1500


def test_boundedness_with_normalized_predicates():
    rng = np.random.default_rng(6)
    for _ in range(500):
        f = random_bounded_formula(rng, depth=int(rng.integers(0, 4)))
        tr = random_trace(rng, f)
        assert abs(agm_rob(f, tr, 0)) <= 1.0 + 1e-12


def test_negation_antisymmetry_exact():
    rng = np.random.default_rng(7)
    for _ in range(300):
        f = random_bounded_formula(rng, depth=int(rng.integers(0, 4)))
        tr = random_trace(rng, f)
        assert agm_rob(Not(f), tr, 0) == -agm_rob(f, tr, 0)


def test_and_permutation_invariance():
    rng = np.random.default_rng(8)
    for _ in range(200):
        children = tuple(
            random_bounded_formula(rng, depth=1) for _ in range(int(rng.integers(2, 5)))
        )
        f = And(children)
        tr = random_trace(rng, f)
        base = agm_rob(f, tr, 0)
        perm = tuple(children[i] for i in rng.permutation(len(children)))
        assert agm_rob(And(perm), tr, 0) == pytest.approx(base, abs=1e-12)


def test_smoothness_away_from_branch_switch():
    # perturbing one sample by eps changes robustness O(eps), except across
    # the all-positive/otherwise branch switch.
    f = Always(Interval(0, 2), pred_le("a", 0.0))
    base_vals = np.array([-0.5, -0.4, -0.6])  # scores 0.25, 0.2, 0.3: all positive
    eps = 1e-6
    r0 = agm_rob(f, Trace({"a": base_vals}, 1.0), 0)
    bumped = base_vals.copy()
    bumped[1] += eps
    r1 = agm_rob(f, Trace({"a": bumped}, 1.0), 0)
    assert abs(r1 - r0) < 10 * eps
    assert r1 != r0


def test_or_soundness_shape():
    # or > 0 iff some child > 0; or < 0 iff all children < 0.
    assert disjunction_rule([-0.3, 0.2]) > 0
    assert disjunction_rule([-0.3, -0.2]) < 0
    assert disjunction_rule([0.0, -0.2]) == 0.0
