import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nilcone.bch_group import bch_product
from nilcone.cc_metric import (
    ControlWord,
    cc_distance,
    cc_lower_bound,
    cc_upper_bound,
    endpoint,
    homogeneity_check,
    is_horizontal,
    isometry_check_delta_minus_one,
    steer,
    subadditivity_check,
    witness_is_sound,
    word_length,
)
from nilcone.lie_core import build_free_nilpotent, heisenberg, perturbed_filiform

rationals = st.fractions(min_value=-4, max_value=4, max_denominator=4)


@settings(max_examples=30, deadline=None)
@given(st.lists(rationals, min_size=5, max_size=5))
def test_steering_hits_exactly_free23(c):
    a = build_free_nilpotent(2, 3)
    x = a.element(c)
    w = steer(x)
    assert is_horizontal(w)
    assert endpoint(w) == x


def test_steering_non_graded():
    a = perturbed_filiform()
    x = a.element([1, -2, Fraction(1, 3), 5])
    assert endpoint(steer(x), exact=False).to_float().coords == pytest.approx([1, -2, 1 / 3, 5], abs=1e-6)


@settings(max_examples=20, deadline=None)
@given(rationals, rationals)
def test_layer_one_targets_are_tight(u, v):
    h = heisenberg()
    x = h.element([u, v, 0])
    est = cc_upper_bound(x)
    assert est.upper == est.lower == pytest.approx(float((u * u + v * v) ** 0.5))


def test_heisenberg_center_upper_bound():
    h = heisenberg()
    est = cc_upper_bound(h.element([0, 0, 1]))
    # the exact value is 2 sqrt(pi); a square loop gives 4
    assert est.hit and 2 * 3.14159**0.5 <= est.upper <= 4 + 1e-12
    assert cc_lower_bound(h.element([0, 0, 1])) == 0.0
    assert witness_is_sound(est)


def test_distance_is_left_invariant():
    h = heisenberg()
    x, y, g = h.element([1, 0, 2]), h.element([0, 1, -1]), h.element([3, -1, 7])
    d1 = cc_distance(x, y).upper
    d2 = cc_distance(bch_product(g, x), bch_product(g, y)).upper
    assert d1 == pytest.approx(d2, rel=1e-9)


def test_word_round_trip_and_split():
    h = heisenberg()
    # unit-axis steps only, so every piece length is rational and the split is exact
    w = steer(h.element([1, 0, 3]))
    assert w.exact and all(d.norm() == 1 for d, _ in w.steps)
    back = ControlWord.from_json(h, json.loads(json.dumps(w.to_json())))
    assert endpoint(back) == endpoint(w)
    pieces = w.split_equal(5)
    assert len(pieces) == 5
    assert sum(word_length(p) for p in pieces) == word_length(w)
    total = pieces[0]
    for p in pieces[1:]:
        total = total + p
    assert endpoint(total) == endpoint(w)


def test_simplified_merges_steps():
    h = heisenberg()
    e = h.basis_element(0)
    w = ControlWord(h, [(e, Fraction(1)), (e, Fraction(2)), (-e, Fraction(1))])
    s = w.simplified()
    assert len(s) == 1 and s.steps[0][1] == 2


def test_homogeneity_and_reflection_small():
    h = heisenberg()
    assert homogeneity_check(h.element([1, 0, 1])).passed
    assert isometry_check_delta_minus_one([h.element([1, 2, 3]), h.element([0, 1, -1])]).passed


def test_subadditivity_small_sample():
    h = heisenberg()
    rng = random.Random(0)
    pairs = [
        (h.element([Fraction(rng.randint(-4, 4), 2) for _ in range(3)]), h.element([Fraction(rng.randint(-4, 4), 2) for _ in range(3)]))
        for _ in range(10)
    ]
    assert subadditivity_check(pairs).passed
