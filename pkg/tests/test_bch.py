import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nilcone import bch_group as bg
from nilcone.lie_core import build_free_nilpotent, heisenberg, perturbed_filiform

from oracles import oracle_for

rationals = st.fractions(min_value=-3, max_value=3, max_denominator=5)


def rand_elem(a, rng, den=4):
    return a.element([Fraction(rng.randint(-6, 6), rng.randint(1, den)) for _ in range(a.dim)])


@pytest.mark.parametrize("l,d", [(2, 2), (2, 3), (2, 4), (3, 2)])
def test_product_matches_tensor_oracle(l, d):
    a = build_free_nilpotent(l, d)
    o = oracle_for(a.labels, d)
    rng = random.Random(l * 10 + d)
    for _ in range(10):
        x, y = rand_elem(a, rng), rand_elem(a, rng)
        assert list(bg.bch_product(x, y).coords) == o.bch(list(x.coords), list(y.coords))


def test_heisenberg_closed_form():
    h = heisenberg()
    x, y = h.element([1, 2, 3]), h.element([Fraction(1, 2), -1, 5])
    # (a, b, c)(a', b', c') = (a + a', b + b', c + c' + (ab' - ba')/2)
    assert bg.bch_product(x, y) == h.element([Fraction(3, 2), 1, 8 + Fraction(-1 - 1, 2)])


@settings(max_examples=30, deadline=None)
@given(st.lists(rationals, min_size=15, max_size=15))
def test_group_axioms_free23(c):
    a = build_free_nilpotent(2, 3)
    x, y, z = a.element(c[:5]), a.element(c[5:10]), a.element(c[10:])
    assert bg.bch_product(bg.bch_product(x, y), z) == bg.bch_product(x, bg.bch_product(y, z))
    assert bg.bch_product(x, bg.identity(a)) == x
    assert bg.bch_product(x, bg.inverse(x)).is_zero()


def test_exact_and_float_paths_agree():
    for a in (build_free_nilpotent(2, 4), perturbed_filiform()):
        rng = random.Random(3)
        x, y = rand_elem(a, rng), rand_elem(a, rng)
        exact = bg.bch_product(x, y)
        approx = bg.bch_product(x.to_float(), y.to_float())
        assert np.allclose(exact.to_float().coords, approx.coords, atol=1e-12)


def test_power_is_scalar_multiple():
    a = build_free_nilpotent(2, 3)
    x = a.element([1, -1, Fraction(1, 2), 0, 2])
    assert bg.power(x, 5, check=True) == x * 5
    assert bg.power(x, -3, check=True) == x * -3


def test_commutator_leading_term():
    h = heisenberg()
    x, y = h.basis_element(0), h.basis_element(1)
    assert bg.group_commutator(x, y) == h.basis_element(2)


@settings(max_examples=25, deadline=None)
@given(st.lists(rationals, min_size=10, max_size=10), st.sampled_from([Fraction(1, 2), Fraction(2), Fraction(3)]))
def test_dilation_is_automorphism(c, t):
    a = build_free_nilpotent(2, 3)
    x, y = a.element(c[:5]), a.element(c[5:])
    assert bg.dilation(t, bg.bch_product(x, y)) == bg.bch_product(bg.dilation(t, x), bg.dilation(t, y))
    m = bg.delta_minus_one
    assert m(bg.bch_product(x, y)) == bg.bch_product(m(x), m(y))


def test_dilation_group_law():
    a = build_free_nilpotent(2, 3)
    x = a.element([1, 2, 3, 4, 5])
    assert bg.dilation(2, bg.dilation(3, x)) == bg.dilation(6, x)
    assert bg.dilation(1, x) == x


def test_asymptotic_bracket_graded_and_jacobi():
    a = perturbed_filiform()
    asym = bg.asymptotic_algebra(a)
    assert asym.is_graded
    from nilcone.lie_core import verify_algebra

    assert verify_algebra(asym)
    x, y = a.basis_element(0), a.basis_element(1)
    # the layer-3 part of [b0,b1] is dropped
    assert bg.asymptotic_bracket(x, y) == a.basis_element(2)


def test_graded_algebra_is_its_own_asymptotic():
    a = build_free_nilpotent(2, 3)
    assert bg.asymptotic_algebra(a) is a


def test_alpha_residual_decays_like_one_over_t():
    a = perturbed_filiform()
    x, y = a.basis_element(0), a.basis_element(1)
    ts = [10, 100, 1000, 10000]
    res = [bg.alpha_residual(Fraction(t), x, y).norm() for t in ts]
    slope = np.polyfit(np.log(ts), np.log(res), 1)[0]
    assert abs(slope + 1) < 0.1


def test_beta_constant_finite():
    a = perturbed_filiform()
    rng = random.Random(0)
    pairs = [(rand_elem(a, rng), rand_elem(a, rng)) for _ in range(5)]
    A = bg.certify_beta_constant(pairs, [Fraction(t) for t in (1, 10, 100)])
    assert 0 < A < float("inf")
