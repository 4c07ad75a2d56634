import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import lsq_linear, minimize

from nilcone.cones import (
    Cone,
    ConeError,
    DegenerateCone,
    controllability_criterion,
    degree_of_contact,
    interior_contains,
    min_lift,
    nnls,
    phi_margin,
)
from nilcone.lie_core import build_free_nilpotent, heisenberg

PYRAMID = [[1, 0, 1], [-1, 0, 1], [0, 1, 1], [0, -1, 1]]


def test_nnls_matches_bounded_least_squares():
    # scipy's bounded-variable solver is the oracle
    rng = np.random.default_rng(0)
    for _ in range(50):
        m, n = rng.integers(3, 8), rng.integers(2, 10)
        A, b = rng.standard_normal((m, n)), rng.standard_normal(m)
        x, r = nnls(A, b)
        ref = lsq_linear(A, b, bounds=(0, np.inf), method="bvls", tol=1e-14)
        assert (x >= 0).all()
        assert r == pytest.approx(np.linalg.norm(A @ ref.x - b), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=3, max_size=3))
def test_moreau_decomposition_polyhedral(p):
    c = Cone.from_generators(PYRAMID)
    p = np.array(p)
    q = c.projection(p)
    r = p - q
    g = np.array(PYRAMID, dtype=float)
    # residual lies in the polar cone and is orthogonal to the projection
    assert (g @ r <= 1e-9 * (1 + np.linalg.norm(p))).all()
    assert abs(q @ r) <= 1e-9 * (1 + np.linalg.norm(p)) ** 2
    assert c.distance(p) == pytest.approx(np.linalg.norm(r), abs=1e-10)


def test_halfspace_and_generator_forms_agree():
    gens = Cone.from_generators(PYRAMID)
    hs = Cone.from_halfspaces(gens.facets())
    rng = np.random.default_rng(1)
    for p in rng.standard_normal((200, 3)):
        assert gens.contains(p, 1e-9) == hs.contains(p, 1e-9) or abs(gens.distance(p)) < 1e-8


def test_lorentz_closed_form():
    c = Cone.lorentz([0, 0, 1])
    assert c.distance([1, 0, 0]) == pytest.approx(1 / math.sqrt(2))
    assert c.distance([0, 0, 5]) == 0
    assert c.distance([0, 0, -2]) == pytest.approx(2)
    # just outside along the boundary normal
    p = np.array([1 + 1e-8, 0, 1])
    assert c.distance(p) == pytest.approx(1e-8 / math.sqrt(2), rel=1e-6)


def _slsqp_distance(cone, p):
    u, w, z = cone.power_index
    a = float(cone.alpha)

    def gap(q):
        return max(q[u], 0) ** a * max(q[w], 0) ** (1 - a) - np.linalg.norm(q[list(z)])

    cons = [{"type": "ineq", "fun": gap}, {"type": "ineq", "fun": lambda q: q[u]}, {"type": "ineq", "fun": lambda q: q[w]}]
    best = math.inf
    starts = [np.abs(p) + 1, np.ones_like(p), np.abs(p) + 0.1, np.r_[1.0, 1.0, 0.0] * (1 + np.abs(p).max())]
    for start in starts:
        res = minimize(lambda q: np.sum((q - p) ** 2), start, constraints=cons, method="SLSQP", options={"ftol": 1e-15, "maxiter": 1000})
        if gap(res.x) > -1e-7 and min(res.x[u], res.x[w]) > -1e-9:
            best = min(best, math.sqrt(max(res.fun, 0.0)))
    return best


@pytest.mark.parametrize("alpha", [Fraction(1, 3), Fraction(1, 2), Fraction(3, 4)])
def test_power_cone_distance_matches_generic_solver(alpha):
    c = Cone.power(3, 0, 1, [2], alpha)
    rng = np.random.default_rng(2)
    for p in rng.standard_normal((15, 3)) * 2:
        ref = _slsqp_distance(c, p)
        assert c.distance(p) <= ref + 1e-7
        assert c.distance(p) == pytest.approx(ref, abs=1e-5)


def test_exact_membership_agrees():
    c = Cone.power(4, 0, 3, [1, 2], Fraction(1, 3))
    rng = np.random.default_rng(3)
    for p in rng.integers(-4, 5, size=(300, 4)):
        q = [Fraction(int(v)) for v in p]
        d = c.distance(p.astype(float))
        if d > 1e-9:
            assert not c.contains_exact(q)
        elif c.interior_margin(p.astype(float)) > 1e-9:
            assert c.contains_exact(q)


def test_interior_margin_and_boundary():
    c = Cone.lorentz([0, 0, 1])
    ok, m = interior_contains(c, [0, 0, 1])
    assert ok and m > 0
    ok, m = interior_contains(c, [1, 0, 1])
    assert not ok and m == pytest.approx(0, abs=1e-12)


def test_json_round_trip():
    cones = [
        Cone.from_generators(PYRAMID),
        Cone.lorentz([0, 1, 1]),
        Cone.power(4, 0, 3, [1, 2], Fraction(1, 3)),
        Cone.product([((0, 1, 2), Cone.lorentz([0, 0, 1])), ((3,), Cone.from_generators([[1]]))]),
    ]
    p = np.array([0.3, -0.2, 0.9, 0.5])
    for c in cones:
        d = Cone.from_json(c.to_json())
        q = p[: c.dim]
        assert d.kind == c.kind and d.distance(q) == pytest.approx(c.distance(q))


def test_controllability_criterion():
    h = heisenberg()
    # the center direction e3 is interior to a cone around it
    assert controllability_criterion(Cone.lorentz([0, 0, 1]), h).verdict == "controllable"
    # a halfspace whose boundary contains the center
    v = controllability_criterion(Cone.from_halfspaces([[1, 0, 0]]), h)
    assert v.verdict == "not-controllable-by-criterion"
    with pytest.raises(DegenerateCone):
        controllability_criterion(Cone.from_generators([[1, 0, 0]]), h)
    f = build_free_nilpotent(2, 3)
    assert controllability_criterion(Cone.whole_space(5), f).verdict == "controllable"


def test_degree_of_contact_examples():
    lor = Cone.lorentz([0, 0, 1])
    est = degree_of_contact(lor, [[1, 0, 1], [0, 1, 0]], [1, 0, 1])
    assert est.exponent == pytest.approx(2.0, abs=0.05)
    poly = Cone.from_generators(PYRAMID)
    est = degree_of_contact(poly, [[1, 0, 0], [0, 1, 0]], [1, 0, 1])
    assert est.exponent == pytest.approx(1.0, abs=0.05)
    with pytest.raises(ConeError):
        degree_of_contact(lor, [[1, 0, 0]], [1, 0, 0])


def test_min_lift_and_phi():
    c = Cone.lorentz([0, 0, 1])
    t = min_lift(c, np.array([1.0, 0, 0]), np.array([0, 0, 1.0]))
    assert t == pytest.approx(1.0, rel=1e-9)
    tab = phi_margin(c, [1, 0, 1], [0, 0, 1], [[0, 1, 0]], [1e-3, 1e-2, 1e-1], target_exponent=1.0)
    assert tab.monotone and tab.exponent == pytest.approx(2.0, abs=0.05) and tab.little_o
