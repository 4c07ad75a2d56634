from fractions import Fraction

import numpy as np
import pytest

from nilcone.cc_metric import endpoint
from nilcone.cones import Cone
from nilcone.lie_core import build_free_nilpotent, heisenberg, perturbed_filiform
from nilcone.reachability import attain, lemmas


def test_loglog_fit_recovers_power():
    x = np.array([1.0, 2.0, 4.0, 8.0])
    fit = lemmas.loglog_fit(x, 3 * x**1.5)
    assert fit.slope == pytest.approx(1.5) and fit.points == 4


def test_lemma1_small_grid():
    h = heisenberg()
    exp = lemmas.lemma1_threshold(h.element([0, 0, 1]), [Fraction(1, 2), Fraction(1, 4)])
    assert exp.all_witnessed() and exp.monotone() and exp.complete
    n = exp.n_min
    assert n[0] < n[1]
    for w in exp.witnesses:
        assert w.closes() and w.in_balls()
    assert all(r.n_min >= r.n_lower for r in exp.rows)


def test_lemma1_rejects_non_central():
    h = heisenberg()
    with pytest.raises(lemmas.ReachError):
        lemmas.lemma1_threshold(h.element([1, 0, 0]), [Fraction(1, 2)])


def test_lemma1_ball_inclusion():
    h = heisenberg()
    rep = lemmas.lemma1_ball_inclusion(h.element([0, 0, 1]), Fraction(1, 2), Fraction(1, 4), 100, samples=5)
    assert rep["verdict"] == "verified"


@pytest.mark.parametrize("alg,x,branch", [(heisenberg(), [1, 0, 0], "even"), (build_free_nilpotent(2, 3), [0, 0, 1, 0, 0], "odd")])
def test_reflection_word_closes(alg, x, branch):
    x = alg.element(x)
    ys, words, eps = lemmas.reflection_inputs(x, 3)
    rw = lemmas.lemma2_reflection_word(x, ys, words, eps)
    assert rw.branch == branch
    assert rw.closes() and rw.offsets_ok()
    assert endpoint(rw.word).is_zero()


def test_reflection_word_needs_layer_d_minus_one():
    h = heisenberg()
    with pytest.raises(lemmas.ReachError):
        lemmas.lemma2_reflection_word(h.element([0, 0, 1]), [], [], Fraction(1))


def test_corollary2_one_point():
    f = build_free_nilpotent(2, 3)
    exp = lemmas.corollary2_threshold(f.basis_element(2), [Fraction(1, 2)])
    assert exp.all_witnessed()
    assert all(w.closes() for w in exp.witnesses)


def test_theorem2_non_graded():
    a = perturbed_filiform()
    exp = lemmas.theorem2_lifted_threshold(a.basis_element(3), 3, [Fraction(1), Fraction(1, 2)])
    assert exp.all_witnessed() and exp.monotone()
    assert exp.notes["Q"] > 0
    for w in exp.witnesses:
        assert w.closes()


def test_theorem3_curves_close():
    h = heisenberg()
    x = h.element([0, 0, 1])
    c = lemmas.theorem3_closed_curve(x, Fraction(1, 4))
    assert c.closed() and c.max_offset() < 1 / 4
    evident = lemmas.theorem3_closed_curve(x, 2)
    assert evident.evident and evident.closed() and evident.max_offset() < 2


def test_attainable_full_space_covers_box():
    cloud = attain.attainable_sample(heisenberg(), Cone.whole_space(3), depth=8, budget=3.0, samples=2000, seed=1)
    assert cloud.admissible()
    assert cloud.coverage([-1, -1, -1], [1, 1, 1], cells=4) >= 0.95


def test_attainable_single_ray():
    cloud = attain.attainable_sample(heisenberg(), Cone.from_generators([[1, 0, 0]]), depth=5, samples=30)
    pts = cloud.coords()
    assert np.allclose(pts[:, 1:], 0) and (pts[:, 0] >= 0).all()


def test_halfspace_confinement():
    group, cone, _, _ = attain.demo_example()
    cloud = attain.attainable_sample(group, cone, depth=6, samples=200, seed=2)
    assert (cloud.chi() >= attain.CHI_FLOOR).all()


def test_hypotheses_checker():
    rep = attain.theorem1_hypotheses(*attain.demo_example())
    assert rep.ok, rep.failed
    rep = attain.theorem1_hypotheses(*attain.demo_example(Fraction(1, 2)))
    assert rep.failed == ["contact"]
    group, cone, p, v = attain.demo_example()
    rep = attain.theorem1_hypotheses(group, cone, [0, 0, 0, 1], [1, 0, 0, 2])
    assert rep.ok
    rep = attain.theorem1_hypotheses(group, cone, [1, 0, 0, 1], v)
    assert "p_on_boundary" in rep.failed and "p_in_top_term" in rep.failed


def test_halfspace_steering_reaches_targets():
    group, cone, p, v = attain.demo_example()
    st = attain.HalfspaceSteerer(group, cone, p, v, tol=1e-3)
    for t, x in [(Fraction(1, 2), [1, 0, 0]), (0, [0, 1, Fraction(-1, 2)]), (0, [0, 0, 0]), (0, [0, 0, 2])]:
        r = st.reach(t, x)
        assert r.distance <= 1e-3
        assert st.admissible(r.steps)
        assert r.endpoint.t >= 0
