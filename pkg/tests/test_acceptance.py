"""Acceptance criteria; each test prints one pass/fail line with its measured values."""

import random
from fractions import Fraction

import numpy as np

from nilcone import bch_group as bg
from nilcone.cc_metric import cc_upper_bound, homogeneity_check, subadditivity_check
from nilcone.cones import Cone, degree_of_contact
from nilcone.lie_core import build_free_nilpotent, heisenberg, perturbed_filiform, verify_algebra
from nilcone.reachability import attain, lemmas

from oracles import oracle_for, witt

ALGEBRAS = [(2, 2), (2, 3), (2, 4), (3, 2)]


def rand_elem(a, rng, span=6, den=5):
    return a.element([Fraction(rng.randint(-span, span), rng.randint(1, den)) for _ in range(a.dim)])


def test_criterion_01_exact_algebra(criterion):
    with criterion(1, "exact algebra suite", 10) as c:
        for l, d in ALGEBRAS:
            a = build_free_nilpotent(l, d)
            c.check(bool(verify_algebra(a)), f"free({l},{d}) antisymmetry+Jacobi")
            dims = [len(a.layer_indices(k)) for k in range(1, d + 1)]
            c.check(dims == [witt(l, k) for k in range(1, d + 1)], f"free({l},{d}) Hall dims {dims} = Witt")
            lcs = a.lower_central_series
            ok = True
            for i in range(1, d + 1):
                for j in range(1, d + 2 - i):
                    for u in lcs[i - 1].basis():
                        for v in lcs[j - 1].basis():
                            w = list(a.bracket(a.element(u), a.element(v)).coords)
                            ok &= lcs[i + j - 1].contains(w) if i + j <= d else not any(w)
            c.check(ok, f"free({l},{d}) [N^i,N^j] in N^(i+j)")


def test_criterion_02_exact_group(criterion):
    with criterion(2, "exact group suite", 60) as c:
        for l, d in ALGEBRAS:
            a = build_free_nilpotent(l, d)
            rng = random.Random(100 * l + d)
            e = bg.identity(a)
            assoc = ident = inv = True
            for _ in range(100):
                x, y, z = rand_elem(a, rng), rand_elem(a, rng), rand_elem(a, rng)
                assoc &= bg.bch_product(bg.bch_product(x, y), z) == bg.bch_product(x, bg.bch_product(y, z))
                ident &= bg.bch_product(x, e) == x == bg.bch_product(e, x)
                inv &= bg.bch_product(x, bg.inverse(x)) == e
            c.check(assoc and ident and inv, f"free({l},{d}) 100 triples exact")
            o = oracle_for(a.labels, d)
            agree = all(
                list(bg.bch_product(x, y).coords) == o.bch(list(x.coords), list(y.coords))
                for x, y in ((rand_elem(a, rng), rand_elem(a, rng)) for _ in range(50))
            )
            c.check(agree, f"free({l},{d}) 50 pairs = tensor log(exp exp)")


def test_criterion_03_dilations(criterion):
    with criterion(3, "dilation/automorphism suite", 10) as c:
        for l, d in ALGEBRAS:
            a = build_free_nilpotent(l, d)
            rng = random.Random(7 * l + d)
            ok = True
            for _ in range(20):
                x, y = rand_elem(a, rng), rand_elem(a, rng)
                xy = bg.bch_product(x, y)
                for t in (Fraction(1, 2), Fraction(2), Fraction(3)):
                    ok &= bg.dilation(t, xy) == bg.bch_product(bg.dilation(t, x), bg.dilation(t, y))
                m = bg.delta_minus_one
                ok &= m(xy) == bg.bch_product(m(x), m(y))
            c.check(ok, f"free({l},{d}) exact")


def test_criterion_04_asymptotic(criterion):
    with criterion(4, "asymptotic structure suite", 60) as c:
        a = perturbed_filiform()
        asym = bg.asymptotic_algebra(a)
        c.check(bool(verify_algebra(asym)), "asymptotic Jacobi exact")
        graded = True
        for i in range(a.dim):
            for j in range(a.dim):
                w = bg.asymptotic_bracket(a.basis_element(i), a.basis_element(j))
                tgt = a.layers[i] + a.layers[j]
                graded &= all(not w.coords[k] or a.layers[k] == tgt for k in range(a.dim))
        c.check(graded, "[N_k,N_l]^a in N_(k+l) exact")
        ts = np.logspace(1, 4, 7)
        x, y = a.element([1, 2, 0, 0]), a.element([-1, 1, 1, 0])
        res = [bg.alpha_residual(Fraction(int(round(t))), x, y).norm() for t in ts]
        slope = lemmas.loglog_fit(ts, res).slope
        c.check(abs(slope + 1) <= 0.1, f"residual slope {slope:.4f} = -1 +- 10%")
        rng = random.Random(4)
        pairs = [(rand_elem(a, rng), rand_elem(a, rng)) for _ in range(10)]
        A = bg.certify_beta_constant(pairs, [Fraction(int(round(t))) for t in ts])
        c.check(0 < A < np.inf, f"A = {A:.4g} finite on sample")


def test_criterion_05_cc_metric(criterion):
    with criterion(5, "CC metric suite", 300) as c:
        tight = True
        for a in (heisenberg(), build_free_nilpotent(2, 3), build_free_nilpotent(3, 2)):
            rng = random.Random(a.dim)
            for _ in range(10):
                x = a.zero()
                for i in a.generator_indices:
                    x.coords[i] = Fraction(rng.randint(-6, 6), rng.randint(1, 5))
                est = cc_upper_bound(x)
                tight &= est.upper == est.lower
        c.check(tight, "layer-1 targets upper == lower")
        h = heisenberg()
        rng = random.Random(5)
        targets = [rand_elem(h, rng) for _ in range(5)]
        worst = 0.0
        for x in targets:
            rep = homogeneity_check(x, ts=(2, 4, 8), limit=0.05)
            worst = max([worst] + [r["deviation"] for r in rep.rows])
        c.check(worst <= 0.05, f"homogeneity max deviation {worst:.4f} <= 5%")
        pairs = [(rand_elem(h, rng), rand_elem(h, rng)) for _ in range(100)]
        rep = subadditivity_check(pairs, tol=1e-9)
        c.check(rep.passed, f"subadditivity on {len(pairs)} pairs (tol 1e-9)")


def test_criterion_06_lemma1_exponent(criterion):
    with criterion(6, "threshold exponent recovery", 600) as c:
        grid = [Fraction(float(e)).limit_denominator(10**6) for e in np.logspace(np.log10(0.5), np.log10(0.05), 6)]
        h = heisenberg()
        exp = lemmas.lemma1_threshold(h.element([0, 0, 1]), grid)
        s = exp.fits["witnessed"].slope
        c.check(abs(s - 2.0) <= 0.2, f"Heisenberg slope {s:.3f} = 2.0 +- 10%")
        c.check(exp.all_witnessed() and len(exp.rows) >= 6, "Heisenberg all witnessed")
        f = build_free_nilpotent(2, 3)
        grid = [Fraction(float(e)).limit_denominator(10**6) for e in np.logspace(0, -1, 6)]
        exp = lemmas.lemma1_threshold(f.element([0, 0, 0, 10, 0]), grid)
        s = exp.fits["witnessed"].slope
        c.check(abs(s - 1.5) <= 0.15, f"free(2,3) slope {s:.3f} = 1.5 +- 10%")
        c.check(exp.all_witnessed() and len(exp.rows) >= 6, "free(2,3) all witnessed")


def test_criterion_07_lemma2_exact(criterion):
    with criterion(7, "reflection word exactness", 60) as c:
        for a, x in ((heisenberg(), [1, 0, 0]), (build_free_nilpotent(2, 3), [0, 0, 1, 0, 0])):
            x = a.element(x)
            for n in (1, 2, 3):
                ys, words, eps = lemmas.reflection_inputs(x, n, seed=n)
                rw = lemmas.lemma2_reflection_word(x, ys, words, eps)
                c.check(rw.product().is_zero(), f"d={a.step} {rw.branch} n={n} product exactly 0")
                c.check(rw.offsets_ok(), f"d={a.step} n={n} factors in B(x, 2eps)")


def test_criterion_08_theorem3(criterion):
    with criterion(8, "closed curve length exponents", 600) as c:
        cases = [
            ("(2,2)", heisenberg().element([0, 0, 1]), [Fraction(1, 2**k) for k in range(2, 6)]),
            ("(2,3)", build_free_nilpotent(2, 3).basis_element(2), [Fraction(1, 2**k) for k in range(2, 5)]),
        ]
        for name, x, grid in cases:
            sw = lemmas.theorem3_sweep(x, grid)
            c.check(all(sw["closed"]), f"{name} all curves exactly closed")
            c.check(max(sw["max_offset_ratio"]) < 1, f"{name} directions within x + B(eps)")
            tgt = sw["expected_slope"]
            c.check(abs(sw["slope"] - tgt) <= 0.15 * tgt, f"{name} slope {sw['slope']:.3f} = {tgt:.2f} +- 15%, P = {sw['P']:.4g}")


def test_criterion_09_contact(criterion):
    with criterion(9, "degree of contact", 60) as c:
        est = degree_of_contact(Cone.lorentz([0, 0, 1]), [[1, 0, 1], [0, 1, 0]], [1, 0, 1])
        c.check(abs(est.exponent - 2.0) <= 0.05, f"Lorentz tangent exponent {est.exponent:.4f}")
        poly = Cone.from_generators([[1, 0, 1], [-1, 0, 1], [0, 1, 1], [0, -1, 1]])
        est = degree_of_contact(poly, [[1, 0, 0], [0, 1, 0]], [1, 0, 1])
        c.check(abs(est.exponent - 1.0) <= 0.05, f"transversal polyhedral exponent {est.exponent:.4f}")


def test_criterion_10_theorem1_demo(criterion):
    with criterion(10, "halfspace attainability demonstration", 900) as c:
        rep = attain.theorem1_demonstration(*attain.demo_example())
        lo = rep.hypotheses.checks["contact"]["lower"]
        c.check(rep.hypotheses.ok and lo > 2, f"hypotheses hold, contact lower bound {lo:.3f} > 2")
        n_ok = sum(r.distance <= 1e-3 for r in rep.reached)
        c.check(len(rep.reached) == 125 and n_ok == 125, f"{n_ok}/125 grid points within 1e-3 (max {rep.max_distance:.2e})")
        c.check(rep.admissible, "all words admissible")
        c.check(rep.negative_chi == 0, f"{rep.negative_chi} endpoints with chi < -1e-9")
        ctrl = attain.theorem1_hypotheses(*attain.demo_example(Fraction(1, 2)))
        c.check(ctrl.failed == ["contact"], f"control rejected on {ctrl.failed}")
