"""Command line front end: ``nilcone <group> <command> [options]``.

Every command prints its report as JSON.  With ``--out DIR`` it also writes
``report.json``, ``table.csv`` (when the command has a table) and
``witnesses.json`` (when it produced words).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from .. import bch_group as bg
from ..cc_metric import cc_distance, witness_is_sound
from ..cones import DEFAULT_RADII, Cone, degree_of_contact, load_cone, phi_margin
from ..exact import to_fraction
from ..lie_core import (
    algebra_to_spec,
    build_free_nilpotent,
    heisenberg,
    load_algebra,
    perturbed_filiform,
    verify_algebra,
    witt_dimension,
)
from ..semidirect import group_from_spec
from . import attain, lemmas


def parse_vector(text: str) -> list[Fraction]:
    return [to_fraction(t.strip()) for t in text.split(",") if t.strip()]


def parse_rows(text: str) -> list[list[float]]:
    return [[float(c) for c in parse_vector(r)] for r in text.split(";") if r.strip()]


def parse_eps_grid(text: str) -> list[Fraction]:
    """``a:b:n`` gives ``n`` log-spaced values from ``a`` to ``b`` (rationalized)."""
    a, b, n = text.split(":")
    vals = np.logspace(math.log10(float(to_fraction(a))), math.log10(float(to_fraction(b))), int(n))
    return sorted({Fraction(float(v)).limit_denominator(10**6) for v in vals}, reverse=True)


def _json_default(o):
    if isinstance(o, Fraction):
        return str(o) if o.denominator != 1 else o.numerator
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if hasattr(o, "to_json"):
        return o.to_json()
    if hasattr(o, "coords"):
        return [_json_default(c) if isinstance(c, Fraction) else float(c) for c in o.coords]
    raise TypeError(f"cannot serialize {type(o).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, default=_json_default, indent=2, allow_nan=True)


def emit(args, report: dict, table: str | None = None, witnesses=None) -> int:
    report.setdefault("seed", args.seed)
    report.setdefault("command", " ".join(sys.argv[1:]))
    text = dumps(report)
    print(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(text + "\n")
        if table is not None:
            (out / "table.csv").write_text(table)
        if witnesses is not None:
            (out / "witnesses.json").write_text(dumps(witnesses) + "\n")
    return 0


def _budget(args, default):
    return default if args.budget is None else type(default)(args.budget)


def _tol(args, default):
    return default if args.tol is None else args.tol


def _algebra(args):
    if args.algebra:
        return load_algebra(args.algebra)
    return heisenberg()


def _element(alg, text):
    v = parse_vector(text)
    if len(v) != alg.dim:
        raise SystemExit(f"expected {alg.dim} coordinates, got {len(v)}")
    return alg.element(v)


# -- algebra -------------------------------------------------------------------


def cmd_algebra_build(args):
    if args.kind == "free":
        a = build_free_nilpotent(args.l, args.d)
    elif args.kind == "heisenberg":
        a = heisenberg()
    else:
        a = perturbed_filiform()
    return emit(args, algebra_to_spec(a))


def cmd_algebra_info(args):
    a = _algebra(args)
    rep = verify_algebra(a)
    lcs = [len(s) for s in a.lower_central_series]
    out = {
        "dim": a.dim,
        "step": a.step,
        "graded": a.is_graded,
        "layers": list(a.layers) if a.layers is not None else None,
        "lower_central_series_dims": lcs,
        "center": a.center_indices,
        "verified": bool(rep),
        "report": rep.__dict__,
    }
    if args.l:
        out["witt"] = [witt_dimension(args.l, k) for k in range(1, a.step + 1)]
    return emit(args, out)


# -- group ----------------------------------------------------------------------


def cmd_group_product(args):
    a = _algebra(args)
    x, y = _element(a, args.x), _element(a, args.y)
    return emit(args, {"x": x, "y": y, "product": bg.bch_product(x, y)})


def cmd_group_dilate(args):
    a = _algebra(args)
    x = _element(a, args.x)
    t = to_fraction(args.t)
    return emit(args, {"x": x, "t": t, "dilated": bg.dilation(t, x)})


def cmd_group_asym(args):
    a = _algebra(args)
    x, y = _element(a, args.x), _element(a, args.y)
    ts = [float(t) for t in args.ts.split(",")]
    res = [float(bg.alpha_residual(Fraction(t).limit_denominator(10**6), x, y).norm()) for t in ts]
    fit = lemmas.loglog_fit(ts, res) if sum(r > 0 for r in res) >= 2 else None
    out = {
        "asymptotic_bracket": bg.asymptotic_bracket(x, y),
        "ts": ts,
        "residual": res,
        "slope": None if fit is None else fit.slope,
        "beta_constant": bg.certify_beta_constant([(x, y)], [Fraction(int(t)) for t in ts if t >= 1]),
    }
    table = "t,residual\n" + "".join(f"{t!r},{r!r}\n" for t, r in zip(ts, res))
    return emit(args, out, table)


# -- metric ------------------------------------------------------------------------


def cmd_ccdist(args):
    a = _algebra(args)
    x = _element(a, args.x)
    y = _element(a, args.y) if args.y else a.zero()
    est = cc_distance(y, x, tol=_tol(args, 1e-6), budget=_budget(args, 100_000))
    out = est.to_json()
    out["sound"] = witness_is_sound(est)
    return emit(args, out, witnesses={"witness": est.witness})


# -- cones --------------------------------------------------------------------------


def _cone(args) -> Cone:
    if not args.cone:
        raise SystemExit("--cone is required")
    return load_cone(args.cone)


def cmd_cone_dist(args):
    c = _cone(args)
    p = np.array([float(v) for v in parse_vector(args.point)])
    return emit(args, {"distance": c.distance(p), "projection": c.projection(p), "contains": c.contains(p)})


def cmd_cone_contact(args):
    c = _cone(args)
    p = [float(v) for v in parse_vector(args.point)]
    est = degree_of_contact(c, parse_rows(args.subspace), p, directions=args.directions, seed=args.seed)
    table = "radius,distance\n" + "".join(f"{r!r},{d!r}\n" for r, d in zip(DEFAULT_RADII, est.distances))
    return emit(args, est.to_json(), table)


def cmd_cone_phi(args):
    c = _cone(args)
    eps = [float(e) for e in parse_eps_grid(args.eps_grid)]
    tab = phi_margin(
        c,
        [float(v) for v in parse_vector(args.point)],
        [float(v) for v in parse_vector(args.v)],
        parse_rows(args.subspace),
        eps,
        target_exponent=args.target,
        seed=args.seed,
    )
    return emit(args, tab.to_json(), tab.csv())


# -- reachability experiments --------------------------------------------------------


def _experiment(args, exp):
    witnesses = [w.to_json() for w in exp.witnesses] if exp.witnesses else None
    return emit(args, exp.to_json(), exp.csv(), witnesses)


def cmd_reach_lemma1(args):
    a = _algebra(args)
    z = _element(a, args.x)
    return _experiment(args, lemmas.lemma1_threshold(z, parse_eps_grid(args.eps_grid), limit=_budget(args, 10**7)))


def cmd_reach_lemma2(args):
    a = _algebra(args)
    x = _element(a, args.x)
    ys, words, eps = lemmas.reflection_inputs(x, args.n, seed=args.seed)
    rw = lemmas.lemma2_reflection_word(x, ys, words, eps)
    out = {
        "branch": rw.branch,
        "eps": eps,
        "factors": rw.factors,
        "product": rw.product(),
        "closes": rw.closes(),
        "offsets_ok": rw.offsets_ok(),
    }
    return emit(args, out, witnesses={"word": rw.word.to_json(), "offsets": [w.to_json() for w in rw.offsets]})


def cmd_reach_cor2(args):
    a = _algebra(args)
    x = _element(a, args.x)
    return _experiment(args, lemmas.corollary2_threshold(x, parse_eps_grid(args.eps_grid), limit=_budget(args, 10**7)))


def cmd_reach_thm2(args):
    a = _algebra(args)
    x = _element(a, args.x)
    return _experiment(args, lemmas.theorem2_lifted_threshold(x, args.k, parse_eps_grid(args.eps_grid), limit=_budget(args, 10**7)))


def cmd_reach_thm3(args):
    a = _algebra(args)
    x = _element(a, args.x)
    sweep = lemmas.theorem3_sweep(x, parse_eps_grid(args.eps_grid))
    curves = sweep.pop("curves")
    table = "eps,length,steps,closed\n" + "".join(
        f"{float(e)!r},{float(l)!r},{s},{c}\n" for e, l, s, c in zip(sweep["eps"], sweep["lengths"], sweep["steps"], sweep["closed"])
    )
    return emit(args, sweep, table, [c.word.to_json() for c in curves])


# -- attainable sets --------------------------------------------------------------------


def cmd_attain_sample(args):
    a = _algebra(args)
    target = a
    if args.derivation:
        with open(args.derivation) as fh:
            target = group_from_spec(a, json.load(fh))
    cone = _cone(args)
    cloud = attain.attainable_sample(target, cone, depth=args.depth, budget=_budget(args, 1.0), samples=args.samples, seed=args.seed)
    pts = cloud.coords()
    chi = cloud.chi()
    out = {
        "samples": len(pts),
        "admissible": cloud.admissible(),
        "min_chi": float(chi.min()) if len(chi) else None,
        "negative_chi": int((chi < attain.CHI_FLOOR).sum()) if len(chi) else 0,
        "bounding_box": [pts.min(axis=0).tolist(), pts.max(axis=0).tolist()],
    }
    table = ",".join(f"c{i}" for i in range(pts.shape[1])) + "\n" + "".join(",".join(repr(float(v)) for v in r) + "\n" for r in pts)
    words = [[{"direction": d.tolist(), "time": t} for d, t in w] for w in cloud.words]
    return emit(args, out, table, words)


# -- demonstration ----------------------------------------------------------------------


def cmd_demo_theorem1(args):
    group, cone, p, v = attain.demo_example(to_fraction(args.alpha))
    t0 = time.time()
    rep = attain.theorem1_demonstration(group, cone, p, v, tol=_tol(args, 1e-3), seed=args.seed)
    out = rep.to_json()
    out["elapsed"] = time.time() - t0
    witnesses = [
        {"target": r.to_json()["target"], "steps": [{"time": h, "direction": d} for h, d in r.steps]} for r in rep.reached
    ]
    return emit(args, out, rep.csv() if rep.reached else None, witnesses)


# -- parser ------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--algebra", help="algebra JSON file (default: Heisenberg)")
    common.add_argument("--cone", help="cone JSON file")
    common.add_argument("--eps-grid", default="0.5:0.05:6", help="a:b:n, n log-spaced values")
    common.add_argument("--budget", type=float, default=None)
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="directory for report.json, table.csv, witnesses.json")

    p = argparse.ArgumentParser(prog="nilcone", description="Cone-constrained reachability on nilpotent groups.")
    top = p.add_subparsers(dest="group", required=True)

    def sub(parent, name, func, help_):
        sp = parent.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=func)
        return sp

    g = top.add_parser("algebra", help="build or inspect nilpotent algebras").add_subparsers(dest="cmd", required=True)
    s = sub(g, "build", cmd_algebra_build, "write an algebra as JSON")
    s.add_argument("--kind", choices=["free", "heisenberg", "filiform"], default="free")
    s.add_argument("--l", type=int, default=2)
    s.add_argument("--d", type=int, default=2)
    s = sub(g, "info", cmd_algebra_info, "structure report and identity checks")
    s.add_argument("--l", type=int, default=0, help="compare layer dimensions with the Witt formula for l generators")

    g = top.add_parser("group", help="BCH group operations").add_subparsers(dest="cmd", required=True)
    s = sub(g, "product", cmd_group_product, "x·y")
    s.add_argument("--x", required=True)
    s.add_argument("--y", required=True)
    s = sub(g, "dilate", cmd_group_dilate, "δ_t x")
    s.add_argument("--x", required=True)
    s.add_argument("--t", required=True)
    s = sub(g, "asym", cmd_group_asym, "asymptotic bracket and rescaling residuals")
    s.add_argument("--x", required=True)
    s.add_argument("--y", required=True)
    s.add_argument("--ts", default="10,100,1000,10000")

    s = sub(top, "ccdist", cmd_ccdist, "CC distance bounds with a witness word")
    s.add_argument("--x", required=True)
    s.add_argument("--y")

    g = top.add_parser("cone", help="cone geometry").add_subparsers(dest="cmd", required=True)
    s = sub(g, "dist", cmd_cone_dist, "distance to the cone")
    s.add_argument("--point", required=True)
    s = sub(g, "contact", cmd_cone_contact, "degree of contact with a subspace")
    s.add_argument("--point", required=True)
    s.add_argument("--subspace", required=True, help="rows separated by ';'")
    s.add_argument("--directions", type=int, default=256)
    s = sub(g, "phi", cmd_cone_phi, "interior margin φ(ε) table")
    s.add_argument("--point", required=True)
    s.add_argument("--v", required=True)
    s.add_argument("--subspace", required=True)
    s.add_argument("--target", type=float)

    g = top.add_parser("reach", help="threshold and closed-curve experiments").add_subparsers(dest="cmd", required=True)
    for name, func, helptext in [
        ("lemma1", cmd_reach_lemma1, "least n with -z a product of n points near z (central z)"),
        ("cor2", cmd_reach_cor2, "same for z in N^(d-1)"),
        ("thm2", cmd_reach_thm2, "same on a general algebra via a free lift"),
        ("thm3", cmd_reach_thm3, "closed curves tangent to x + B(ε)"),
        ("lemma2", cmd_reach_lemma2, "reflection word that closes exactly"),
    ]:
        s = sub(g, name, func, helptext)
        s.add_argument("--x", required=True)
        if name == "thm2":
            s.add_argument("--k", type=int, required=True)
        if name == "lemma2":
            s.add_argument("--n", type=int, default=3)

    g = top.add_parser("attain", help="attainable sets").add_subparsers(dest="cmd", required=True)
    s = sub(g, "sample", cmd_attain_sample, "random admissible words")
    s.add_argument("--derivation", help="JSON {ad_v, layer1} for a semidirect extension")
    s.add_argument("--depth", type=int, default=8)
    s.add_argument("--samples", type=int, default=1000)

    g = top.add_parser("demo", help="worked examples").add_subparsers(dest="cmd", required=True)
    s = sub(g, "theorem1", cmd_demo_theorem1, "halfspace attainability on R ⋉ Heisenberg")
    s.add_argument("--alpha", default="1/3", help="power cone exponent; contact order is 1/alpha")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
