"""Horizontal words and two-sided Carnot-Caratheodory distance estimates.

Upper bounds come from explicit witness words whose directions lie in the
first layer.  The witness is built in two stages:

1. layered steering: a straight step removes the layer-1 displacement, then
   every higher layer is generated by iterated group commutators of single
   generator steps (the group commutator of points in ``N^p`` and ``N^q``
   equals their bracket modulo ``N^{p+q+1}``);
2. optional local refinement of the step durations by coordinate descent,
   where any remaining displacement is steered away again so every candidate
   is still an exact witness.

Lower bounds use only the abelianisation: a horizontal curve is at least as
long as its layer-1 displacement.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .bch_group import bch_product, delta_minus_one, dilation, inverse
from .exact import RowSpace, fraction_str, rational_sqrt, solve_combination, to_fraction
from .lie_core import AlgebraError, Element, NilpotentAlgebra

DEFAULT_TOL = 1e-6
DEFAULT_BUDGET = 100_000
DEFAULT_MAX_STEPS = 64
ROOT_DENOMINATOR = 10**6


# ---------------------------------------------------------------------------
# words


def _direction_norm(direction: Element):
    sq = sum(c * c for c in direction.coords)
    if direction.exact:
        r = rational_sqrt(sq)
        if r is not None:
            return r
    return math.sqrt(float(sq))


@dataclass
class ControlWord:
    """Sequence of ``(direction, duration)`` steps, the curve ``exp(t1 ξ1)...exp(tn ξn)``."""

    algebra: NilpotentAlgebra
    steps: list[tuple[Element, object]] = field(default_factory=list)
    constraint: str = "horizontal"

    def __len__(self) -> int:
        return len(self.steps)

    def __add__(self, other: "ControlWord") -> "ControlWord":
        return ControlWord(self.algebra, self.steps + other.steps, self.constraint)

    def inverse(self) -> "ControlWord":
        return ControlWord(self.algebra, [(-d, t) for d, t in reversed(self.steps)], self.constraint)

    @property
    def exact(self) -> bool:
        return all(d.exact and isinstance(t, (int, Fraction)) for d, t in self.steps)

    def points(self) -> list[Element]:
        return [d * t for d, t in self.steps]

    def endpoint(self) -> Element:
        return endpoint(self)

    def length(self):
        return word_length(self)

    def step_lengths(self) -> list:
        return [_direction_norm(d) * t for d, t in self.steps]

    def simplified(self) -> "ControlWord":
        """Merge neighbouring steps along the same line (exact for exp)."""
        out: list[tuple[Element, object]] = []
        for d, t in self.steps:
            if t == 0 or d.is_zero():
                continue
            if out:
                pd, pt = out[-1]
                if pd == d:
                    out[-1] = (pd, pt + t)
                    continue
                if pd == -d:
                    rest = pt - t
                    out.pop()
                    if rest > 0:
                        out.append((pd, rest))
                    elif rest < 0:
                        out.append((d, -rest))
                    continue
            out.append((d, t))
        if len(out) != len(self.steps):
            return ControlWord(self.algebra, out, self.constraint).simplified()
        return ControlWord(self.algebra, out, self.constraint)

    def split_equal(self, n: int) -> list["ControlWord"]:
        """Cut into ``n`` consecutive pieces of equal length.

        Exact whenever every step length is rational.
        """
        if n < 1:
            raise ValueError("n must be positive")
        lengths = self.step_lengths()
        total = sum(lengths)
        exact = all(isinstance(x, (int, Fraction)) for x in lengths)
        piece = (Fraction(total) / n) if exact else float(total) / n
        pieces: list[ControlWord] = []
        cur: list[tuple[Element, object]] = []
        room = piece
        for (d, t), ell in zip(self.steps, lengths):
            speed = ell / t if t else 0
            rem_t, rem_len = t, ell
            while rem_len > room and len(pieces) < n - 1:
                dt = room / speed
                if not exact:
                    dt = float(dt)
                cur.append((d, dt))
                rem_t -= dt
                rem_len -= room
                pieces.append(ControlWord(self.algebra, cur, self.constraint))
                cur, room = [], piece
            if rem_t > 0:
                cur.append((d, rem_t))
                room -= rem_len
        pieces.append(ControlWord(self.algebra, cur, self.constraint))
        while len(pieces) < n:
            pieces.append(ControlWord(self.algebra, [], self.constraint))
        return pieces

    def to_json(self) -> list:
        def enc(v):
            return fraction_str(v) if isinstance(v, (int, Fraction)) else float(v)

        return [{"direction": [enc(c) for c in d.coords], "duration": enc(t)} for d, t in self.steps]

    @classmethod
    def from_json(cls, algebra: NilpotentAlgebra, data: Sequence[dict], constraint: str = "horizontal") -> "ControlWord":
        steps = []
        for s in data:
            d = algebra.element([to_fraction(c) if isinstance(c, str) else c for c in s["direction"]])
            t = s["duration"]
            steps.append((d, to_fraction(t) if isinstance(t, str) else float(t)))
        return cls(algebra, steps, constraint)


def endpoint(word: ControlWord, exact: bool | None = None) -> Element:
    a = word.algebra
    if exact is None:
        exact = word.exact
    out = a.zero(exact)
    for d, t in word.steps:
        out = bch_product(out, d * t)
    return out


def word_length(word: ControlWord):
    """Sum of ``t_i |ξ_i|``; exact when every direction norm is rational."""
    return sum(word.step_lengths(), Fraction(0) if word.exact else 0.0)


def is_horizontal(word: ControlWord) -> bool:
    a = word.algebra
    gens = set(a.generator_indices)
    return all(all(not c for i, c in enumerate(d.coords) if i not in gens) for d, _ in word.steps)


# ---------------------------------------------------------------------------
# layered steering


class _LayerBasis:
    """Right-nested generator brackets whose top components span a layer."""

    def __init__(self, algebra: NilpotentAlgebra, k: int):
        self.k = k
        self.indices = algebra.layer_indices(k)
        gens = algebra.generator_indices
        space = RowSpace(len(self.indices))
        self.monomials: list[tuple[int, ...]] = []
        self.leads: list[list[Fraction]] = []
        for seq in itertools.product(gens, repeat=k):
            if len(space) == len(self.indices):
                break
            if k >= 2 and seq[-1] == seq[-2]:
                continue
            v = algebra.basis_element(seq[-1])
            for g in reversed(seq[:-1]):
                v = algebra.bracket(algebra.basis_element(g), v)
            lead = [v.coords[i] for i in self.indices]
            if space.add(lead):
                self.monomials.append(seq)
                self.leads.append(lead)
        if len(space) != len(self.indices):
            raise AlgebraError(f"layer {k} is not generated by layer 1")
        if self.leads:
            self.inv = np.linalg.inv(np.array([[float(c) for c in col] for col in self.leads]).T)

    def coefficients(self, r: Element) -> list:
        comp = [r.coords[i] for i in self.indices]
        if r.exact:
            sol = solve_combination(self.leads, comp)
            assert sol is not None
            return sol
        return list(self.inv.dot(np.asarray(comp, dtype=float)))


def _layer_bases(algebra: NilpotentAlgebra) -> dict[int, _LayerBasis]:
    cached = algebra.__dict__.get("_steer_bases")
    if cached is None:
        if algebra.layers is None:
            raise AlgebraError("steering needs declared layers")
        cached = {k: _LayerBasis(algebra, k) for k in range(2, algebra.step + 1) if algebra.layer_indices(k)}
        algebra.__dict__["_steer_bases"] = cached
    return cached


def _root(c, k: int, exact: bool):
    """k-th root of |c|: exact when it is rational, else a rational approximation."""
    if not exact:
        return abs(float(c)) ** (1.0 / k)
    c = abs(to_fraction(c))
    approx = float(c) ** (1.0 / k)
    guess = Fraction(approx).limit_denominator(ROOT_DENOMINATOR)
    for cand in (guess, Fraction(round(approx))):
        if cand > 0 and cand**k == c:
            return cand
    if guess == 0 or abs(float(guess) - approx) > 1e-6 * approx:
        guess = Fraction(approx)
    return guess


def _step(algebra: NilpotentAlgebra, gen: int, s, exact: bool) -> tuple[Element, object]:
    e = algebra.basis_element(gen, exact)
    if s < 0:
        return (-e, -s)
    return (e, s)


def commutator_word(algebra: NilpotentAlgebra, seq: Sequence[int], scalars: Sequence, exact: bool) -> ControlWord:
    """Word for the iterated group commutator ``{s1 e_i1, {s2 e_i2, ... s_k e_ik}}``.

    Its endpoint is ``s1...sk [e_i1, [..., e_ik]]`` modulo ``N^{k+1}``.
    """
    w = ControlWord(algebra, [_step(algebra, seq[-1], scalars[-1], exact)])
    for g, s in zip(reversed(seq[:-1]), reversed(scalars[:-1])):
        a = ControlWord(algebra, [_step(algebra, g, s, exact)])
        w = a + w + a.inverse() + w.inverse()
    return w


def steer(target: Element) -> ControlWord:
    """Horizontal word hitting ``target`` (exactly, for exact targets)."""
    a = target.algebra
    exact = target.exact
    bases = _layer_bases(a)
    word = ControlWord(a, [])
    r = target
    first = a.layer_component(target, 1)
    if not first.is_zero():
        word.steps.append((first, Fraction(1) if exact else 1.0))
        r = bch_product(-first, r)
    for k in range(2, a.step + 1):
        if k not in bases:
            continue
        basis = bases[k]
        coeffs = basis.coefficients(r)
        part = ControlWord(a, [])
        for seq, c in zip(basis.monomials, coeffs):
            if not c:
                continue
            s = _root(c, k, exact)
            first_s = (to_fraction(c) / s ** (k - 1)) if exact else math.copysign(s, float(c))
            part = part + commutator_word(a, seq, [first_s] + [s] * (k - 1), exact)
        if part.steps:
            word = word + part
            r = bch_product(-endpoint(part, exact), r)
    return word.simplified()


# ---------------------------------------------------------------------------
# estimates


@dataclass
class DistanceEstimate:
    target: Element
    upper: float
    lower: float
    witness: ControlWord
    methods: list[str]
    hit: bool
    residual: float

    def to_json(self) -> dict:
        return {
            "target": [fraction_str(c) if self.target.exact else float(c) for c in self.target.coords],
            "upper": float(self.upper),
            "lower": float(self.lower),
            "hit": self.hit,
            "residual": self.residual,
            "methods": self.methods,
            "witness": self.witness.to_json(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def _residual(word: ControlWord, target: Element, exact: bool) -> float:
    end = endpoint(word, exact)
    if exact and target.exact:
        return 0.0 if end == target else (end - target).norm()
    return (end.to_float() - target.to_float()).norm()


def _refine(word: ControlWord, target: Element, budget: int) -> tuple[ControlWord, int]:
    """Coordinate descent on relative step durations; every candidate is re-steered."""
    a = target.algebra
    tf = target.to_float()
    dirs = [d.to_float() for d, _ in word.steps]
    norms = np.array([d.norm() for d in dirs])
    durs = np.array([float(t) for _, t in word.steps])
    evals = 0

    def build(ds):
        w = ControlWord(a, [(d, float(t)) for d, t in zip(dirs, ds) if t > 0])
        fix = steer(bch_product(-endpoint(w, False), tf))
        return w, fix

    def cost(ds):
        w, fix = build(ds)
        return float(np.dot(ds, norms)) + float(word_length(fix))

    best = cost(durs)
    evals += 1
    h = 0.25
    while h > 1e-3 and evals < budget:
        improved = False
        for i in range(len(durs)):
            for sgn in (-1.0, 1.0):
                trial = durs.copy()
                trial[i] *= 1 + sgn * h
                c = cost(trial)
                evals += 1
                if c < best - 1e-12 * (1 + best):
                    best, durs, improved = c, trial, True
                    break
            if evals >= budget:
                break
        if not improved:
            h /= 2
    if target.exact:
        steps = [(d, Fraction(float(t)).limit_denominator(ROOT_DENOMINATOR)) for (d, _), t in zip(word.steps, durs)]
        w = ControlWord(a, [(d, t) for d, t in steps if t > 0])
        fix = steer(bch_product(-endpoint(w, True), target))
        return (w + fix).simplified(), evals
    w, fix = build(durs)
    return (w + fix).simplified(), evals


def cc_lower_bound(target: Element) -> float:
    """Euclidean norm of the layer-1 displacement (length bound through N/N^2)."""
    # same rounding path as word lengths, so a single straight step is tight to the bit
    return float(_direction_norm(target.algebra.layer_component(target, 1)))


def cc_upper_bound(
    target: Element,
    tol: float = DEFAULT_TOL,
    refine: bool = True,
    budget: int = DEFAULT_BUDGET,
    max_steps: int = DEFAULT_MAX_STEPS,
    hints: Iterable[ControlWord] = (),
) -> DistanceEstimate:
    """Horizontal witness word for ``target`` and its length.

    ``hints`` are extra candidate words; any that reach the target within
    ``tol`` compete with the constructed witness.  ``max_steps`` caps the words
    handed to refinement (steering output itself is never truncated).
    """
    a = target.algebra
    exact = target.exact
    lower = cc_lower_bound(target)
    if target.is_zero():
        return DistanceEstimate(target, 0.0, 0.0, ControlWord(a, []), ["trivial"], True, 0.0)
    methods = ["layered-steering"]
    best = steer(target)
    if refine and len(best) <= max_steps and budget > 0:
        cand, _ = _refine(best, target, budget)
        if float(word_length(cand)) < float(word_length(best)) and _residual(cand, target, exact) <= tol:
            best = cand
            methods.append("coordinate-descent")
    for h in hints:
        if _residual(h, target, exact and h.exact) <= tol and float(word_length(h)) < float(word_length(best)):
            best = h
            methods.append("hint")
    res = _residual(best, target, exact and best.exact)
    hit = res <= tol
    if not hit:
        methods.append("no-witness")
    return DistanceEstimate(target, float(word_length(best)), lower, best, methods, hit, res)


def cc_distance(x: Element, y: Element, **opts) -> DistanceEstimate:
    """Estimate of κ(x, y), computed as the based estimate of ``x^{-1} y``."""
    est = cc_upper_bound(bch_product(inverse(x), y), **opts)
    est.methods.insert(0, "left-invariant-reduction")
    return est


def witness_is_sound(est: DistanceEstimate, rel: float = 1e-12) -> bool:
    w = est.witness
    if not is_horizontal(w):
        return False
    length = float(word_length(w))
    if abs(length - est.upper) > rel * max(1.0, est.upper):
        return False
    return _residual(w, est.target, est.target.exact and w.exact) <= max(est.residual, 0.0) + rel


# ---------------------------------------------------------------------------
# property checks


@dataclass
class CheckReport:
    name: str
    rows: list[dict]
    passed: bool

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, "rows": self.rows}


def homogeneity_check(x: Element, ts: Sequence = (2, 4, 8), limit: float = 0.05, **opts) -> CheckReport:
    base = cc_upper_bound(x, **opts).upper
    rows = []
    for t in ts:
        u = cc_upper_bound(dilation(t, x), **opts).upper
        scale = float(t) * base
        dev = 0.0 if scale == 0 and u == 0 else abs(u - scale) / scale
        rows.append({"t": float(t), "upper": u, "expected": scale, "deviation": dev, "flag": dev > limit})
    return CheckReport("homogeneity", rows, not any(r["flag"] for r in rows))


def isometry_check_delta_minus_one(sample: Iterable[Element], limit: float = 0.05, **opts) -> CheckReport:
    rows = []
    for x in sample:
        u = cc_upper_bound(x, **opts).upper
        v = cc_upper_bound(delta_minus_one(x), **opts).upper
        gap = 0.0 if u == v else abs(u - v) / max(u, v)
        rows.append({"upper": u, "upper_reflected": v, "gap": gap, "flag": gap > limit})
    return CheckReport("delta_minus_one_isometry", rows, not any(r["flag"] for r in rows))


def subadditivity_check(pairs: Iterable[tuple[Element, Element]], tol: float = 1e-9, **opts) -> CheckReport:
    """``upper(x·y) <= upper(x) + upper(y) + tol``; the concatenated witness is offered as a hint."""
    rows = []
    for x, y in pairs:
        ex, ey = cc_upper_bound(x, **opts), cc_upper_bound(y, **opts)
        xy = bch_product(x, y)
        steer_only = cc_upper_bound(xy, **opts)
        joint = cc_upper_bound(xy, hints=[ex.witness + ey.witness], **opts)
        bound = ex.upper + ey.upper
        rows.append(
            {
                "upper_x": ex.upper,
                "upper_y": ey.upper,
                "upper_xy": joint.upper,
                "upper_xy_without_hint": steer_only.upper,
                "holds": joint.upper <= bound + tol,
            }
        )
    return CheckReport("subadditivity", rows, all(r["holds"] for r in rows))


def asymptotic_metric_estimate(x: Element, y: Element, ts: Sequence, **opts) -> list[dict]:
    """``κ_t(x, y) = κ(δ_t x, δ_t y) / t`` over the grid."""
    out = []
    for t in ts:
        est = cc_distance(dilation(t, x), dilation(t, y), **opts)
        out.append({"t": float(t), "kappa_t": est.upper / float(t), "hit": est.hit})
    return out
