"""Constructive controllability experiments on balls around a fixed point.

Each experiment produces explicit factor lists whose group product is the
identity (exactly, for rational input), so every reported ``n`` is
witnessed rather than read off the formula under test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from ..bch_group import bch_product, delta_minus_one, inverse, product
from ..cc_metric import ControlWord, cc_lower_bound, cc_upper_bound, endpoint, steer, word_length
from ..exact import fraction_str, to_fraction
from ..lie_core import AlgebraError, Element, NilpotentAlgebra, Projection, free_lift, truncate


class ReachError(AlgebraError):
    pass


# ---------------------------------------------------------------------------
# results


@dataclass
class PowerFit:
    slope: float
    intercept: float
    stderr: float
    points: int

    def to_json(self) -> dict:
        return self.__dict__.copy()


def loglog_fit(x: Sequence[float], y: Sequence[float]) -> PowerFit:
    """Least-squares line through ``(log x, log y)``."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    fit = stats.linregress(lx, ly)
    return PowerFit(float(fit.slope), float(fit.intercept), float(fit.stderr), len(lx))


@dataclass
class Witness:
    """Factors ``f_1 .. f_n`` with ``f_1 ... f_n = e`` and the words certifying ball membership."""

    center: Element
    factors: list[Element]
    words: list[ControlWord]
    radius: object

    def product(self) -> Element:
        return product(*self.factors) if self.factors else self.center.algebra.zero(self.center.exact)

    def closes(self) -> bool:
        p = self.product()
        return p.is_zero() if p.exact else p.norm() <= 1e-9

    def max_offset(self) -> float:
        """Largest witnessed ``κ(center, f_i)`` bound."""
        return max((float(word_length(w)) for w in self.words), default=0.0)

    def in_balls(self) -> bool:
        """Each word has length below the radius and ends at ``center^{-1} f_i``."""
        c_inv = inverse(self.center)
        for f, w in zip(self.factors, self.words):
            if not word_length(w) < self.radius:
                return False
            if endpoint(w, f.exact and w.exact) != bch_product(c_inv, f):
                return False
        return True

    def to_json(self) -> dict:
        enc = (lambda c: fraction_str(c)) if self.center.exact else float
        return {
            "center": [enc(c) for c in self.center.coords],
            "radius": str(self.radius) if isinstance(self.radius, Fraction) else float(self.radius),
            "factors": [[enc(c) for c in f.coords] for f in self.factors],
        }


@dataclass
class ReachRow:
    eps: object
    n_min: int | None
    n_lower: int
    witnessed: bool
    bound: float | None = None
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "eps": float(self.eps),
            "n_min": self.n_min,
            "n_lower": self.n_lower,
            "n_mid": None if self.n_min is None else (self.n_min + self.n_lower) / 2,
            "witnessed": self.witnessed,
            "bound": self.bound,
            **self.extra,
        }


@dataclass
class ReachExperiment:
    name: str
    center: Element
    rows: list[ReachRow]
    witnesses: list[Witness]
    r: float
    exponent: float
    fits: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)
    complete: bool = True

    @property
    def eps(self) -> list[float]:
        return [float(r.eps) for r in self.rows]

    @property
    def n_min(self) -> list[int | None]:
        return [r.n_min for r in self.rows]

    def monotone(self) -> bool:
        """n_min nonincreasing in ε."""
        pairs = sorted((float(r.eps), r.n_min) for r in self.rows if r.n_min is not None)
        return all(a[1] >= b[1] for a, b in zip(pairs, pairs[1:]))

    def all_witnessed(self) -> bool:
        return all(r.witnessed for r in self.rows)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "r": self.r,
            "exponent": self.exponent,
            "complete": self.complete,
            "monotone": self.monotone(),
            "rows": [r.to_json() for r in self.rows],
            "fits": {k: v.to_json() if isinstance(v, PowerFit) else v for k, v in self.fits.items()},
            "notes": self.notes,
        }

    def csv(self) -> str:
        head = "eps,n_lower,n_min,witnessed,bound\n"
        return head + "".join(
            f"{float(r.eps)!r},{r.n_lower},{r.n_min},{int(r.witnessed)},{'' if r.bound is None else repr(r.bound)}\n"
            for r in self.rows
        )


def _rational(x) -> Fraction:
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    return Fraction(float(x)).limit_denominator(10**6)


def _fit(exp: ReachExperiment) -> None:
    ok = [r for r in exp.rows if r.n_min is not None]
    if len(ok) >= 2:
        inv_eps = [1 / float(r.eps) for r in ok]
        exp.fits["witnessed"] = loglog_fit(inv_eps, [r.n_min for r in ok])
        exp.fits["midpoint"] = loglog_fit(inv_eps, [(r.n_min + r.n_lower) / 2 for r in ok])


def _search(check: Callable[[int], bool], limit: int) -> int | None:
    """Smallest n in [1, limit] with check(n), assuming monotonicity (doubling then bisection)."""
    if check(1):
        return 1
    lo, hi = 1, 2
    while not check(hi):
        lo, hi = hi, hi * 2
        if hi > limit:
            return None
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if check(mid):
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# central targets


def _top_central(z: Element) -> None:
    a = z.algebra
    if not a.is_graded:
        raise ReachError("central-target experiments need a graded algebra")
    if z.is_zero() or not a.is_central(z) or any(z.coords[i] for i in range(a.dim) if a.layers[i] != a.step):
        raise ReachError("z must be a nonzero point of the top layer")


def _central_witness(z: Element, n: int, eps, word: ControlWord | None = None) -> Witness:
    """Split a word for ``(nz)^{-1}`` into n pieces ``u_i``; factors ``z u_i`` multiply to e."""
    word = word if word is not None else steer(z * (-n))
    pieces = word.split_equal(n)
    factors = [bch_product(z, endpoint(p, z.exact)) for p in pieces]
    return Witness(z, factors, pieces, eps)


def lemma1_threshold(
    z: Element, eps_grid: Sequence, limit: int = 10**7, verify: bool = True, refine: bool = False
) -> ReachExperiment:
    """Smallest witnessed n with ``e ∈ B(z, ε)^n`` for central top-layer ``z``.

    Uses ``B(z,ε)^n = B(nz, nε)``: ``n`` qualifies when a word for ``nz`` is
    shorter than ``nε``.  The lower end uses the abelianisation bound.
    """
    _top_central(z)
    a = z.algebra
    d = a.step
    r = cc_upper_bound(z, refine=refine).upper
    rows, wits = [], []
    complete = True
    for eps in sorted((_rational(e) for e in eps_grid), reverse=True):
        cache: dict[int, ControlWord] = {}

        def up(n: int) -> bool:
            est = cc_upper_bound(z * (-n), refine=refine)
            cache[n] = est.witness
            return est.hit and Fraction(word_length(est.witness)) < n * eps if z.exact else est.upper < n * float(eps)

        n_up = _search(up, limit)
        n_lo = _search(lambda n: cc_lower_bound(z * n) < n * float(eps), limit) or 1
        witnessed = False
        if n_up is None:
            complete = False
        elif verify:
            w = _central_witness(z, n_up, eps, cache.get(n_up))
            witnessed = w.closes() and w.in_balls()
            wits.append(w)
        rows.append(ReachRow(eps, n_up, n_lo, witnessed, bound=(r / float(eps)) ** (d / (d - 1))))
    exp = ReachExperiment("lemma1", z, rows, wits, r, d / (d - 1), complete=complete)
    _fit(exp)
    return exp


def lemma1_ball_inclusion(z: Element, eps, s, n: int, samples: int = 10, seed: int = 0) -> dict:
    """Check ``n^{1/d} r + s < nε`` and, if it holds, factor sampled points of ``B(s)``."""
    _top_central(z)
    a = z.algebra
    d = a.step
    r = cc_upper_bound(z, refine=False).upper
    lhs = n ** (1 / d) * r + float(s)
    if not lhs < n * float(eps):
        return {"verdict": "not implied", "lhs": lhs, "rhs": n * float(eps)}
    rng = np.random.default_rng(seed)
    gens = a.generator_indices
    eps_q = _rational(eps)
    failures = []
    to_nz = steer(z * n)
    for k in range(samples):
        # a point of B(s): endpoint of a random horizontal word of length < s
        m = int(rng.integers(1, 6))
        lens = rng.dirichlet(np.ones(m)) * float(s) * 0.999
        steps = []
        for ell in lens:
            g = int(rng.choice(gens))
            sign = 1 if rng.uniform() < 0.5 else -1
            steps.append((a.basis_element(g) * sign, _rational(ell)))
        wword = ControlWord(a, steps)
        w = endpoint(wword)
        path = to_nz.inverse() + wword
        if not word_length(path) < n * eps_q:
            failures.append({"sample": k, "reason": "connecting word too long"})
            continue
        pieces = path.split_equal(n)
        factors = [bch_product(z, endpoint(p)) for p in pieces]
        if product(*factors) != w:
            failures.append({"sample": k, "reason": "factor product differs"})
        if any(not word_length(p) < eps_q for p in pieces):
            failures.append({"sample": k, "reason": "factor outside B(z, eps)"})
    return {"verdict": "verified" if not failures else "violated", "lhs": lhs, "rhs": n * float(eps),
            "samples": samples, "failures": failures}


# ---------------------------------------------------------------------------
# reflection words


@dataclass
class ReflectionWord:
    x: Element
    factors: list[Element]
    offsets: list[ControlWord]
    eps: object
    branch: str

    @property
    def word(self) -> ControlWord:
        """Closed horizontal word: a steering word for each factor, concatenated."""
        out = ControlWord(self.x.algebra, [])
        for f in self.factors:
            out = out + steer(f)
        return out

    def product(self) -> Element:
        return product(*self.factors) if self.factors else self.x.algebra.zero(self.x.exact)

    def closes(self) -> bool:
        p = self.product()
        return p.is_zero() if p.exact else p.norm() <= 1e-9

    def offsets_ok(self) -> bool:
        """Every factor is within ``2ε`` of ``x``, certified by its offset word."""
        xi = inverse(self.x)
        for f, w in zip(self.factors, self.offsets):
            if not float(word_length(w)) < 2 * float(self.eps):
                return False
            if endpoint(w, f.exact) != bch_product(xi, f):
                return False
        return True


def lemma2_reflection_word(x: Element, ys: Sequence[Element], y_words: Sequence[ControlWord], eps) -> ReflectionWord:
    """Closed 2n-factor word from ``z = x y_1 ... x y_n`` lying in the top layer.

    ``y_words[k]`` certifies ``y_k ∈ B(ε)``.  Odd step: ``z^{-1} = δ_{-1} z`` and
    ``δ_{-1} x = x``.  Even step: ``δ_{-1} x = x^{-1}`` and ``δ_{-1} z = z``.
    """
    a = x.algebra
    d = a.step
    if not a.is_graded:
        raise ReachError("reflection words need a graded algebra")
    if any(x.coords[i] for i in range(a.dim) if a.layers[i] != d - 1):
        raise ReachError("x must lie in layer d-1")
    n = len(ys)
    if n == 0:
        return ReflectionWord(x, [], [], eps, "empty")
    z = product(*[bch_product(x, y) for y in ys])
    if any(z.coords[i] for i in range(a.dim) if a.layers[i] != d):
        raise ReachError("x y_1 ... x y_n is not in the top layer")
    for y, w in zip(ys, y_words):
        if endpoint(w, y.exact) != y or not float(word_length(w)) < float(eps):
            raise ReachError("a y_k is not certified inside B(eps)")

    def refl(w: ControlWord) -> ControlWord:
        return ControlWord(a, [(delta_minus_one(dd), t) for dd, t in w.steps])

    if d % 2 == 1:
        factors = [bch_product(x, y) for y in ys] + [bch_product(x, delta_minus_one(y)) for y in ys]
        offsets = list(y_words) + [refl(w) for w in y_words]
        branch = "odd"
    else:
        dy = [inverse(delta_minus_one(y)) for y in ys]
        dw = [refl(w).inverse() for w in y_words]
        factors = [bch_product(x, y) for y in ys[:-1]]
        offsets = list(y_words[:-1])
        factors.append(bch_product(x, bch_product(ys[-1], dy[-1])))
        offsets.append(y_words[-1] + dw[-1])
        for k in range(n - 2, -1, -1):
            factors.append(bch_product(x, dy[k]))
            offsets.append(dw[k])
        factors.append(x)
        offsets.append(ControlWord(a, []))
        branch = "even"
    return ReflectionWord(x, factors, offsets, eps, branch)


def reflection_inputs(x: Element, n: int = 3, scale=Fraction(1, 10), seed: int = 0) -> tuple[list[Element], list[ControlWord], Fraction]:
    """Elements ``y_k`` with ``x y_1 ... x y_n`` in the top layer, and their steering words.

    The factors ``x y_k`` telescope: ``a_1, a_1^{-1} a_2, ..., a_{n-1}^{-1} c``
    with small random rational ``a_k`` in the first layer and ``c`` in the
    top layer.  Returns the least ``ε`` (rounded up) that certifies them.
    """
    import random

    a = x.algebra
    rng = random.Random(seed)
    gens, top = a.generator_indices, a.layer_indices(a.step)

    def rnd(idx):
        v = a.zero()
        for i in idx:
            v.coords[i] = scale * Fraction(rng.randint(-10, 10), 10)
        return v

    steps = [rnd(gens) for _ in range(n - 1)]
    c = rnd(top)
    chain = steps + [c]
    factors = [chain[0]] + [bch_product(inverse(chain[k - 1]), chain[k]) for k in range(1, n)]
    xi = inverse(x)
    ys = [bch_product(xi, f) for f in factors]
    words = [steer(y) for y in ys]
    eps = max(Fraction(word_length(w)) for w in words)
    return ys, words, Fraction(math.ceil(eps * 1000 * (1 + Fraction(1, 100))), 1000)


# ---------------------------------------------------------------------------
# points of N^{d-1}


def _lift_word(word: ControlWord, proj: Projection) -> ControlWord:
    """Horizontal word downstairs -> same word on the generators of the source algebra."""
    src = proj.source
    gens = src.generator_indices
    steps = []
    for dvec, t in word.steps:
        pre = proj.preimage(dvec, within=gens)
        if pre is None:
            raise ReachError("direction has no preimage on the generators")
        steps.append((pre if dvec.exact else pre.to_float(), t))
    return ControlWord(src, steps, word.constraint)


def _push_word(word: ControlWord, proj: Projection) -> ControlWord:
    return ControlWord(proj.target, [(proj(dd), t) for dd, t in word.steps], word.constraint)


def corollary2_threshold(x: Element, eps_grid: Sequence, limit: int = 10**7) -> ReachExperiment:
    """Witnessed n with ``e ∈ B(x, ε)^n`` for x in layer d-1 (d >= 3).

    Runs the central experiment in ``N/N^d`` at radius ``ε/2``, lifts the
    pieces to words in N and closes them with a reflection word.  The bound
    column is ``2 (2r/ε)^{k/(k-1)}`` with ``k = d - 1``.
    """
    a = x.algebra
    d = a.step
    if d < 3:
        raise ReachError("the quotient argument needs step d >= 3")
    q, proj = truncate(a, d - 1)
    xq = proj(x)
    r = cc_upper_bound(x, refine=False).upper
    k = d - 1
    base = lemma1_threshold(xq, [Fraction(_rational(e)) / 2 for e in eps_grid], limit=limit, verify=False)
    rows, wits = [], []
    for row in base.rows:
        eps = row.eps * 2
        n_q = row.n_min
        if n_q is None:
            rows.append(ReachRow(eps, None, 1, False))
            continue
        w = _central_witness(xq, n_q, row.eps)
        y_words = [_lift_word(p, proj) for p in w.words]
        ys = [endpoint(wd) for wd in y_words]
        refl = lemma2_reflection_word(x, ys, y_words, row.eps)
        ok = refl.closes() and refl.offsets_ok() and w.in_balls()
        wit = Witness(x, refl.factors, refl.offsets, eps)
        wits.append(wit)
        n_total = len(refl.factors)
        bound = 2 * (2 * r / float(eps)) ** (k / (k - 1))
        stated = 2 * (2 * r / float(eps)) ** (d / (d - 1))
        rows.append(ReachRow(eps, n_total, 1, ok, bound=bound, extra={"n_quotient": n_q, "stated_bound": stated}))
    exp = ReachExperiment("corollary2", x, rows, wits, r, k / (k - 1), complete=base.complete)
    exp.notes["quotient_r"] = base.r
    _fit(exp)
    return exp


# ---------------------------------------------------------------------------
# lifted thresholds


def theorem2_lifted_threshold(x: Element, k: int, eps_grid: Sequence, limit: int = 10**7) -> ReachExperiment:
    """Threshold for ``x ∈ N^k \\ N^{k+1}`` through the graded free cover ``F/F^d``.

    The experiment runs upstairs on a lift of x and its factors are pushed
    down; the empirical constant is ``Q = max n (ε/r)^{k/(k-1)}``.
    """
    a = x.algebra
    d = a.step
    if k not in (d - 1, d):
        raise ReachError("k must be d-1 or d")
    if k == d - 1 and d <= 2:
        raise ReachError("the k = d-1 case needs d > 2")
    if a.filtration_index(x) != k:
        raise ReachError(f"x is not in N^{k} \\ N^{k+1}")
    free, proj = free_lift(a)
    layer = [i for i in range(free.dim) if free.layers[i] == k]
    xt = proj.preimage(x.to_exact(), within=layer)
    if xt is None:
        raise ReachError("x has no lift inside a single layer of the free cover")
    if not x.exact:
        xt = xt.to_float()
    up = lemma1_threshold(xt, eps_grid, limit=limit) if k == d else corollary2_threshold(xt, eps_grid, limit=limit)
    r_tilde = up.r
    wits = []
    rows = []
    for row, w in zip([r for r in up.rows if r.n_min is not None], up.witnesses):
        factors = [proj(f) for f in w.factors]
        words = [_push_word(wd, proj) for wd in w.words]
        down = Witness(x, factors, words, w.radius)
        ok = down.closes() and down.in_balls()
        wits.append(down)
        row.witnessed = row.witnessed and ok
    rows = up.rows
    e = k / (k - 1)
    qs = [r.n_min * (float(r.eps) / r_tilde) ** e for r in rows if r.n_min is not None]
    exp = ReachExperiment("theorem2", x, rows, wits, r_tilde, e, complete=up.complete)
    exp.notes.update({"lift": [fraction_str(c) for c in xt.coords] if xt.exact else xt.tolist(),
                      "r_tilde": r_tilde, "Q": max(qs, default=None), "route": up.name})
    _fit(exp)
    return exp


# ---------------------------------------------------------------------------
# closed curves with directions near x


@dataclass
class ClosedCurve:
    x: Element
    eps: object
    directions: list[Element]
    a: float | None
    evident: bool

    @property
    def word(self) -> ControlWord:
        one = Fraction(1) if self.x.exact else 1.0
        return ControlWord(self.x.algebra, [(dd, one) for dd in self.directions], constraint="ball")

    def length(self) -> float:
        return float(sum(math.sqrt(float(sum(c * c for c in dd.coords))) for dd in self.directions))

    def closed(self) -> bool:
        p = endpoint(self.word)
        return p.is_zero() if p.exact else p.norm() <= 1e-9

    def max_offset(self) -> float:
        xf = self.x.to_float()
        return max(((dd.to_float() - xf).norm() for dd in self.directions), default=0.0)


def _factors_for(x: Element, k: int, eps) -> list[Element]:
    a = x.algebra
    d = a.step
    if k == d:
        exp = lemma1_threshold(x, [eps])
    else:
        exp = corollary2_threshold(x, [eps])
    if not exp.witnesses or not exp.rows[0].witnessed:
        raise ReachError("no witnessed factorisation")
    return exp.witnesses[0].factors


def theorem3_closed_curve(x: Element, eps, a_ladder: Sequence = (1, Fraction(1, 2), Fraction(1, 4), Fraction(1, 8), Fraction(1, 16)), a: Fraction | None = None) -> ClosedCurve:
    """Closed curve with every step direction within euclidean distance ε of x.

    The factors of a witnessed ``e ∈ B(x, aε)^n`` are used as the directions
    of unit-time steps.  ``a`` is taken from the ladder (largest value whose
    factors all land in ``x + B(ε)``) unless given.
    """
    alg = x.algebra
    R = x.norm()
    k = alg.filtration_index(x)
    eps_f = float(eps)
    if eps_f > R:
        # both steps θx and -θx are within ε of x once (1 + θ) R < ε
        theta = _rational((eps_f / R - 1) / 2)
        if (1 + float(theta)) * R >= eps_f:
            theta = theta / 2
        dirs = [x * theta, x * (-theta)]
        return ClosedCurve(x, eps, dirs, None, True)
    if k not in (alg.step, alg.step - 1):
        raise ReachError("x must be in N^d or N^{d-1} minus the next term")
    ladder = [a] if a is not None else list(a_ladder)
    for aa in ladder:
        factors = _factors_for(x, k, _rational(eps) * _rational(aa))
        curve = ClosedCurve(x, eps, factors, float(aa), False)
        if curve.max_offset() < eps_f:
            return curve
    raise ReachError("no ladder value of a keeps the directions inside x + B(eps)")


def theorem3_sweep(x: Element, eps_grid: Sequence) -> dict:
    """Curves over a grid with a common ``a``; slope of log length vs log(1/ε) and empirical P."""
    alg = x.algebra
    k = alg.filtration_index(x)
    eps_sorted = sorted((_rational(e) for e in eps_grid))
    # pick a on the smallest ε, then reuse it
    first = theorem3_closed_curve(x, eps_sorted[0])
    a = first.a
    curves = [first] + [theorem3_closed_curve(x, e, a=_rational(a)) for e in eps_sorted[1:]]
    lengths = [c.length() for c in curves]
    r = x.norm()
    e = k / (k - 1)
    fit = loglog_fit([1 / float(c.eps) for c in curves], lengths)
    P = max(L / (r / float(c.eps)) ** e for L, c in zip(lengths, curves))
    return {
        "k": k,
        "a": a,
        "eps": [float(c.eps) for c in curves],
        "lengths": lengths,
        "steps": [len(c.directions) for c in curves],
        "closed": [c.closed() for c in curves],
        "max_offset_ratio": [c.max_offset() / float(c.eps) for c in curves],
        "slope": fit.slope,
        "expected_slope": e,
        "P": P,
        "curves": curves,
    }
