"""Group law, dilations and the asymptotic (associated graded) structure.

The product is the Campbell-Hausdorff series, which terminates at the step of
the algebra.  Its degree-``m`` part is taken from Dynkin's formula as an exact
rational combination of right-nested brackets in two letters; those tables
depend only on the step and are cached.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce

import numpy as np

from .exact import is_exact_scalar, to_fraction
from .lie_core import AlgebraError, AlgebraMismatch, Element, NilpotentAlgebra

X, Y = 0, 1


@dataclass(frozen=True)
class BchTable:
    """Degree-``m`` BCH terms as ``(word, coeff)`` pairs, ``m = 2..step``.

    ``word`` is a tuple over ``{X, Y}`` standing for the right-nested bracket
    ``[w_0, [w_1, ... [w_{m-2}, w_{m-1}]]]``.
    """

    step: int
    terms: dict[int, tuple[tuple[tuple[int, ...], Fraction], ...]]


def _pair_sequences(m: int, n: int):
    """All sequences of n pairs (r, s), r + s >= 1, with total m."""
    if n == 0:
        if m == 0:
            yield ()
        return
    for tot in range(1, m - (n - 1) + 1):
        for r in range(tot + 1):
            for rest in _pair_sequences(m - tot, n - 1):
                yield ((r, tot - r),) + rest


def _dynkin_degree(m: int) -> tuple[tuple[tuple[int, ...], Fraction], ...]:
    acc: dict[tuple[int, ...], Fraction] = {}
    for n in range(1, m + 1):
        sign = 1 if n % 2 else -1
        for seq in _pair_sequences(m, n):
            word: tuple[int, ...] = ()
            denom = n * m
            for r, s in seq:
                word += (X,) * r + (Y,) * s
                denom *= math.factorial(r) * math.factorial(s)
            if len(word) >= 2 and word[-1] == word[-2]:
                continue
            acc[word] = acc.get(word, Fraction(0)) + Fraction(sign, denom)
    return tuple(sorted((w, c) for w, c in acc.items() if c))


_TABLES: dict[int, BchTable] = {}
_LOCK = threading.Lock()


def bch_table(step: int) -> BchTable:
    with _LOCK:
        tab = _TABLES.get(step)
        if tab is None:
            tab = BchTable(step, {m: _dynkin_degree(m) for m in range(2, step + 1)})
            _TABLES[step] = tab
    return tab


def _check(x: Element, y: Element) -> NilpotentAlgebra:
    if x.algebra is not y.algebra:
        raise AlgebraMismatch("group product of points from different algebras")
    return x.algebra


def _coerce_pair(x: Element, y: Element) -> tuple[Element, Element]:
    if x.exact != y.exact:
        return x.to_float(), y.to_float()
    return x, y


def _sparse(v: np.ndarray) -> dict[int, Fraction]:
    return {i: c for i, c in enumerate(v) if c}


def _sparse_bracket(rows, u: dict, v: dict) -> dict:
    out: dict[int, Fraction] = {}
    for i, ui in u.items():
        for j, k, c in rows[i]:
            vj = v.get(j)
            if vj:
                out[k] = out.get(k, 0) + ui * vj * c
    return {k: c for k, c in out.items() if c}


def _exact_parts(a: NilpotentAlgebra, x: Element, y: Element) -> dict[int, Element]:
    rows = a._rows
    leaves = (_sparse(x.coords), _sparse(y.coords))
    memo: dict[tuple[int, ...], dict] = {}

    def value(word: tuple[int, ...]) -> dict:
        if len(word) == 1:
            return leaves[word[0]]
        v = memo.get(word)
        if v is None:
            tail = value(word[1:])
            v = _sparse_bracket(rows, leaves[word[0]], tail) if tail else {}
            memo[word] = v
        return v

    parts = {1: x + y}
    for m, terms in bch_table(a.step).terms.items():
        acc: dict[int, Fraction] = {}
        for word, c in terms:
            for k, val in value(word).items():
                acc[k] = acc.get(k, 0) + c * val
        out = a.zero().coords
        for k, val in acc.items():
            out[k] = Fraction(val)
        parts[m] = Element(a, out)
    return parts


def bch_homogeneous_parts(x: Element, y: Element) -> dict[int, Element]:
    """``{1: x + y, 2: [x,y]/2, ..., d: P_d(x, y)}``."""
    a = _check(x, y)
    x, y = _coerce_pair(x, y)
    if a.step < 2:
        return {1: x + y}
    if x.exact:
        return _exact_parts(a, x, y)
    parts = {1: x + y}
    ads = (a.ad_matrix(x), a.ad_matrix(y))
    leaves = (x.coords, y.coords)
    memo: dict[tuple[int, ...], np.ndarray] = {}

    def value(word: tuple[int, ...]) -> np.ndarray:
        if len(word) == 1:
            return leaves[word[0]]
        v = memo.get(word)
        if v is None:
            v = ads[word[0]].dot(value(word[1:]))
            memo[word] = v
        return v

    for m, terms in bch_table(a.step).terms.items():
        acc = a.zero(x.exact).coords
        for word, c in terms:
            acc = acc + (value(word) * c if x.exact else value(word) * float(c))
        parts[m] = Element(a, acc)
    return parts


def bch_product(x: Element, y: Element) -> Element:
    """Group product ``x·y`` of the simply connected group on the algebra."""
    a = _check(x, y)
    x, y = _coerce_pair(x, y)
    if a.step < 2:
        return x + y
    parts = bch_homogeneous_parts(x, y)
    return reduce(lambda u, v: u + v, parts.values())


def product(*points: Element) -> Element:
    if not points:
        raise ValueError("empty product")
    return reduce(bch_product, points)


def identity(algebra: NilpotentAlgebra, exact: bool = True) -> Element:
    return algebra.zero(exact)


def inverse(x: Element) -> Element:
    return -x


def group_commutator(x: Element, y: Element) -> Element:
    """``x y x^{-1} y^{-1}``."""
    return product(x, y, -x, -y)


def power(x: Element, n: int, check: bool = False) -> Element:
    """``x^n == n x``; with ``check`` the result is compared with repeated products."""
    out = x * int(n)
    if check:
        base = x if n >= 0 else inverse(x)
        rep = identity(x.algebra, x.exact)
        for _ in range(abs(int(n))):
            rep = bch_product(rep, base)
        if x.exact and rep != out:
            raise AssertionError("power disagrees with repeated product")
        if not x.exact and np.max(np.abs(rep.coords - out.coords), initial=0.0) > 1e-9 * (1 + x.norm()) * abs(n):
            raise AssertionError("power disagrees with repeated product")
    return out


# ---------------------------------------------------------------------------
# dilations


def _scalar(t, exact: bool):
    if exact and is_exact_scalar(t):
        return to_fraction(t)
    return float(t)


def dilation(t, x: Element) -> Element:
    """Scale the layer-k coordinates by ``t**k``."""
    a = x.algebra
    if a.layers is None:
        raise AlgebraError("dilation needs declared layers")
    exact = x.exact and is_exact_scalar(t)
    s = _scalar(t, exact)
    weights = [s**k for k in a.layers]
    if exact:
        w = np.empty(a.dim, dtype=object)
        w[:] = weights
        return Element(a, x.coords * w)
    return Element(a, x.coords.astype(float) * np.asarray(weights, dtype=float))


def delta_minus_one(x: Element) -> Element:
    """Layer k multiplied by ``(-1)**k``."""
    return dilation(-1, x)


def scaled_product(t, x: Element, y: Element) -> Element:
    """``δ_t^{-1}(δ_t x · δ_t y)``."""
    tt = _scalar(t, x.exact and y.exact and is_exact_scalar(t))
    inv = 1 / tt
    return dilation(inv, bch_product(dilation(tt, x), dilation(tt, y)))


# ---------------------------------------------------------------------------
# asymptotic structure


def asymptotic_algebra(a: NilpotentAlgebra) -> NilpotentAlgebra:
    """Same basis, bracket ``[b_i, b_j]^a`` = layer-(k+l) part of ``[b_i, b_j]``."""
    if a.layers is None:
        raise AlgebraError("asymptotic bracket needs declared layers")
    cached = a.__dict__.get("_asymptotic")
    if cached is not None:
        return cached
    if a.is_graded:
        a.__dict__["_asymptotic"] = a
        return a
    consts = {}
    for (i, j), vec in a.table.items():
        if i < j:
            tgt = a.layers[i] + a.layers[j]
            kept = {k: c for k, c in vec.items() if a.layers[k] == tgt}
            if kept:
                consts[(i, j)] = kept
    asym = NilpotentAlgebra(a.dim, consts, layers=a.layers, labels=a.labels, name=f"{a.name or 'N'}^a")
    with _LOCK:
        a.__dict__.setdefault("_asymptotic", asym)
    return a.__dict__["_asymptotic"]


def _to(alg: NilpotentAlgebra, x: Element) -> Element:
    return Element(alg, x.coords)


def asymptotic_bracket(x: Element, y: Element) -> Element:
    a = _check(x, y)
    asym = asymptotic_algebra(a)
    return _to(a, asym.bracket(_to(asym, x), _to(asym, y)))


def asymptotic_product(x: Element, y: Element) -> Element:
    a = _check(x, y)
    asym = asymptotic_algebra(a)
    return _to(a, bch_product(_to(asym, x), _to(asym, y)))


def rescaled_bracket(t, x: Element, y: Element) -> Element:
    """``δ_t^{-1}[δ_t x, δ_t y]``."""
    a = _check(x, y)
    tt = _scalar(t, x.exact and y.exact and is_exact_scalar(t))
    return dilation(1 / tt, a.bracket(dilation(tt, x), dilation(tt, y)))


def alpha_residual(t, x: Element, y: Element) -> Element:
    """Gap between the rescaled bracket at scale t and the asymptotic bracket."""
    return rescaled_bracket(t, x, y) - asymptotic_bracket(x, y)


@dataclass
class BetaResidual:
    residual: Element
    norm: float
    ratio: float  # |beta| t / ((|x|+|x|^d)(|y|+|y|^d))


def beta_residual(t, x: Element, y: Element) -> BetaResidual:
    res = scaled_product(t, x, y) - asymptotic_product(x, y)
    d = x.algebra.step
    nx, ny = x.norm(), y.norm()
    denom = (nx + nx**d) * (ny + ny**d)
    nr = res.norm()
    ratio = 0.0 if nr == 0 else (nr * float(t) / denom if denom > 0 else math.inf)
    return BetaResidual(res, nr, ratio)


def certify_beta_constant(samples, ts) -> float:
    """Smallest A making the O(1/t) residual bound hold on ``samples`` x ``ts``."""
    return max((beta_residual(t, x, y).ratio for x, y in samples for t in ts), default=0.0)
