"""Independent reference computations used by the tests.

The BCH oracle never touches the library's structure constants: basis
labels like ``[x1,[x1,x2]]`` are parsed into noncommutative polynomials,
``log(exp X exp Y)`` is expanded in the truncated tensor algebra, and the
result is expressed in the basis by an exact sympy solve.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import factorial

import sympy
from sympy import divisors, mobius


def witt(l: int, k: int) -> int:
    return sum(mobius(m) * l ** (k // m) for m in divisors(k)) // k


# -- truncated tensor algebra ---------------------------------------------------


def t_add(a: dict, b: dict, c=1) -> dict:
    out = dict(a)
    for w, v in b.items():
        out[w] = out.get(w, 0) + c * v
        if not out[w]:
            del out[w]
    return out


def t_mul(a: dict, b: dict, depth: int) -> dict:
    out: dict = {}
    for u, x in a.items():
        for v, y in b.items():
            if len(u) + len(v) <= depth:
                w = u + v
                out[w] = out.get(w, 0) + x * y
    return {w: c for w, c in out.items() if c}


def t_scale(a: dict, c) -> dict:
    return {w: v * c for w, v in a.items() if v * c}


def t_exp(x: dict, depth: int) -> dict:
    out, term = {(): Fraction(1)}, {(): Fraction(1)}
    for k in range(1, depth + 1):
        term = t_mul(term, x, depth)
        out = t_add(out, t_scale(term, Fraction(1, factorial(k))))
    return out


def t_log(g: dict, depth: int) -> dict:
    y = dict(g)
    y.pop((), None)  # g = 1 + y
    out, term = {}, {(): Fraction(1)}
    for k in range(1, depth + 1):
        term = t_mul(term, y, depth)
        out = t_add(out, t_scale(term, Fraction((-1) ** (k + 1), k)))
    return out


# -- bracket labels ----------------------------------------------------------------


def parse_label(s: str):
    s = s.strip()
    if not s.startswith("["):
        return int(s.lstrip("x")) - 1
    depth = 0
    for i, ch in enumerate(s[1:-1], start=1):
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        elif ch == "," and depth == 0:
            return (parse_label(s[1:i]), parse_label(s[i + 1 : -1]))
    raise ValueError(s)


def tensor_of(tree) -> dict:
    if isinstance(tree, int):
        return {(tree,): Fraction(1)}
    a, b = tensor_of(tree[0]), tensor_of(tree[1])
    big = 10**6
    return t_add(t_mul(a, b, big), t_mul(b, a, big), -1)


class TensorOracle:
    def __init__(self, labels, depth: int):
        self.depth = depth
        self.basis = [tensor_of(parse_label(s)) for s in labels]
        words = sorted({w for t in self.basis for w in t})
        self.words = words
        self.M = sympy.Matrix([[sympy.Rational(t.get(w, 0)) for t in self.basis] for w in words])

    def embed(self, coords) -> dict:
        out: dict = {}
        for c, t in zip(coords, self.basis):
            if c:
                out = t_add(out, t_scale(t, Fraction(c)))
        return out

    def coordinates(self, t: dict) -> list[Fraction]:
        extra = [w for w in t if w not in set(self.words)]
        if extra:
            raise AssertionError(f"not a Lie element: {extra[:3]}")
        rhs = sympy.Matrix([sympy.Rational(t.get(w, 0)) for w in self.words])
        sol, params = self.M.gauss_jordan_solve(rhs)
        assert not params.free_symbols
        assert self.M * sol == rhs
        return [Fraction(int(c.p), int(c.q)) for c in sol]

    def bch(self, x, y) -> list[Fraction]:
        g = t_mul(t_exp(self.embed(x), self.depth), t_exp(self.embed(y), self.depth), self.depth)
        return self.coordinates(t_log(g, self.depth))

    def bracket(self, x, y) -> list[Fraction]:
        a, b = self.embed(x), self.embed(y)
        return self.coordinates(t_add(t_mul(a, b, self.depth), t_mul(b, a, self.depth), -1))


@lru_cache(maxsize=None)
def oracle_for(labels: tuple, depth: int) -> TensorOracle:
    return TensorOracle(labels, depth)
