"""The group ``G = R ⋉ N`` defined by a derivation ``D`` of the algebra.

Points are pairs ``(t, x)`` meaning ``exp(t ω) exp(x)``, where ``ω`` spans the
``R`` factor and ``ad(ω)`` acts on ``N`` by ``D``.  With ``A_t = e^{tD}`` the
product is ``(t, x)(s, y) = (t + s, (A_{-s} x) y)``.

When ``D`` is nilpotent the whole Lie algebra ``R ω ⊕ N`` is nilpotent, so
exponentials and products of arbitrary elements of ``G`` can be computed
exactly with the BCH product of that extended algebra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import expm

from .bch_group import bch_product
from .exact import RowSpace, is_exact_scalar, to_fraction
from .lie_core import AlgebraError, AlgebraMismatch, Element, NilpotentAlgebra


class SemidirectError(AlgebraError):
    pass


@dataclass(frozen=True)
class SemidirectPoint:
    t: object
    x: Element

    def to_json(self) -> dict:
        def enc(v):
            return str(Fraction(v)) if is_exact_scalar(v) else float(v)

        return {"t": enc(self.t), "x": [enc(c) for c in self.x.coords]}


def _exact_matrix(m) -> np.ndarray:
    rows = [[to_fraction(c) for c in row] for row in m]
    out = np.empty((len(rows), len(rows[0]) if rows else 0), dtype=object)
    for i, row in enumerate(rows):
        out[i, :] = row
    return out


def _is_exact_matrix(m) -> bool:
    return all(is_exact_scalar(c) or isinstance(c, str) for row in m for c in row)


class SemidirectGroup:
    """``R ⋉ N`` with ``ad(ω)|_N = D`` (``D[k, j]`` is the ``b_k`` coefficient of ``D b_j``)."""

    def __init__(self, base: NilpotentAlgebra, derivation, layer1: Sequence[int] | None = None, check: bool = True):
        self.base = base
        n = base.dim
        m = np.asarray(derivation, dtype=object)
        if m.shape != (n, n):
            raise SemidirectError(f"derivation must be {n}x{n}")
        self.exact = _is_exact_matrix(m)
        self.D = _exact_matrix(m) if self.exact else np.asarray(derivation, dtype=float)
        self.Df = np.asarray(self.D, dtype=float)
        self.layer1 = tuple(layer1) if layer1 is not None else tuple(base.generator_indices)
        self.nilpotent = self._nilpotency_index() is not None
        if check and not self.is_derivation():
            raise SemidirectError("matrix is not a derivation of the algebra")
        self._extended: NilpotentAlgebra | None = None

    # -- derivation data ------------------------------------------------
    def _apply(self, x: Element) -> Element:
        if x.exact and self.exact:
            return Element(self.base, self.D.dot(x.coords))
        return Element(self.base, self.Df.dot(np.asarray(x.coords, dtype=float)))

    def is_derivation(self) -> bool:
        a = self.base
        for i in range(a.dim):
            for j in range(i + 1, a.dim):
                bi, bj = a.basis_element(i, self.exact), a.basis_element(j, self.exact)
                lhs = self._apply(a.bracket(bi, bj))
                rhs = a.bracket(self._apply(bi), bj) + a.bracket(bi, self._apply(bj))
                if self.exact:
                    if lhs != rhs:
                        return False
                elif (lhs - rhs).norm() > 1e-12:
                    return False
        return True

    def _nilpotency_index(self) -> int | None:
        n = self.base.dim
        if self.exact:
            p = self.D.copy()
            for k in range(1, n + 1):
                if not any(p.flatten()):
                    return k
                p = p.dot(self.D)
            return None
        p = self.Df.copy()
        scale = max(1.0, np.abs(self.Df).max())
        for k in range(1, n + 1):
            if np.abs(p).max() <= 1e-14 * scale**k:
                return k
            p = p @ self.Df
        return None

    def layer_invariant(self) -> bool:
        """Whether ``D`` maps the declared first layer into itself (exact in rational mode)."""
        a = self.base
        space = RowSpace(a.dim)
        for i in self.layer1:
            space.add(list(a.basis_element(i).coords))
        for i in self.layer1:
            img = self._apply(a.basis_element(i, self.exact))
            vec = list(img.coords) if self.exact else [Fraction(float(c)).limit_denominator(10**12) for c in img.coords]
            if not space.contains(vec):
                return False
        return True

    def preserves_filtration(self) -> bool:
        """``D N^k ⊆ N^k`` for every term of the lower central series."""
        a = self.base
        for space in a.lower_central_series:
            for row in space.basis():
                img = self._apply(Element(a, np.array(row, dtype=object)))
                vec = list(img.coords) if img.exact else [Fraction(float(c)).limit_denominator(10**12) for c in img.coords]
                if not space.contains(vec):
                    return False
        return True

    # -- the flow A_t ---------------------------------------------------
    def flow_matrix(self, t) -> np.ndarray:
        """``e^{tD}``: exact truncated series for nilpotent rational ``D`` and rational ``t``."""
        if self.nilpotent and self.exact and is_exact_scalar(t):
            t = to_fraction(t)
            n = self.base.dim
            out = _exact_matrix(np.eye(n, dtype=int))
            term = _exact_matrix(np.eye(n, dtype=int))
            for k in range(1, n + 1):
                term = term.dot(self.D) * (t / k)
                if not any(term.flatten()):
                    break
                out = out + term
            return out
        return expm(float(t) * self.Df)

    def flow_automorphism(self, t, x: Element) -> Element:
        if x.algebra is not self.base:
            raise AlgebraMismatch("point is not in the base algebra")
        m = self.flow_matrix(t)
        if m.dtype == object and x.exact:
            return Element(self.base, m.dot(x.coords))
        return Element(self.base, np.asarray(m, dtype=float) @ np.asarray(x.coords, dtype=float))

    def operator_norm(self, t) -> float:
        return float(np.linalg.norm(np.asarray(self.flow_matrix(t), dtype=float), 2))

    def constant_M(self, tol: float = 1e-6, max_points: int = 2**16) -> dict:
        """``sup{‖A_t‖ : |t| <= 1}`` on a refined grid, plus the bound ``e^{‖D‖}``."""
        certified = math.exp(float(np.linalg.norm(self.Df, 2)))
        k = 16
        prev = None
        while True:
            grid = np.linspace(-1.0, 1.0, 2 * k + 1)
            val = max(self.operator_norm(t) for t in grid)
            if prev is not None and abs(val - prev) <= tol * max(1.0, val):
                break
            if 2 * k + 1 >= max_points:
                break
            prev, k = val, 2 * k
        return {"grid": val, "certified": certified, "points": 2 * k + 1}

    # -- group law ------------------------------------------------------
    def point(self, t, x) -> SemidirectPoint:
        x = x if isinstance(x, Element) else self.base.element(x)
        if x.algebra is not self.base:
            raise AlgebraMismatch("point is not in the base algebra")
        return SemidirectPoint(t, x)

    def identity(self) -> SemidirectPoint:
        return SemidirectPoint(Fraction(0), self.base.zero())

    def _check(self, *pts: SemidirectPoint) -> None:
        for p in pts:
            if p.x.algebra is not self.base:
                raise AlgebraMismatch("point belongs to another group")

    def product(self, p: SemidirectPoint, q: SemidirectPoint) -> SemidirectPoint:
        self._check(p, q)
        return SemidirectPoint(p.t + q.t, bch_product(self.flow_automorphism(-q.t, p.x), q.x))

    def inverse(self, p: SemidirectPoint) -> SemidirectPoint:
        self._check(p)
        return SemidirectPoint(-p.t, self.flow_automorphism(p.t, -p.x))

    def equal(self, p: SemidirectPoint, q: SemidirectPoint, tol: float = 0.0) -> bool:
        if tol == 0.0:
            return p.t == q.t and p.x == q.x
        return abs(float(p.t) - float(q.t)) <= tol and (p.x.to_float() - q.x.to_float()).norm() <= tol

    # -- extended algebra and exponentials -------------------------------
    def extended_algebra(self) -> NilpotentAlgebra:
        """``R ω ⊕ N`` with ``[ω, x] = D x``; index 0 is ``ω``."""
        if self._extended is None:
            if not (self.nilpotent and self.exact):
                raise SemidirectError("exact exponentials need a nilpotent rational derivation")
            a = self.base
            consts: dict[tuple[int, int], dict[int, Fraction]] = {}
            for (i, j), vec in a.table.items():
                if i < j:
                    consts[(i + 1, j + 1)] = {k + 1: c for k, c in vec.items()}
            for j in range(a.dim):
                col = {k + 1: self.D[k, j] for k in range(a.dim) if self.D[k, j]}
                if col:
                    consts[(0, j + 1)] = col
            self._extended = NilpotentAlgebra(
                a.dim + 1, consts, labels=("w",) + a.labels, name=f"R x| {a.name or 'N'}"
            )
        return self._extended

    def lift(self, tau, xi) -> Element:
        """Element ``τ ω + ξ`` of the extended algebra."""
        g = self.extended_algebra()
        xi = xi.coords if isinstance(xi, Element) else xi
        return g.element([tau] + list(xi))

    def to_point(self, z: Element) -> SemidirectPoint:
        """Convert ``exp(z)`` to ``(t, x)`` coordinates: ``x = exp(-tω) exp(z)``."""
        g = self.extended_algebra()
        t = z.coords[0]
        shift = g.basis_element(0, z.exact) * (-t)
        rest = bch_product(shift, z)
        return SemidirectPoint(t, Element(self.base, rest.coords[1:]))

    def from_point(self, p: SemidirectPoint) -> Element:
        g = self.extended_algebra()
        return bch_product(g.basis_element(0, p.x.exact) * p.t, self.lift(0, p.x))

    def sd_exp(self, duration, tau, xi) -> SemidirectPoint:
        """``exp(duration (τ ω + ξ))`` as a point of ``G``."""
        return self.to_point(self.lift(tau, xi) * duration)

    def word_endpoint(self, steps: Iterable[tuple[object, object, object]]) -> SemidirectPoint:
        """Endpoint of ``∏ exp(h_i (τ_i ω + ξ_i))`` for steps ``(h_i, τ_i, ξ_i)``."""
        g = self.extended_algebra()
        z = g.zero()
        for h, tau, xi in steps:
            z = bch_product(z, self.lift(tau, xi) * h)
        return self.to_point(z)

    # -- the halfspace --------------------------------------------------
    @staticmethod
    def chi(p: SemidirectPoint):
        return p.t

    @staticmethod
    def halfspace_contains(p: SemidirectPoint) -> bool:
        return p.t >= 0

    # -- the translated-ball inclusion -----------------------------------
    def lemma4_inclusion_check(
        self, q: Element, eps, t, n: int, samples: int = 20, seed: int = 0, M: float | None = None
    ) -> dict:
        """Factor sampled points of ``(nt, nq + (εB_1)^n)`` as ``n`` points of ``(t, q + MεB_1)``.

        The factors are ``(t, A_{(n-k)t} x_k)``; each is checked to lie in the
        left-hand factor set and their product against the right-hand point.
        """
        a = self.base
        if n * float(t) >= 1:
            raise SemidirectError("need n t < 1")
        if not a.is_central(q) or any(q.coords[i] for i in self.layer1):
            raise SemidirectError("q must be central and off the first layer")
        if not self._apply(q).is_zero():
            raise SemidirectError("D q must vanish")
        if M is None:
            M = self.constant_M()["certified"]
        rng = np.random.default_rng(seed)
        exact = q.exact and self.exact and self.nilpotent and is_exact_scalar(t) and is_exact_scalar(eps)
        violations = []
        worst = 0.0
        for s in range(samples):
            xs = []
            for _ in range(n):
                g = rng.standard_normal(len(self.layer1))
                g *= rng.uniform() ** (1 / len(g)) / np.linalg.norm(g)
                y = [Fraction(0)] * a.dim
                for i, c in zip(self.layer1, g):
                    y[i] = Fraction(float(c)).limit_denominator(10**6) * 999 / 1000
                yv = a.element(y) * eps
                xs.append((q + yv) if exact else (q + yv).to_float())
            rhs = SemidirectPoint(n * t, xs[0])
            for x in xs[1:]:
                rhs = SemidirectPoint(rhs.t, bch_product(rhs.x, x))
            lhs = None
            for k, x in enumerate(xs, start=1):
                fk = SemidirectPoint(t, self.flow_automorphism((n - k) * t, x))
                off = (fk.x - (q if exact else q.to_float())).to_float()
                if any(abs(off.coords[i]) > 1e-12 for i in range(a.dim) if i not in self.layer1):
                    violations.append({"sample": s, "factor": k, "reason": "left the translated first layer"})
                if off.norm() >= M * float(eps):
                    violations.append({"sample": s, "factor": k, "reason": "outside radius M eps"})
                lhs = fk if lhs is None else self.product(lhs, fk)
            if exact:
                ok = lhs.t == rhs.t and lhs.x == rhs.x
                gap = 0.0 if ok else (lhs.x.to_float() - rhs.x.to_float()).norm()
            else:
                gap = abs(float(lhs.t) - float(rhs.t)) + (lhs.x.to_float() - rhs.x.to_float()).norm()
                ok = gap <= 1e-9 * (1 + rhs.x.norm())
            worst = max(worst, gap)
            if not ok:
                violations.append({"sample": s, "reason": "factor product differs", "gap": gap})
        return {"n": n, "t": float(t), "eps": float(eps), "M": M, "samples": samples, "exact": exact,
                "max_gap": worst, "violations": violations, "passed": not violations}


def group_from_spec(base: NilpotentAlgebra, spec: dict) -> SemidirectGroup:
    """``{"ad_v": [[...]], "layer1": [...]}``; entries may be ints or ``"p/q"`` strings."""
    m = [[to_fraction(c) if isinstance(c, str) else c for c in row] for row in spec["ad_v"]]
    return SemidirectGroup(base, m, spec.get("layer1"))
