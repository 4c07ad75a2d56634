"""Attainable sets of cone-constrained words and the halfspace attainability demo.

A word is a list of ``(direction, duration)`` with every direction in the cone
``C``.  For a semidirect group the directions live in ``R ω ⊕ N`` and endpoints
are computed exactly with the BCH product of that extended algebra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import optimize

from ..bch_group import bch_product
from ..cc_metric import ControlWord, steer
from ..cones import Cone, ConeError, degree_of_contact, min_lift, phi_margin
from ..lie_core import Element, NilpotentAlgebra
from ..semidirect import SemidirectGroup, SemidirectPoint

CHI_FLOOR = -1e-9


# ---------------------------------------------------------------------------
# sampling


@dataclass
class AttainableCloud:
    points: list
    words: list[list[tuple[np.ndarray, float]]]
    cone: Cone

    def coords(self) -> np.ndarray:
        rows = []
        for p in self.points:
            if isinstance(p, SemidirectPoint):
                rows.append([float(p.t)] + [float(c) for c in p.x.coords])
            else:
                rows.append([float(c) for c in p.coords])
        return np.array(rows)

    def chi(self) -> np.ndarray:
        return np.array([float(p.t) for p in self.points if isinstance(p, SemidirectPoint)])

    def admissible(self, tol: float = 1e-10) -> bool:
        return all(self.cone.distance(d) <= tol and t >= 0 for w in self.words for d, t in w)

    def coverage(self, lo: Sequence[float], hi: Sequence[float], cells: int = 4, dims: Sequence[int] | None = None) -> float:
        """Fraction of the ``cells^k`` boxes of ``[lo, hi]`` that contain a cloud point."""
        c = self.coords()
        if dims is not None:
            c = c[:, list(dims)]
        lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
        inside = np.all((c >= lo) & (c < hi), axis=1)
        idx = np.floor((c[inside] - lo) / (hi - lo) * cells).astype(int)
        hit = {tuple(r) for r in idx}
        return len(hit) / cells ** len(lo)


def _sample_direction(cone: Cone, rng: np.random.Generator, extreme: bool) -> np.ndarray:
    if cone.kind == "polyhedral" and cone.generators is not None:
        g = cone.generators
        if extreme:
            return g[rng.integers(len(g))].copy()
        return rng.exponential(size=len(g)) @ g
    ip = cone.interior_point()
    while True:
        x = rng.standard_normal(cone.dim)
        try:
            t0 = min_lift(cone, x, ip)
        except ConeError:
            continue
        # t0 puts x on the boundary (an extreme-ish ray); beyond it is interior
        t = t0 if extreme else t0 + rng.exponential() * np.linalg.norm(x)
        d = x + t * ip
        if np.linalg.norm(d) > 0:
            return d


def attainable_sample(
    target: NilpotentAlgebra | SemidirectGroup,
    cone: Cone,
    depth: int = 8,
    budget: float = 1.0,
    samples: int = 1000,
    seed: int = 0,
    extreme_fraction: float = 0.5,
) -> AttainableCloud:
    """Endpoints of random words with at most ``depth`` steps and total time at most ``budget``.

    Directions are unit vectors of ``cone``; about ``extreme_fraction`` of them
    are extreme rays (generators, or boundary rays for curved cones).
    """
    rng = np.random.default_rng(seed)
    semi = isinstance(target, SemidirectGroup)
    alg = target.extended_algebra() if semi else target
    if cone.dim != alg.dim:
        raise ConeError("cone dimension does not match the algebra")
    points, words = [], []
    for _ in range(samples):
        m = int(rng.integers(1, depth + 1))
        total = budget * rng.uniform() ** (1 / max(1, alg.dim))
        times = rng.dirichlet(np.ones(m)) * total
        word = []
        z = alg.zero(False)
        for t in times:
            d = _sample_direction(cone, rng, rng.uniform() < extreme_fraction)
            d = d / np.linalg.norm(d)
            word.append((d, float(t)))
            z = bch_product(z, Element(alg, d * t))
        points.append(target.to_point(z) if semi else z)
        words.append(word)
    return AttainableCloud(points, words, cone)


# ---------------------------------------------------------------------------
# hypotheses of the halfspace theorem


@dataclass
class HypothesisReport:
    checks: dict[str, dict]
    contact: dict | None = None

    @property
    def failed(self) -> list[str]:
        return [k for k, v in self.checks.items() if not v["passed"]]

    @property
    def ok(self) -> bool:
        return not self.failed

    def to_json(self) -> dict:
        return {"ok": self.ok, "failed": self.failed, "checks": self.checks}


def _cone_in_halfspace(cone: Cone, index: int = 0, tol: float = 1e-12) -> bool:
    if cone.kind == "power":
        u, w, z = cone.power_index
        return index in (u, w)
    if cone.kind == "lorentz":
        return cone.axis[index] >= 1 / math.sqrt(2) - tol
    if cone.kind == "polyhedral":
        if cone.generators is not None:
            return bool((cone.generators[:, index] >= -tol).all())
        from scipy.optimize import linprog

        c = np.zeros(cone.dim)
        c[index] = 1.0
        res = linprog(c, A_ub=-cone.halfspaces, b_ub=np.zeros(len(cone.halfspaces)), bounds=[(-1, 1)] * cone.dim)
        return res.status == 0 and res.fun >= -tol
    for ix, sub in cone.blocks:
        if index in ix:
            return _cone_in_halfspace(sub, ix.index(index), tol)
    return False


def theorem1_hypotheses(
    group: SemidirectGroup, cone: Cone, p: Sequence, v: Sequence, contact_margin: float = 0.25, **contact_opts
) -> HypothesisReport:
    """Check every hypothesis of the halfspace theorem and report margins."""
    g = group.extended_algebra()
    base = group.base
    d = base.step
    pe, ve = g.element(p), g.element(v)
    pf, vf = pe.to_float().coords, ve.to_float().coords
    checks: dict[str, dict] = {}
    checks["generating"] = {"passed": bool(cone.generating())}
    checks["cone_in_halfspace"] = {"passed": _cone_in_halfspace(cone, 0)}
    checks["step"] = {"passed": d > 1, "value": d}
    dist_p = cone.distance(pf)
    m_p = cone.interior_margin(pf) if dist_p <= 1e-12 else 0.0
    checks["p_on_boundary"] = {"passed": dist_p <= 1e-12 and m_p <= 1e-12, "distance": dist_p, "margin": m_p}
    top = base.lower_central_series[d - 1]
    in_top = pe.coords[0] == 0 and top.contains(list(pe.coords[1:])) and not pe.is_zero()
    checks["p_in_top_term"] = {"passed": bool(in_top)}
    m_v = cone.interior_margin(vf)
    checks["v_interior"] = {"passed": m_v > 0, "margin": m_v}
    checks["v_centralizes_p"] = {"passed": g.bracket(ve, pe).is_zero()}
    checks["v_splits"] = {"passed": ve.coords[0] > 0, "chi": float(ve.coords[0])}
    layer = [i + 1 for i in group.layer1]
    inv = True
    for i in layer:
        img = g.bracket(ve, g.basis_element(i))
        if any(img.coords[j] for j in range(g.dim) if j not in layer):
            inv = False
    checks["layer_invariant"] = {"passed": inv}
    contact = None
    threshold = d / (d - 1)
    if checks["p_on_boundary"]["passed"]:
        L = np.zeros((len(layer), g.dim))
        for r, i in enumerate(layer):
            L[r, i] = 1.0
        est = degree_of_contact(cone, L, pf, **contact_opts)
        lo = est.exponent - 3 * est.stderr if est.measurable else math.inf
        contact = est.to_json()
        checks["contact"] = {
            "passed": lo > threshold + contact_margin,
            "exponent": est.exponent,
            "lower": lo,
            "threshold": threshold,
            "margin": contact_margin,
        }
    else:
        checks["contact"] = {"passed": False, "reason": "p is not a boundary point"}
    return HypothesisReport(checks, contact)


# ---------------------------------------------------------------------------
# constructive reachability of halfspace points


@dataclass
class ReachedPoint:
    target: tuple
    endpoint: SemidirectPoint | None
    distance: float
    steps: list[tuple[object, Element]] = field(default_factory=list)
    beta: Fraction | None = None
    iterations: int = 0

    def to_json(self) -> dict:
        return {
            "target": [float(c) for c in self.target],
            "distance": self.distance,
            "chi": None if self.endpoint is None else float(self.endpoint.t),
            "steps": len(self.steps),
            "beta": None if self.beta is None else str(self.beta),
            "iterations": self.iterations,
        }


class HalfspaceSteerer:
    """Builds admissible words reaching points of ``G^+`` (proof-following construction).

    Every horizontal step ``(a, t)`` of a steering word in N is replaced by the
    cone direction ``s v + p + β a`` run for time ``t/β``: its first-layer
    motion is ``t a``, it drifts along the central ``p`` by ``t/β`` and costs
    ``χ = s t/β``, where ``s`` is the least admissible lift (of order ``β^c``
    for contact order ``c``).  The drift is cancelled by steering to a
    shifted target; a leading ``v`` step tops up χ and a final ``p`` step
    fills the remaining central gap.  Small β makes the χ cost vanish.
    """

    def __init__(self, group: SemidirectGroup, cone: Cone, p: Sequence, v: Sequence, tol: float = 1e-3):
        self.group = group
        self.cone = cone
        self.g = group.extended_algebra()
        self.base = group.base
        self.pe = self.g.element(p)
        self.ve = self.g.element(v)
        self.pN = Element(self.base, self.pe.coords[1:])
        self.pp = sum(c * c for c in self.pN.coords)
        self.tol = tol
        self._lift: dict = {}

    def _lift_scalar(self, a: Element, beta: Fraction) -> Fraction:
        key = (tuple(a.coords), beta)
        s = self._lift.get(key)
        if s is not None:
            return s
        base = self.pe + self._embed(a) * beta
        bf = base.to_float().coords
        vf = self.ve.to_float().coords
        s_f = min_lift(self.cone, bf, vf)
        s = Fraction(s_f * (1 + 1e-9)).limit_denominator(10**15) if s_f > 0 else Fraction(0)
        while not self.cone.contains_exact(list((base + self.ve * s).coords)):
            s = 2 * s + Fraction(1, 10**30)
        self._lift[key] = s
        return s

    def _embed(self, x: Element) -> Element:
        return self.g.element([0] + list(x.coords))

    def convert(self, word: ControlWord, beta: Fraction) -> list[tuple[Fraction, Element]]:
        out = []
        for a, t in word.steps:
            s = self._lift_scalar(a, beta)
            direction = self.ve * s + self.pe + self._embed(a) * beta
            out.append((Fraction(t) / beta, direction))
        return out

    def evaluate(self, steps: Sequence[tuple[Fraction, Element]]) -> SemidirectPoint:
        z = self.g.zero()
        for h, dvec in steps:
            z = bch_product(z, dvec * h)
        return self.group.to_point(z)

    @staticmethod
    def chi_cost(steps) -> Fraction:
        return sum((h * dvec.coords[0] for h, dvec in steps), Fraction(0))

    def _split(self, err: Element) -> tuple[Fraction, Element]:
        cp = sum(c * q for c, q in zip(err.coords, self.pN.coords)) / self.pp
        return cp, err - self.pN * cp

    @staticmethod
    def _central_target(T: float, K: float, d: int) -> float:
        """Solve ``y + K |y|^(1/d) = T`` on the branch where the map is monotone."""
        if K <= 0:
            return T
        u0 = (K / d) ** (1 / (d - 1))
        top = -(u0**d) + K * u0
        if T <= top:
            f = lambda u: -(u**d) + K * u - T
            hi = max(2 * u0, 1.0)
            while f(hi) > 0:
                hi *= 2
            return -(optimize.brentq(f, u0, hi) ** d)
        f = lambda u: u**d + K * u - T
        return optimize.brentq(f, 0.0, max(T, 1.0) ** (1 / d) + 1) ** d

    def _solve(self, t_star: Fraction, x_star: Element, beta: Fraction, max_iter: int = 60):
        d = self.base.step
        y = x_star
        best = math.inf
        for it in range(1, max_iter + 1):
            word = steer(y)
            conv = self.convert(word, beta)
            chi_w = self.chi_cost(conv)
            s0 = max(Fraction(0), (t_star - chi_w) / self.ve.coords[0])
            steps = ([(s0, self.ve)] if s0 > 0 else []) + conv
            end = self.evaluate(steps)
            cp, rest = self._split(x_star - end.x)
            if rest.norm() <= self.tol / 4 and cp >= 0:
                if cp > 0:
                    steps.append((cp, self.pe))
                return steps, it
            r = float(rest.norm())
            if it > 6 and r > 10 * best + 1:
                # the shear of the ω flow dominates at this β
                return None, it
            # central drift of the word grows like its length, i.e. like |y_p|^(1/d)
            best = min(best, r) if it > 3 else best
            yp = float(self._split(y)[0])
            ep = float(self._split(end.x)[0])
            xp = float(self._split(x_star)[0])
            K = (ep - yp) / max(abs(yp), 1.0) ** (1 / d)
            slack = max(1e-3, abs(ep - yp) * 1e-6)
            yp_new = self._central_target(xp - slack, K, d)
            y = y + rest + self.pN * (Fraction(yp_new) - Fraction(yp))
            y = self.base.element(
                [Fraction(c).limit_denominator(10**6) if abs(c) < 10**6 else Fraction(round(c)) for c in y.coords]
            )
        return None, max_iter

    def reach(self, t_star, x_star, max_beta_trials: int = 40) -> ReachedPoint:
        t_star = Fraction(t_star)
        x_star = x_star if isinstance(x_star, Element) else self.base.element(x_star)
        target = (t_star,) + tuple(x_star.coords)
        cp, rest = self._split(x_star)
        if t_star == 0 and rest.is_zero() and cp >= 0:
            steps = [(cp, self.pe)] if cp > 0 else []
            end = self.evaluate(steps)
            return ReachedPoint(target, end, self._distance(end, t_star, x_star), steps, None, 0)
        beta = Fraction(1, 16)
        best = ReachedPoint(target, None, math.inf)
        iters = 0
        for _ in range(max_beta_trials):
            steps, it = self._solve(t_star, x_star, beta)
            iters += it
            if steps is None:
                beta /= 2
                continue
            end = self.evaluate(steps)
            dist = self._distance(end, t_star, x_star)
            if dist < best.distance:
                best = ReachedPoint(target, end, dist, steps, beta, iters)
            if dist <= self.tol * Fraction(9, 10):
                break
            over = float(self.chi_cost([s for s in steps if s[1] is not self.ve]) - t_star)
            # χ cost grows roughly linearly in β; jump to a power of two that should fit
            want = (self.tol / 4) / max(over, 1e-300)
            k = max(1, math.ceil(-math.log2(want))) if want < 1 else 1
            beta = beta / 2**k
        best.iterations = iters
        return best

    @staticmethod
    def _distance(end: SemidirectPoint, t_star: Fraction, x_star: Element) -> float:
        dt = Fraction(end.t) - t_star
        dx = end.x - x_star
        sq = dt * dt + sum(c * c for c in dx.coords)
        return math.sqrt(float(sq))

    def admissible(self, steps) -> bool:
        return all(h >= 0 and self.cone.contains_exact(list(dvec.coords)) for h, dvec in steps)


def default_grid(levels: Sequence = (-1, Fraction(-1, 2), 0, Fraction(1, 2), 1),
                 chi_levels: Sequence = (0, Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), 1), dim: int = 3):
    """``len(levels)^dim`` points of N; the χ value cycles through ``chi_levels``."""
    import itertools

    pts = []
    for idx in itertools.product(range(len(levels)), repeat=dim):
        x = [Fraction(levels[i]) for i in idx]
        t = Fraction(chi_levels[sum(idx) % len(chi_levels)])
        pts.append((t, x))
    return pts


def psi_table(group: SemidirectGroup, cone: Cone, p: Sequence, v: Sequence, eps_grid: Sequence[float] | None = None) -> dict:
    """Margin φ(ε) of ``p + φ v + ε B`` over the first layer and ``ψ = sqrt(φ ε^(d/(d-1)))``.

    Both ``φ/ψ`` and ``ψ/ε^(d/(d-1))`` must shrink with ε for the scale
    separation the construction relies on.
    """
    d = group.base.step
    a = d / (d - 1)
    eps = list(np.logspace(-3, -1, 8)) if eps_grid is None else [float(e) for e in eps_grid]
    g = group.extended_algebra()
    L = np.zeros((len(group.layer1), g.dim))
    for r, i in enumerate(group.layer1):
        L[r, i + 1] = 1.0
    pf = g.element(p).to_float().coords
    vf = g.element(v).to_float().coords
    tab = phi_margin(cone, pf, vf, L, eps, target_exponent=a)
    psi = [math.sqrt(f * e**a) for f, e in zip(tab.phi, tab.eps)]
    r1 = [f / q if q else 0.0 for f, q in zip(tab.phi, psi)]
    r2 = [q / e**a for q, e in zip(psi, tab.eps)]
    # tab.eps is increasing, so the ratios must increase along it
    shrinking = all(x <= y * (1 + 1e-9) for x, y in zip(r1, r1[1:])) and all(x <= y * (1 + 1e-9) for x, y in zip(r2, r2[1:]))
    return {"eps": tab.eps, "phi": tab.phi, "psi": psi, "phi_over_psi": r1, "psi_over_scale": r2,
            "phi_exponent": tab.exponent, "little_o": tab.little_o, "shrinking": shrinking}


@dataclass
class DemoReport:
    hypotheses: HypothesisReport
    M: dict | None
    reached: list[ReachedPoint]
    tol: float
    cloud_min_chi: float | None
    negative_chi: int
    admissible: bool
    psi: dict | None = None

    @property
    def all_reached(self) -> bool:
        return bool(self.reached) and all(r.distance <= self.tol for r in self.reached)

    @property
    def max_distance(self) -> float:
        return max((r.distance for r in self.reached), default=0.0)

    def to_json(self) -> dict:
        return {
            "hypotheses": self.hypotheses.to_json(),
            "claim": "G+ grid reached" if self.all_reached else ("no claim" if not self.hypotheses.ok else "incomplete"),
            "M": self.M,
            "tol": self.tol,
            "max_distance": self.max_distance,
            "negative_chi": self.negative_chi,
            "cloud_min_chi": self.cloud_min_chi,
            "admissible": self.admissible,
            "psi": self.psi,
            "points": [r.to_json() for r in self.reached],
        }

    def csv(self) -> str:
        head = "t," + ",".join(f"x{i}" for i in range(len(self.reached[0].target) - 1)) + ",distance,chi,steps\n" if self.reached else "\n"
        return head + "".join(
            ",".join(repr(float(c)) for c in r.target) + f",{r.distance!r},{float(r.endpoint.t)!r},{len(r.steps)}\n"
            for r in self.reached
        )


def theorem1_demonstration(
    group: SemidirectGroup,
    cone: Cone,
    p: Sequence,
    v: Sequence,
    grid: Sequence | None = None,
    tol: float = 1e-3,
    cloud_samples: int = 200,
    seed: int = 0,
) -> DemoReport:
    """Verify the hypotheses, then reach every grid point of ``G^+`` with an admissible word."""
    hyp = theorem1_hypotheses(group, cone, p, v)
    if not hyp.ok:
        return DemoReport(hyp, None, [], tol, None, 0, True)
    M = group.constant_M()
    st = HalfspaceSteerer(group, cone, p, v, tol)
    grid = default_grid(dim=group.base.dim) if grid is None else grid
    reached = [st.reach(t, x) for t, x in grid]
    admissible = all(st.admissible(r.steps) for r in reached)
    chis = [float(r.endpoint.t) for r in reached if r.endpoint is not None]
    cloud = attainable_sample(group, cone, depth=8, budget=2.0, samples=cloud_samples, seed=seed)
    chis_cloud = list(cloud.chi())
    negative = sum(1 for c in chis + chis_cloud if c < CHI_FLOOR)
    psi = psi_table(group, cone, p, v)
    return DemoReport(hyp, M, reached, tol, min(chis_cloud, default=None), negative, admissible and cloud.admissible(), psi)


def demo_example(alpha=Fraction(1, 3)) -> tuple[SemidirectGroup, Cone, list, list]:
    """``R ⋉ Heisenberg`` with ``D e2 = e1`` and the cone ``τ^α x3^(1-α) >= |(x1, x2)|``.

    Coordinates of the extended algebra are ``(τ, x1, x2, x3)``.  The contact
    order of the cone with the first layer at ``p = e3`` is ``1/α``.  The
    splitting element is ``v = ω + e3``; it acts like ``ω`` because ``e3`` is
    central.
    """
    from ..lie_core import heisenberg

    h = heisenberg()
    group = SemidirectGroup(h, [[0, 1, 0], [0, 0, 0], [0, 0, 0]])
    cone = Cone.power(4, 0, 3, [1, 2], Fraction(alpha))
    return group, cone, [0, 0, 0, 1], [1, 0, 0, 1]
