"""Closed convex cones in coordinate space.

Four kinds are supported:

* ``polyhedral``: conic hull of generator rows and/or ``{x : a_i . x >= 0}``;
* ``lorentz``: ``{x : a . x >= |x - (a . x) a|}`` for a unit axis ``a``;
* ``power``: ``{u^α w^(1-α) >= |z|, u, w >= 0}`` on chosen coordinates, the
  others free;
* ``product``: cones on disjoint coordinate blocks.

Projections onto polyhedral cones use a Lawson-Hanson active-set NNLS.  When
only halfspaces are known the projection goes through the polar cone, which
is generated by the negated normals (Moreau decomposition).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import optimize, stats

NNLS_TOL = 1e-10
MEMBER_TOL = 1e-12
DEFAULT_DIRECTIONS = 256
DEFAULT_RADII = tuple(np.logspace(-4, -1, 16))


class ConeError(ValueError):
    pass


class DegenerateCone(ConeError):
    """The cone has empty interior."""


# ---------------------------------------------------------------------------
# NNLS


def nnls(A: np.ndarray, b: np.ndarray, tol: float = NNLS_TOL, max_iter: int | None = None) -> tuple[np.ndarray, float]:
    """Active-set solution of ``min |A x - b|, x >= 0`` (Lawson and Hanson)."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    scale = max(1.0, np.abs(A).max(initial=0.0) * max(1.0, np.abs(b).max(initial=0.0)))
    max_iter = max_iter or 3 * n + 30
    w = A.T @ (b - A @ x)
    it = 0
    while (~passive).any() and w[~passive].max(initial=-np.inf) > tol * scale:
        it += 1
        if it > max_iter:
            break
        j = np.argmax(np.where(passive, -np.inf, w))
        passive[j] = True
        while True:
            z = np.zeros(n)
            z[passive] = np.linalg.lstsq(A[:, passive], b, rcond=None)[0]
            if (z[passive] > 0).all():
                x = z
                break
            mask = passive & (z <= 0)
            alpha = np.min(x[mask] / (x[mask] - z[mask]))
            x = x + alpha * (z - x)
            passive &= x > tol
            x[~passive] = 0.0
        w = A.T @ (b - A @ x)
    return x, float(np.linalg.norm(A @ x - b))


# ---------------------------------------------------------------------------
# power cone helpers


def _half_root_gap(a: float, b: float) -> float:
    """``(sqrt(a^2 + b) - a) / 2`` without cancellation."""
    s = math.sqrt(a * a + b)
    return b / (2 * (s + a)) if a > 0 else (s - a) / 2


def _half_root_sum(a: float, b: float) -> float:
    """``(a + sqrt(a^2 + b)) / 2`` without cancellation."""
    s = math.sqrt(a * a + b)
    return (a + s) / 2 if a >= 0 else b / (2 * (s - a))


def _power_distance(u0: float, w0: float, r: float, alpha: float) -> float:
    """Distance from ``(u0, w0, z)``, ``|z| = r``, to the 3D power cone."""
    if u0 >= 0 and w0 >= 0 and (r == 0 or u0**alpha * w0 ** (1 - alpha) >= r):
        return 0.0
    if r == 0:
        return math.hypot(min(u0, 0.0), min(w0, 0.0))
    if u0 <= 0 and w0 <= 0 and (-u0 / alpha) ** alpha * (-w0 / (1 - alpha)) ** (1 - alpha) >= r:
        return math.sqrt(u0 * u0 + w0 * w0 + r * r)

    # boundary point (pu, pw, r - δ): pu = (u0 + sqrt(u0^2 + 4 α ρ δ)) / 2, ρ = r - δ
    def g(delta: float) -> float:
        rho = r - delta
        pu = _half_root_sum(u0, 4 * alpha * rho * delta)
        pw = _half_root_sum(w0, 4 * (1 - alpha) * rho * delta)
        return pu**alpha * pw ** (1 - alpha) - rho

    # g(r) = 0 is the trivial root at the apex side; bracket the interior one
    lo, hi = 0.0, r / 2
    if g(lo) >= 0:
        return 0.0
    while g(hi) < 0:
        hi = (hi + r) / 2
        if hi == r:
            break
    delta = optimize.brentq(g, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    rho = r - delta
    du = _half_root_gap(u0, 4 * alpha * rho * delta)
    dw = _half_root_gap(w0, 4 * (1 - alpha) * rho * delta)
    return math.sqrt(du * du + dw * dw + delta * delta)


# ---------------------------------------------------------------------------
# cone


@dataclass
class Cone:
    kind: str
    dim: int
    generators: np.ndarray | None = None
    halfspaces: np.ndarray | None = None
    axis: np.ndarray | None = None
    power_index: tuple[int, int, tuple[int, ...]] | None = None
    alpha: Fraction | None = None
    blocks: list[tuple[tuple[int, ...], "Cone"]] = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in ("polyhedral", "lorentz", "power", "product"):
            raise ConeError(f"unknown cone kind {self.kind!r}")
        if self.kind == "polyhedral" and self.generators is None and self.halfspaces is None:
            raise ConeError("polyhedral cone needs generators or halfspaces")
        if self.kind == "lorentz":
            a = np.asarray(self.axis, dtype=float)
            if a.shape != (self.dim,) or not np.linalg.norm(a) > 0:
                raise ConeError("invalid lorentz axis")
            self.axis = a / np.linalg.norm(a)
        if self.kind == "power":
            if not 0 < self.alpha < 1:
                raise ConeError("power exponent must lie in (0, 1)")

    # constructors ---------------------------------------------------------

    @classmethod
    def from_generators(cls, gens: Sequence[Sequence[float]]) -> "Cone":
        g = np.atleast_2d(np.asarray(gens, dtype=float))
        return cls("polyhedral", g.shape[1], generators=g)

    @classmethod
    def from_halfspaces(cls, normals: Sequence[Sequence[float]]) -> "Cone":
        h = np.atleast_2d(np.asarray(normals, dtype=float))
        return cls("polyhedral", h.shape[1], halfspaces=h)

    @classmethod
    def whole_space(cls, dim: int) -> "Cone":
        eye = np.eye(dim)
        return cls("polyhedral", dim, generators=np.vstack([eye, -eye]))

    @classmethod
    def lorentz(cls, axis: Sequence[float]) -> "Cone":
        a = np.asarray(axis, dtype=float)
        return cls("lorentz", len(a), axis=a)

    @classmethod
    def power(cls, dim: int, u: int, w: int, z: Sequence[int], alpha) -> "Cone":
        return cls("power", dim, power_index=(u, w, tuple(z)), alpha=Fraction(alpha))

    @classmethod
    def product(cls, blocks: Sequence[tuple[Sequence[int], "Cone"]]) -> "Cone":
        bl = [(tuple(ix), c) for ix, c in blocks]
        dim = sum(len(ix) for ix, _ in bl)
        used = sorted(i for ix, _ in bl for i in ix)
        if used != list(range(dim)) or any(len(ix) != c.dim for ix, c in bl):
            raise ConeError("product blocks must partition the coordinates")
        return cls("product", dim, blocks=bl)

    # core geometry ----------------------------------------------------------

    def _vec(self, p) -> np.ndarray:
        v = np.asarray(getattr(p, "coords", p), dtype=float)
        if v.shape != (self.dim,):
            raise ConeError(f"point has shape {v.shape}, cone lives in R^{self.dim}")
        return v

    def projection(self, p) -> np.ndarray:
        """Nearest point of the cone (polyhedral and lorentz kinds)."""
        p = self._vec(p)
        if self.kind == "polyhedral":
            if self.generators is not None:
                lam, _ = nnls(self.generators.T, p)
                return self.generators.T @ lam
            lam, _ = nnls(-self.halfspaces.T, p)
            return p + self.halfspaces.T @ lam
        if self.kind == "lorentz":
            s = float(self.axis @ p)
            zv = p - s * self.axis
            r = float(np.linalg.norm(zv))
            if s >= r:
                return p
            if s <= -r:
                return np.zeros(self.dim)
            c = (s + r) / 2
            return c * self.axis + (c / r) * zv
        if self.kind == "product":
            out = np.zeros(self.dim)
            for ix, c in self.blocks:
                out[list(ix)] = c.projection(p[list(ix)])
            return out
        raise ConeError("projection is not available for power cones; use distance")

    def distance(self, p) -> float:
        p = self._vec(p)
        if self.kind == "polyhedral":
            if self.generators is not None:
                return nnls(self.generators.T, p)[1]
            lam, _ = nnls(-self.halfspaces.T, p)
            return float(np.linalg.norm(self.halfspaces.T @ lam))
        if self.kind == "lorentz":
            s = float(self.axis @ p)
            zv = p - s * self.axis
            r2 = float(zv @ zv)
            r = math.sqrt(r2)
            if s >= r:
                return 0.0
            if s <= -r:
                return float(np.linalg.norm(p))
            # (r - s)/sqrt(2) with r - s = (r^2 - s^2)/(r + s) when s > 0
            gap = (r2 - s * s) / (r + s) if s > 0 else r - s
            return gap / math.sqrt(2)
        if self.kind == "power":
            u, w, z = self.power_index
            r = float(np.linalg.norm(p[list(z)])) if z else 0.0
            return _power_distance(float(p[u]), float(p[w]), r, float(self.alpha))
        return math.sqrt(sum(c.distance(p[list(ix)]) ** 2 for ix, c in self.blocks))

    def contains(self, p, tol: float = MEMBER_TOL) -> bool:
        p = self._vec(p)
        scale = max(1.0, float(np.abs(p).max(initial=0.0)))
        if self.kind == "polyhedral" and self.halfspaces is not None:
            return bool((self.halfspaces @ p >= -tol * scale).all())
        if self.kind == "lorentz":
            s = float(self.axis @ p)
            return s >= float(np.linalg.norm(p - s * self.axis)) - tol * scale
        if self.kind == "power":
            u, w, z = self.power_index
            r = float(np.linalg.norm(p[list(z)])) if z else 0.0
            if p[u] < -tol * scale or p[w] < -tol * scale:
                return False
            a = float(self.alpha)
            return max(p[u], 0.0) ** a * max(p[w], 0.0) ** (1 - a) >= r - tol * scale
        if self.kind == "product":
            return all(c.contains(p[list(ix)], tol) for ix, c in self.blocks)
        return self.distance(p) <= tol * scale

    def contains_exact(self, p: Sequence) -> bool:
        """Membership of a rational point decided in exact arithmetic where the kind allows it."""
        q = [Fraction(c) for c in p]
        if self.kind == "power":
            u, w, z = self.power_index
            if q[u] < 0 or q[w] < 0:
                return False
            a, b = self.alpha.numerator, self.alpha.denominator
            # u^(a/b) w^(1-a/b) >= |z|  <=>  u^(2a) w^(2(b-a)) >= (|z|^2)^b
            r2 = sum((q[i] * q[i] for i in z), Fraction(0))
            return q[u] ** (2 * a) * q[w] ** (2 * (b - a)) >= r2**b
        if self.kind == "lorentz":
            ax = [Fraction(c).limit_denominator(10**12) for c in self.axis]
            n2 = sum(c * c for c in ax)
            s = sum(c * x for c, x in zip(ax, q))
            perp2 = sum(x * x for x in q) - s * s / n2
            return s >= 0 and s * s / n2 >= perp2
        if self.kind == "polyhedral" and self.halfspaces is not None:
            return all(sum(Fraction(c) * x for c, x in zip(row, q)) >= 0 for row in self.halfspaces)
        if self.kind == "product":
            return all(c.contains_exact([q[i] for i in ix]) for ix, c in self.blocks)
        return self.contains(np.array([float(c) for c in q]))

    # facets and interior ------------------------------------------------------

    def facets(self) -> np.ndarray:
        """Unit inward normals describing the cone as an intersection of halfspaces.

        Generator cones are handled by enumerating hyperplanes through
        ``dim - 1`` generators (fine for the small dimensions used here).
        Returns an empty array for the whole space.
        """
        if self.kind != "polyhedral":
            raise ConeError("facets are defined for polyhedral cones")
        if self.halfspaces is not None:
            h = self.halfspaces
            return h / np.linalg.norm(h, axis=1)[:, None]
        g = self.generators
        n = self.dim
        if np.linalg.matrix_rank(g) < n:
            raise DegenerateCone("generators do not span the space")
        out: list[np.ndarray] = []
        for sub in itertools.combinations(range(len(g)), n - 1):
            m = g[list(sub)]
            if n > 1 and np.linalg.matrix_rank(m) < n - 1:
                continue
            normal = np.linalg.svd(m)[2][-1] if n > 1 else np.ones(1)
            vals = g @ normal
            scale = np.linalg.norm(g, axis=1).max()
            if (vals <= 1e-12 * scale).all() and (vals < -1e-12 * scale).any():
                normal = -normal
            elif not ((vals >= -1e-12 * scale).all() and (vals > 1e-12 * scale).any()):
                continue
            if not any(np.allclose(normal, f, atol=1e-10) for f in out):
                out.append(normal)
        return np.array(out).reshape(-1, n)

    def interior_margin(self, p) -> float:
        """Radius of the largest ball around ``p`` inside the cone (0 if none)."""
        p = self._vec(p)
        if self.kind == "polyhedral":
            f = self.facets()
            if f.size == 0:
                return math.inf
            if self.halfspaces is not None and not self.generating():
                raise DegenerateCone("halfspaces cut out a cone with empty interior")
            return max(0.0, float((f @ p).min()))
        if self.kind == "lorentz":
            s = float(self.axis @ p)
            r = float(np.linalg.norm(p - s * self.axis))
            return max(0.0, (s - r) / math.sqrt(2))
        if self.kind == "power":
            return self._power_margin(p)
        return min(c.interior_margin(p[list(ix)]) for ix, c in self.blocks)

    def _power_margin(self, p: np.ndarray) -> float:
        # minimum of <p, s> over unit s on the boundary of the dual cone
        u, w, z = self.power_index
        a = float(self.alpha)
        pu, pw = float(p[u]), float(p[w])
        r = float(np.linalg.norm(p[list(z)])) if z else 0.0
        if not self.contains(p, 0.0):
            return 0.0
        if not z:
            return max(0.0, min(pu, pw))

        def f(theta: float) -> float:
            su, sw = math.cos(theta), math.sin(theta)
            c = (su / a) ** a * (sw / (1 - a)) ** (1 - a)
            return (pu * su + pw * sw - r * c) / math.sqrt(1 + c * c)

        grid = np.linspace(0, math.pi / 2, 201)
        vals = [f(t) for t in grid]
        k = int(np.argmin(vals))
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, 200)]
        best = min(vals)
        if hi > lo:
            res = optimize.minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
            best = min(best, float(res.fun))
        return max(0.0, best)

    def generating(self) -> bool:
        """Nonempty interior."""
        if self.kind == "polyhedral":
            if self.generators is not None:
                return bool(np.linalg.matrix_rank(self.generators) == self.dim)
            return _max_margin(self.halfspaces, np.eye(self.dim)) > 1e-12
        if self.kind == "product":
            return all(c.generating() for _, c in self.blocks)
        return True

    def interior_point(self) -> np.ndarray:
        if self.kind == "polyhedral":
            if self.generators is not None:
                return self.generators.sum(axis=0)
            h = self.facets()
            res = optimize.linprog(
                c=np.r_[np.zeros(self.dim), -1.0],
                A_ub=np.c_[-h, np.ones(len(h))],
                b_ub=np.zeros(len(h)),
                bounds=[(-1, 1)] * self.dim + [(None, 1)],
            )
            return res.x[: self.dim]
        if self.kind == "lorentz":
            return self.axis.copy()
        if self.kind == "power":
            u, w, _ = self.power_index
            x = np.zeros(self.dim)
            x[u] = x[w] = 1.0
            return x
        x = np.zeros(self.dim)
        for ix, c in self.blocks:
            x[list(ix)] = c.interior_point()
        return x

    # serialization -----------------------------------------------------------

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind, "dim": self.dim}
        if self.generators is not None:
            out["generators"] = self.generators.tolist()
        if self.halfspaces is not None:
            out["halfspaces"] = self.halfspaces.tolist()
        if self.axis is not None:
            out["axis"] = self.axis.tolist()
        if self.power_index is not None:
            u, w, z = self.power_index
            out.update({"u": u, "w": w, "z": list(z), "alpha": str(self.alpha)})
        if self.blocks:
            out["blocks"] = [{"indices": list(ix), "cone": c.to_json()} for ix, c in self.blocks]
        return out

    @classmethod
    def from_json(cls, data: dict) -> "Cone":
        kind = data["kind"]
        if kind == "polyhedral":
            g, h = data.get("generators"), data.get("halfspaces")
            dim = data.get("dim") or len((g or h)[0])
            return cls(
                "polyhedral",
                dim,
                generators=None if g is None else np.asarray(g, dtype=float),
                halfspaces=None if h is None else np.asarray(h, dtype=float),
            )
        if kind == "lorentz":
            return cls.lorentz(data["axis"])
        if kind == "power":
            return cls.power(data["dim"], data["u"], data["w"], data["z"], Fraction(str(data["alpha"])))
        if kind == "product":
            return cls.product([(b["indices"], cls.from_json(b["cone"])) for b in data["blocks"]])
        raise ConeError(f"unknown cone kind {kind!r}")


def load_cone(path: str) -> Cone:
    with open(path) as fh:
        return Cone.from_json(json.load(fh))


def cone_distance(cone: Cone, p) -> float:
    return cone.distance(p)


def interior_contains(cone: Cone, p) -> tuple[bool, float]:
    """Whether a ball around ``p`` lies in the cone, with the ball radius."""
    if not cone.generating():
        raise DegenerateCone("cone has empty interior")
    m = cone.interior_margin(p)
    return m > 0, m


# ---------------------------------------------------------------------------
# controllability criterion


def _max_margin(normals: np.ndarray, basis: np.ndarray) -> float:
    """max over y in [-1,1]^k of min_i n_i . (basis^T y) / |n_i|, capped at 1."""
    nn = normals / np.linalg.norm(normals, axis=1)[:, None]
    k = basis.shape[0]
    a_ub = np.c_[-(nn @ basis.T), np.ones(len(nn))]
    res = optimize.linprog(
        c=np.r_[np.zeros(k), -1.0],
        A_ub=a_ub,
        b_ub=np.zeros(len(nn)),
        bounds=[(-1, 1)] * k + [(None, 1)],
    )
    if res.status != 0:
        raise ConeError(f"linear program failed: {res.message}")
    return float(-res.fun)


@dataclass
class Verdict:
    verdict: str
    margin: float
    witness: list[float] | None

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "margin": self.margin, "witness": self.witness}


def controllability_criterion(cone: Cone, algebra, tol: float = 1e-9) -> Verdict:
    """Decide whether the interior of ``cone`` meets the derived algebra."""
    if cone.dim != algebra.dim:
        raise ConeError("cone and algebra dimensions differ")
    if not cone.generating():
        raise DegenerateCone("the criterion applies to generating cones")
    basis = np.array([[float(c) for c in row] for row in algebra.derived_basis()], dtype=float).reshape(-1, cone.dim)
    if basis.size == 0:
        return Verdict("not-controllable-by-criterion", 0.0, None)
    q, _ = np.linalg.qr(basis.T)
    onb = q.T
    if cone.kind == "polyhedral":
        f = cone.facets()
        if f.size == 0:
            return Verdict("controllable", math.inf, onb[0].tolist())
        nn = f / np.linalg.norm(f, axis=1)[:, None]
        k = onb.shape[0]
        res = optimize.linprog(
            c=np.r_[np.zeros(k), -1.0],
            A_ub=np.c_[-(nn @ onb.T), np.ones(len(nn))],
            b_ub=np.zeros(len(nn)),
            bounds=[(-1, 1)] * k + [(None, 1)],
        )
        m = float(-res.fun)
        wit = (onb.T @ res.x[:k]).tolist()
    elif cone.kind == "lorentz":
        pa = onb.T @ (onb @ cone.axis)
        c = float(np.linalg.norm(pa))
        m = (c - math.sqrt(max(0.0, 1 - c * c))) / math.sqrt(2)
        wit = (pa / c).tolist() if c > 0 else None
    else:
        rng = np.random.default_rng(0)
        m, wit = 0.0, None

        def neg(y):
            x = onb.T @ y
            nx = np.linalg.norm(x)
            return 0.0 if nx == 0 else -cone.interior_margin(x / nx)

        for y0 in rng.standard_normal((32, onb.shape[0])):
            res = optimize.minimize(neg, y0, method="Nelder-Mead")
            if -res.fun > m:
                m = float(-res.fun)
                x = onb.T @ res.x
                wit = (x / np.linalg.norm(x)).tolist()
    verdict = "controllable" if m > tol else "not-controllable-by-criterion"
    return Verdict(verdict, m, wit)


# ---------------------------------------------------------------------------
# degree of contact


@dataclass
class ContactEstimate:
    exponent: float
    constant: float
    residual: float
    stderr: float
    radii: tuple[float, float]
    distances: list[float]
    measurable: bool = True

    def interval(self, z: float = 1.96) -> tuple[float, float]:
        return self.exponent - z * self.stderr, self.exponent + z * self.stderr

    def csv_row(self) -> str:
        return f"{self.exponent!r},{self.constant!r},{self.residual!r},{self.radii[0]!r},{self.radii[1]!r}"

    def to_json(self) -> dict:
        return {
            "exponent": self.exponent,
            "constant": self.constant,
            "residual": self.residual,
            "stderr": self.stderr,
            "radii": list(self.radii),
            "measurable": self.measurable,
            "status": "ok" if self.measurable else "exceeds measurable range",
        }


def _orthonormal(rows: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    u, s, vt = np.linalg.svd(rows, full_matrices=False)
    return vt[s > tol * max(1.0, s.max(initial=0.0))]


def contact_subspace(L: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Orthonormal basis of ``L``, or of the complement of ``R x`` inside ``L`` when ``x`` is in ``L``."""
    basis = _orthonormal(L)
    x = np.asarray(x, dtype=float)
    nx = np.linalg.norm(x)
    if nx > 0 and np.linalg.norm(x - basis.T @ (basis @ x)) <= 1e-10 * nx:
        xh = x / nx
        rest = basis - np.outer(basis @ xh, xh)
        basis = _orthonormal(rest)
    return basis


def sphere_directions(basis: np.ndarray, count: int = DEFAULT_DIRECTIONS, seed: int = 0) -> np.ndarray:
    """Unit vectors in span(basis): evenly spaced in dimension <= 2, seeded random otherwise."""
    k = basis.shape[0]
    if k == 0:
        return np.zeros((0, basis.shape[1] if basis.ndim == 2 else 0))
    if k == 1:
        coeffs = np.array([[1.0], [-1.0]])
    elif k == 2:
        th = np.linspace(0, 2 * math.pi, count, endpoint=False)
        coeffs = np.c_[np.cos(th), np.sin(th)]
    else:
        rng = np.random.default_rng(seed)
        g = rng.standard_normal((count, k))
        coeffs = np.vstack([g / np.linalg.norm(g, axis=1)[:, None], np.eye(k), -np.eye(k)])
    return coeffs @ basis


def degree_of_contact(
    cone: Cone,
    L: Sequence[Sequence[float]],
    x: Sequence[float],
    radii: Sequence[float] = DEFAULT_RADII,
    directions: int = DEFAULT_DIRECTIONS,
    seed: int = 0,
    floor: float = 1e-15,
) -> ContactEstimate:
    """Power-law order at which ``dist(C, x + y)`` vanishes for ``y`` in ``L``.

    Uses the worst direction per radius and a least-squares fit in log-log
    coordinates; ``exponent`` is the fitted slope, ``constant`` the prefactor.
    """
    x = np.asarray(x, dtype=float)
    if cone.distance(x) > 1e-10 * max(1.0, np.linalg.norm(x)):
        raise ConeError("base point is not in the cone")
    basis = contact_subspace(np.asarray(L, dtype=float), x)
    dirs = sphere_directions(basis, directions, seed)
    radii = np.asarray(sorted(radii), dtype=float)
    worst = np.array([max((cone.distance(x + r * d) for d in dirs), default=0.0) for r in radii])
    keep = worst > floor
    if keep.sum() < 2:
        return ContactEstimate(math.inf, 0.0, 0.0, 0.0, (radii[0], radii[-1]), worst.tolist(), measurable=False)
    fit = stats.linregress(np.log(radii[keep]), np.log(worst[keep]))
    pred = fit.intercept + fit.slope * np.log(radii[keep])
    rms = float(np.sqrt(np.mean((pred - np.log(worst[keep])) ** 2)))
    return ContactEstimate(
        float(fit.slope), float(math.exp(fit.intercept)), rms, float(fit.stderr), (radii[0], radii[-1]), worst.tolist()
    )


# ---------------------------------------------------------------------------
# margin function of the translated ball


def min_lift(cone: Cone, point: np.ndarray, direction: np.ndarray, hi: float = 1.0, iters: int = 200) -> float:
    """Smallest ``t >= 0`` with ``point + t direction`` in the cone.

    Requires ``direction`` interior so the admissible set is ``[t0, inf)``.
    """
    if cone.contains(point):
        return 0.0
    while not cone.contains(point + hi * direction):
        hi *= 2
        if hi > 1e12:
            raise ConeError("lift direction never enters the cone")
    lo = 0.0
    for _ in range(iters):
        mid = (lo + hi) / 2
        if mid in (lo, hi):
            break
        if cone.contains(point + mid * direction):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass
class PhiTable:
    eps: list[float]
    phi: list[float]
    exponent: float | None
    target_exponent: float | None
    little_o: bool | None
    monotone: bool
    identically_zero: bool

    def to_json(self) -> dict:
        return self.__dict__.copy()

    def csv(self) -> str:
        return "eps,phi\n" + "".join(f"{e!r},{p!r}\n" for e, p in zip(self.eps, self.phi))


def phi_margin(
    cone: Cone,
    x: Sequence[float],
    v: Sequence[float],
    L: Sequence[Sequence[float]],
    eps_grid: Sequence[float],
    target_exponent: float | None = None,
    directions: int = DEFAULT_DIRECTIONS,
    seed: int = 0,
) -> PhiTable:
    """Smallest ``φ(ε)`` with ``x + φ v + ε B_L`` inside the cone, checked on a sphere sample.

    With ``target_exponent`` the fitted decay exponent is compared with it to
    test ``φ(ε) = o(ε^a)``.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    ok, _ = interior_contains(cone, x + v)
    if not ok:
        raise ConeError("x + v must be an interior point")
    basis = _orthonormal(np.asarray(L, dtype=float))
    dirs = sphere_directions(basis, directions, seed)
    eps = sorted(float(e) for e in eps_grid)
    phi = [max((min_lift(cone, x + e * d, v) for d in dirs), default=0.0) for e in eps]
    zero = all(p == 0 for p in phi)
    monotone = all(a <= b * (1 + 1e-9) + 1e-300 for a, b in zip(phi, phi[1:]))
    exponent = little_o = None
    pos = [(e, p) for e, p in zip(eps, phi) if p > 0]
    if len(pos) >= 2:
        fit = stats.linregress(np.log([e for e, _ in pos]), np.log([p for _, p in pos]))
        exponent = float(fit.slope)
        if target_exponent is not None:
            little_o = exponent > target_exponent
    elif zero and target_exponent is not None:
        little_o = True
    return PhiTable(eps, phi, exponent, target_exponent, little_o, monotone, zero)
