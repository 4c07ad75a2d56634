"""Finite-dimensional nilpotent Lie algebras with exact rational structure constants.

An algebra is a fixed basis ``b_0 .. b_{n-1}`` together with a sparse table of
brackets ``[b_i, b_j] = sum_k c_ijk b_k``.  Elements carry either exact
(:class:`~fractions.Fraction`, numpy ``object`` dtype) or float coordinates.
Because the group of a nilpotent algebra is realised on the algebra itself,
the same :class:`Element` is used for group points.

Each basis vector may be tagged with a layer ``k``; the layer-``k`` vectors
span the chosen complement of ``N^{k+1}`` in ``N^k``.  Free nilpotent
algebras use the Lyndon-word Hall basis, ordered by length then
lexicographically.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .exact import (
    RowSpace,
    fraction_str,
    fraction_vector,
    is_exact_scalar,
    solve_combination,
    to_fraction,
    zeros_exact,
)

DEFAULT_MAX_DIM = 200


class AlgebraError(ValueError):
    pass


class AlgebraMismatch(AlgebraError):
    pass


class DimensionOverflow(AlgebraError):
    """Raised when a requested algebra exceeds the configured dimension cap."""


class DegenerateQuotient(AlgebraError):
    pass


class Element:
    """Coordinate vector on an algebra's basis (also a group point)."""

    __slots__ = ("algebra", "coords")

    def __init__(self, algebra: "NilpotentAlgebra", coords: np.ndarray):
        self.algebra = algebra
        self.coords = coords

    @property
    def exact(self) -> bool:
        return self.coords.dtype == object

    def _coerce(self, other: "Element") -> tuple[np.ndarray, np.ndarray]:
        if not isinstance(other, Element):
            raise TypeError("expected Element")
        if other.algebra is not self.algebra:
            raise AlgebraMismatch("elements belong to different algebras")
        a, b = self.coords, other.coords
        if a.dtype != b.dtype:
            a, b = a.astype(float), b.astype(float)
        return a, b

    def __add__(self, other: "Element") -> "Element":
        a, b = self._coerce(other)
        return Element(self.algebra, a + b)

    def __sub__(self, other: "Element") -> "Element":
        a, b = self._coerce(other)
        return Element(self.algebra, a - b)

    def __neg__(self) -> "Element":
        return Element(self.algebra, -self.coords)

    def __mul__(self, scalar) -> "Element":
        if isinstance(scalar, Element):
            raise TypeError("use bracket() or bch_product() for products of elements")
        if self.exact and is_exact_scalar(scalar):
            return Element(self.algebra, self.coords * to_fraction(scalar))
        return Element(self.algebra, self.coords.astype(float) * float(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "Element":
        if self.exact and is_exact_scalar(scalar):
            return Element(self.algebra, self.coords / to_fraction(scalar))
        return Element(self.algebra, self.coords.astype(float) / float(scalar))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Element) or other.algebra is not self.algebra:
            return NotImplemented
        return bool(np.all(self.coords == other.coords))

    def __hash__(self):
        return hash((id(self.algebra), tuple(self.coords.tolist())))

    def __len__(self) -> int:
        return len(self.coords)

    def __getitem__(self, i):
        return self.coords[i]

    def __repr__(self) -> str:
        if self.exact:
            body = ", ".join(fraction_str(c) for c in self.coords)
        else:
            body = ", ".join(f"{c:.6g}" for c in self.coords)
        return f"Element({body})"

    def is_zero(self) -> bool:
        return not any(self.coords)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coords.astype(float)))

    def to_float(self) -> "Element":
        return Element(self.algebra, self.coords.astype(float))

    def to_exact(self, max_den: int | None = None) -> "Element":
        if self.exact:
            return self
        vals = [Fraction(float(c)) for c in self.coords]
        if max_den is not None:
            vals = [v.limit_denominator(max_den) for v in vals]
        return Element(self.algebra, fraction_vector(vals))

    def tolist(self) -> list:
        return list(self.coords)


@dataclass(frozen=True)
class AlgebraReport:
    ok: bool
    violations: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


class NilpotentAlgebra:
    """Nilpotent Lie algebra given by a sparse exact structure-constant table.

    Parameters
    ----------
    dim : int
        Dimension.
    constants : mapping
        ``{(i, j): {k: c}}`` with ``[b_i, b_j] = sum_k c b_k``.  Only one of
        ``(i, j)``/``(j, i)`` needs to be given; the other is filled by
        antisymmetry (a conflicting entry is kept and reported by
        :func:`verify_algebra`).
    layers : sequence of int, optional
        Layer of each basis vector.  ``None`` means no complements are declared
        (BCH still works, dilations do not).
    labels : sequence of str, optional
    trees : sequence, optional
        For each basis vector, either a generator number or a pair
        ``(left, right)`` of basis indices whose bracket it is.
    """

    def __init__(
        self,
        dim: int,
        constants: Mapping[tuple[int, int], Mapping[int, object]],
        layers: Sequence[int] | None = None,
        labels: Sequence[str] | None = None,
        trees: Sequence | None = None,
        name: str = "",
    ):
        if dim < 1:
            raise AlgebraError("dimension must be positive")
        self.dim = dim
        self.name = name
        table: dict[tuple[int, int], dict[int, Fraction]] = {}
        for (i, j), vec in constants.items():
            if not (0 <= i < dim and 0 <= j < dim):
                raise AlgebraError(f"basis index out of range in ({i}, {j})")
            clean = {int(k): to_fraction(c) for k, c in vec.items() if to_fraction(c) != 0}
            if any(not 0 <= k < dim for k in clean):
                raise AlgebraError("target index out of range")
            if clean:
                table[(i, j)] = clean
        for (i, j), vec in list(table.items()):
            if (j, i) not in table:
                table[(j, i)] = {k: -c for k, c in vec.items()}
        self.table = table
        self.layers = tuple(int(k) for k in layers) if layers is not None else None
        if self.layers is not None and len(self.layers) != dim:
            raise AlgebraError("layers must have one entry per basis vector")
        self.labels = tuple(labels) if labels is not None else tuple(f"b{i}" for i in range(dim))
        self.trees = tuple(trees) if trees is not None else None
        self._rows: list[list[tuple[int, int, Fraction]]] = [[] for _ in range(dim)]
        for (i, j), vec in sorted(table.items()):
            for k, c in sorted(vec.items()):
                self._rows[i].append((j, k, c))
        dense = np.zeros((dim, dim, dim))
        for (i, j), vec in table.items():
            for k, c in vec.items():
                dense[i, j, k] = float(c)
        self.dense = dense

    def __repr__(self) -> str:
        return f"NilpotentAlgebra({self.name or 'dim=' + str(self.dim)}, step={self.step})"

    # -- elements ---------------------------------------------------------
    def element(self, coords: Iterable, exact: bool | None = None) -> Element:
        vals = list(coords)
        if len(vals) != self.dim:
            raise AlgebraError(f"expected {self.dim} coordinates, got {len(vals)}")
        if exact is None:
            exact = all(is_exact_scalar(v) or isinstance(v, str) for v in vals)
        if exact:
            return Element(self, fraction_vector(vals))
        return Element(self, np.asarray([float(v) for v in vals], dtype=float))

    def zero(self, exact: bool = True) -> Element:
        if exact:
            return Element(self, zeros_exact(self.dim))
        return Element(self, np.zeros(self.dim))

    def basis_element(self, i: int, exact: bool = True) -> Element:
        x = self.zero(exact)
        x.coords[i] = Fraction(1) if exact else 1.0
        return x

    def basis(self, exact: bool = True) -> list[Element]:
        return [self.basis_element(i, exact) for i in range(self.dim)]

    # -- brackets ---------------------------------------------------------
    def bracket(self, x: Element, y: Element) -> Element:
        if x.algebra is not self or y.algebra is not self:
            raise AlgebraMismatch("bracket of elements from another algebra")
        if x.exact and y.exact:
            out = zeros_exact(self.dim)
            xc, yc = x.coords, y.coords
            for i in range(self.dim):
                xi = xc[i]
                if not xi:
                    continue
                for j, k, c in self._rows[i]:
                    yj = yc[j]
                    if yj:
                        out[k] += xi * yj * c
            return Element(self, out)
        xf = x.coords.astype(float)
        yf = y.coords.astype(float)
        return Element(self, np.einsum("i,j,ijk->k", xf, yf, self.dense))

    def ad_matrix(self, x: Element) -> np.ndarray:
        """Matrix ``M`` with ``M @ y.coords == bracket(x, y).coords``."""
        if x.exact:
            M = np.empty((self.dim, self.dim), dtype=object)
            M[:] = Fraction(0)
            for i in range(self.dim):
                xi = x.coords[i]
                if not xi:
                    continue
                for j, k, c in self._rows[i]:
                    M[k, j] += xi * c
            return M
        return np.einsum("i,ijk->kj", x.coords.astype(float), self.dense)

    def basis_bracket(self, i: int, j: int) -> dict[int, Fraction]:
        return dict(self.table.get((i, j), {}))

    # -- structure --------------------------------------------------------
    @cached_property
    def lower_central_series(self) -> list[RowSpace]:
        """Row spaces of ``N^1 ⊇ N^2 ⊇ ...`` ending with the zero space."""
        series = []
        cur = RowSpace(self.dim)
        for i in range(self.dim):
            cur.add([1 if k == i else 0 for k in range(self.dim)])
        series.append(cur)
        while len(cur):
            nxt = RowSpace(self.dim)
            for row in cur.basis():
                v = Element(self, fraction_vector(row))
                for i in range(self.dim):
                    nxt.add(self.bracket(self.basis_element(i), v).coords)
            if len(nxt) == len(cur):
                raise AlgebraError("algebra is not nilpotent")
            series.append(nxt)
            cur = nxt
        return series

    @cached_property
    def step(self) -> int:
        if self.layers is not None:
            return max(self.layers)
        return len(self.lower_central_series) - 1

    @property
    def graded_declared(self) -> bool:
        return self.layers is not None

    def layer_indices(self, k: int) -> list[int]:
        self._need_layers()
        return [i for i, lk in enumerate(self.layers) if lk == k]

    @property
    def generator_indices(self) -> list[int]:
        return self.layer_indices(1)

    def _need_layers(self) -> None:
        if self.layers is None:
            raise AlgebraError("algebra has no declared layer decomposition")

    def decompose(self, x: Element) -> list[Element]:
        """Layer components ``x_1, ..., x_d`` with ``sum x_k == x``."""
        self._need_layers()
        parts = []
        for k in range(1, self.step + 1):
            c = x.coords.copy()
            for i, lk in enumerate(self.layers):
                if lk != k:
                    c[i] = Fraction(0) if x.exact else 0.0
            parts.append(Element(self, c))
        return parts

    def layer_component(self, x: Element, k: int) -> Element:
        return self.decompose(x)[k - 1] if 1 <= k <= self.step else self.zero(x.exact)

    @cached_property
    def is_graded(self) -> bool:
        """True when the declared layers form a gradation ``[N_k, N_l] ⊆ N_{k+l}``."""
        if self.layers is None:
            return False
        for (i, j), vec in self.table.items():
            target = self.layers[i] + self.layers[j]
            if any(self.layers[k] != target for k in vec):
                return False
        return True

    def is_central(self, x: Element) -> bool:
        return all(self.bracket(self.basis_element(i, x.exact), x).is_zero() for i in range(self.dim))

    @cached_property
    def center_indices(self) -> list[int]:
        return [i for i in range(self.dim) if not any((i, j) in self.table for j in range(self.dim))]

    def filtration_index(self, x: Element) -> int:
        """Largest k with x in N^k (``step + 1`` for zero)."""
        series = self.lower_central_series
        v = x.to_exact() if not x.exact else x
        k = 0
        for space in series:
            if space.contains(v.coords):
                k += 1
            else:
                break
        return k

    def derived_basis(self) -> list[Element]:
        """Basis of ``[N, N]``."""
        rows = self.lower_central_series[1].basis()
        return [Element(self, fraction_vector(r)) for r in rows]


# ---------------------------------------------------------------------------
# free nilpotent algebras


def lyndon_words(l: int, n: int) -> list[tuple[int, ...]]:
    """Lyndon words of length <= n over {0..l-1} (Duval), length-then-lex order."""
    words: list[tuple[int, ...]] = []
    w = [-1]
    while w:
        w[-1] += 1
        words.append(tuple(w))
        m = len(w)
        while len(w) < n:
            w.append(w[len(w) - m])
        while w and w[-1] == l - 1:
            w.pop()
    return sorted(words, key=lambda t: (len(t), t))


def _mobius(n: int) -> int:
    sign, p = 1, 2
    while p * p <= n:
        if n % p == 0:
            n //= p
            if n % p == 0:
                return 0
            sign = -sign
        p += 1
    return -sign if n > 1 else sign


def witt_dimension(l: int, k: int) -> int:
    """Dimension of the degree-k part of the free Lie algebra on l letters."""
    return sum(_mobius(m) * l ** (k // m) for m in range(1, k + 1) if k % m == 0) // k


def _standard_factorization(w: tuple[int, ...], lyndon: set) -> tuple[tuple[int, ...], tuple[int, ...]]:
    for i in range(1, len(w)):
        if w[i:] in lyndon:
            return w[:i], w[i:]
    raise AssertionError("word of length >= 2 must factor")


def _tensor_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for u, cu in a.items():
        for v, cv in b.items():
            key = u + v
            out[key] = out.get(key, 0) + cu * cv
    return {k: c for k, c in out.items() if c}


def build_free_nilpotent(l: int, d: int, max_dim: int = DEFAULT_MAX_DIM) -> NilpotentAlgebra:
    """Free nilpotent Lie algebra on ``l`` generators of step ``d``.

    Basis: standard bracketings of Lyndon words, length then lexicographic.
    Structure constants are found by expanding brackets in the tensor algebra
    and peeling off the lexicographically smallest word, which is always the
    leading word of a unique basis element.
    """
    if l < 1 or d < 1:
        raise AlgebraError("need l >= 1 and d >= 1")
    expected = sum(witt_dimension(l, k) for k in range(1, d + 1))
    if expected > max_dim:
        raise DimensionOverflow(f"free({l},{d}) has dimension {expected} > cap {max_dim}")
    words = lyndon_words(l, d)
    index = {w: i for i, w in enumerate(words)}
    lyndon = set(words)
    trees: list = []
    expansion: list[dict] = []
    labels: list[str] = []
    for w in words:
        if len(w) == 1:
            trees.append(w[0])
            expansion.append({w: 1})
            labels.append(f"x{w[0] + 1}")
        else:
            u, v = _standard_factorization(w, lyndon)
            iu, iv = index[u], index[v]
            trees.append((iu, iv))
            eu, ev = expansion[iu], expansion[iv]
            e = _tensor_mul(eu, ev)
            for key, c in _tensor_mul(ev, eu).items():
                e[key] = e.get(key, 0) - c
            expansion.append({k: c for k, c in e.items() if c})
            labels.append(f"[{labels[iu]},{labels[iv]}]")
    constants: dict[tuple[int, int], dict[int, Fraction]] = {}
    for i, j in itertools.combinations(range(len(words)), 2):
        if len(words[i]) + len(words[j]) > d:
            continue
        poly = _tensor_mul(expansion[i], expansion[j])
        for key, c in _tensor_mul(expansion[j], expansion[i]).items():
            poly[key] = poly.get(key, 0) - c
        poly = {k: c for k, c in poly.items() if c}
        coeffs: dict[int, Fraction] = {}
        while poly:
            lead = min(poly)
            k = index[lead]
            c = Fraction(poly[lead])
            coeffs[k] = c
            for key, ck in expansion[k].items():
                poly[key] = poly.get(key, 0) - c * ck
            poly = {kk: cc for kk, cc in poly.items() if cc}
        if coeffs:
            constants[(i, j)] = coeffs
    return NilpotentAlgebra(
        len(words),
        constants,
        layers=[len(w) for w in words],
        labels=labels,
        trees=trees,
        name=f"free({l},{d})",
    )


def heisenberg() -> NilpotentAlgebra:
    return build_free_nilpotent(2, 2)


def explicit_algebra(
    dim: int,
    constants: Mapping[tuple[int, int], Mapping[int, object]],
    layers: Sequence[int] | None = None,
    labels: Sequence[str] | None = None,
    name: str = "",
) -> NilpotentAlgebra:
    return NilpotentAlgebra(dim, constants, layers=layers, labels=labels, name=name)


def perturbed_filiform() -> NilpotentAlgebra:
    """4-dim filiform algebra with a non-graded choice of complements.

    ``[b0, b1] = b2 + b3``, ``[b0, b2] = b3``; layers (1, 1, 2, 3).
    """
    return NilpotentAlgebra(
        4,
        {(0, 1): {2: 1, 3: 1}, (0, 2): {3: 1}},
        layers=[1, 1, 2, 3],
        labels=["b0", "b1", "b2", "b3"],
        name="filiform-perturbed",
    )


# ---------------------------------------------------------------------------
# quotients and lifts


class Projection:
    """Linear map between algebras given by an exact matrix (rows: target coords)."""

    def __init__(self, source: NilpotentAlgebra, target: NilpotentAlgebra, matrix: np.ndarray):
        self.source = source
        self.target = target
        self.matrix = matrix

    def __call__(self, x: Element) -> Element:
        if x.algebra is not self.source:
            raise AlgebraMismatch("projection applied to element of another algebra")
        if x.exact:
            return Element(self.target, self.matrix.dot(x.coords))
        return Element(self.target, self.matrix.astype(float).dot(x.coords.astype(float)))

    def preimage(self, y: Element, within: Sequence[int] | None = None) -> Element | None:
        """Exact preimage supported on ``within`` (source basis indices), or None."""
        idx = list(range(self.source.dim)) if within is None else list(within)
        cols = [[self.matrix[r, i] for r in range(self.target.dim)] for i in idx]
        sol = solve_combination(cols, list(y.to_exact().coords))
        if sol is None:
            return None
        x = self.source.zero()
        for i, c in zip(idx, sol):
            x.coords[i] = c
        return x

    def is_homomorphism(self, pairs: Iterable[tuple[Element, Element]]) -> bool:
        for x, y in pairs:
            if self(self.source.bracket(x, y)) != self.target.bracket(self(x), self(y)):
                return False
        return True


def ideal_closure(algebra: NilpotentAlgebra, relations: Sequence[Element]) -> RowSpace:
    space = RowSpace(algebra.dim)
    queue = []
    for r in relations:
        if space.add(r.to_exact().coords):
            queue.append(r.to_exact())
    while queue:
        v = queue.pop()
        for i in range(algebra.dim):
            w = algebra.bracket(algebra.basis_element(i), v)
            if space.add(w.coords):
                queue.append(w)
    return space


def quotient(algebra: NilpotentAlgebra, relations: Sequence[Element]) -> tuple[NilpotentAlgebra, Projection]:
    """Quotient by the ideal generated by ``relations``.

    The quotient basis consists of the images of the basis vectors that are not
    pivots of the (reduced) ideal basis, pivots being chosen at the earliest
    index.  With a length-ordered basis this keeps the induced layers adapted
    to the lower central series.
    """
    ideal = ideal_closure(algebra, relations)
    if len(ideal) == algebra.dim:
        raise DegenerateQuotient("relations generate the whole algebra")
    pivots = set(ideal.pivots)
    keep = [i for i in range(algebra.dim) if i not in pivots]
    pos = {i: a for a, i in enumerate(keep)}
    P = np.empty((len(keep), algebra.dim), dtype=object)
    P[:] = Fraction(0)
    for i in keep:
        P[pos[i], i] = Fraction(1)
    for p, row in ideal.rows.items():
        # b_p + sum_{j in keep} row[j] b_j lies in the ideal
        for j in keep:
            if row[j]:
                P[pos[j], p] = -row[j]
    qdim = len(keep)
    constants: dict[tuple[int, int], dict[int, Fraction]] = {}
    for a, b in itertools.combinations(range(qdim), 2):
        br = algebra.bracket(algebra.basis_element(keep[a]), algebra.basis_element(keep[b]))
        img = P.dot(br.coords)
        vec = {k: img[k] for k in range(qdim) if img[k]}
        if vec:
            constants[(a, b)] = vec
    layers = [algebra.layers[i] for i in keep] if algebra.layers is not None else None
    q = NilpotentAlgebra(
        qdim,
        constants,
        layers=layers,
        labels=[algebra.labels[i] for i in keep],
        name=f"{algebra.name or 'N'}/I",
    )
    return q, Projection(algebra, q, P)


def truncate(algebra: NilpotentAlgebra, k: int) -> tuple[NilpotentAlgebra, Projection]:
    """``N / N^{k+1}`` (kills everything of filtration degree > k)."""
    series = algebra.lower_central_series
    if k + 1 >= len(series):
        return quotient(algebra, [])
    rels = [Element(algebra, fraction_vector(r)) for r in series[k].basis()]
    q, pi = quotient(algebra, rels)
    q.name = f"{algebra.name or 'N'}/N^{k + 1}"
    return q, pi


def free_lift(algebra: NilpotentAlgebra, max_dim: int = DEFAULT_MAX_DIM) -> tuple[NilpotentAlgebra, Projection]:
    """Graded free cover ``F/F^d -> N`` sending generators to the layer-1 basis."""
    gens = algebra.generator_indices
    free = build_free_nilpotent(len(gens), algebra.step, max_dim=max_dim)
    images: list[Element] = []
    for t in free.trees:
        if isinstance(t, int):
            images.append(algebra.basis_element(gens[t]))
        else:
            images.append(algebra.bracket(images[t[0]], images[t[1]]))
    P = np.empty((algebra.dim, free.dim), dtype=object)
    for j, img in enumerate(images):
        P[:, j] = img.coords
    return free, Projection(free, algebra, P)


# ---------------------------------------------------------------------------
# verification


def verify_algebra(a: NilpotentAlgebra) -> AlgebraReport:
    """Exact check of antisymmetry, Jacobi, filtration and nilpotency."""
    bad: list[str] = []
    n = a.dim
    for i in range(n):
        if a.basis_bracket(i, i):
            bad.append(f"antisymmetry: [b{i},b{i}] != 0")
        for j in range(i + 1, n):
            u, v = a.basis_bracket(i, j), a.basis_bracket(j, i)
            keys = set(u) | set(v)
            if any(u.get(k, 0) != -v.get(k, 0) for k in keys):
                bad.append(f"antisymmetry: [b{i},b{j}] != -[b{j},b{i}]")
    basis = a.basis()
    for i, j, k in itertools.combinations(range(n), 3):
        x, y, z = basis[i], basis[j], basis[k]
        jac = a.bracket(x, a.bracket(y, z)) + a.bracket(y, a.bracket(z, x)) + a.bracket(z, a.bracket(x, y))
        if not jac.is_zero():
            bad.append(f"jacobi: triple ({i},{j},{k})")
    try:
        series = a.lower_central_series
    except AlgebraError as exc:
        return AlgebraReport(False, bad + [str(exc)])
    if a.layers is not None:
        d = max(a.layers)
        if len(series) - 1 > d:
            bad.append(f"nilpotency: N^{d + 1} != 0")
        for k in range(1, d + 2):
            adapted = RowSpace(n)
            for i, lk in enumerate(a.layers):
                if lk >= k:
                    adapted.add([1 if m == i else 0 for m in range(n)])
            target = series[k - 1] if k - 1 < len(series) else RowSpace(n)
            if len(adapted) != len(target) or not all(target.contains(r) for r in adapted.basis()):
                bad.append(f"filtration: layers >= {k} do not span N^{k}")
    for k in range(1, len(series)):
        for l in range(1, len(series)):
            tgt = series[k + l - 1] if k + l - 1 < len(series) else RowSpace(n)
            for r1 in series[k - 1].basis():
                for r2 in series[l - 1].basis():
                    br = a.bracket(Element(a, fraction_vector(r1)), Element(a, fraction_vector(r2)))
                    if not tgt.contains(br.coords):
                        bad.append(f"filtration: [N^{k},N^{l}] not in N^{k + l}")
                        break
    return AlgebraReport(not bad, bad)


# ---------------------------------------------------------------------------
# JSON documents


def algebra_to_spec(a: NilpotentAlgebra) -> dict:
    consts = {}
    for (i, j), vec in sorted(a.table.items()):
        if i < j:
            consts[f"{i},{j}"] = [[fraction_str(c), k] for k, c in sorted(vec.items())]
    return {
        "mode": "explicit",
        "dim": a.dim,
        "d": a.step,
        "layers": list(a.layers) if a.layers is not None else None,
        "labels": list(a.labels),
        "constants": consts,
    }


def algebra_from_spec(spec: Mapping) -> NilpotentAlgebra:
    """Build an algebra from ``{mode, l, d, relations, constants, ...}``."""
    mode = spec.get("mode", "free")
    cap = int(spec.get("max_dim", DEFAULT_MAX_DIM))
    if mode == "free":
        return build_free_nilpotent(int(spec["l"]), int(spec["d"]), max_dim=cap)
    if mode == "quotient":
        free = build_free_nilpotent(int(spec["l"]), int(spec["d"]), max_dim=cap)
        rels = []
        for rel in spec.get("relations", []):
            x = free.zero()
            for coeff, idx in rel:
                x.coords[int(idx)] += to_fraction(coeff)
            rels.append(x)
        return quotient(free, rels)[0]
    if mode == "explicit":
        dim = int(spec["dim"])
        consts: dict[tuple[int, int], dict[int, Fraction]] = {}
        for key, entries in spec.get("constants", {}).items():
            i, j = (int(s) for s in key.split(","))
            vec: dict[int, Fraction] = {}
            for coeff, k in entries:
                vec[int(k)] = vec.get(int(k), Fraction(0)) + to_fraction(coeff)
            consts[(i, j)] = vec
        return NilpotentAlgebra(dim, consts, layers=spec.get("layers"), labels=spec.get("labels"), name=spec.get("name", ""))
    raise AlgebraError(f"unknown mode {mode!r}")


def load_algebra(path) -> NilpotentAlgebra:
    with open(path, encoding="utf-8") as fh:
        return algebra_from_spec(json.load(fh))
