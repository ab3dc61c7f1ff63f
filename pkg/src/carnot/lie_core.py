"""Stratified nilpotent Lie algebras over a Hall (Lyndon) basis.

Structure constants are exact rationals.  Algebras are immutable once built;
every operation returns new objects.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from pathlib import Path

from .linalg import Span, nullspace, rref

DEFAULT_SIZE_CAP = 5000


class AlgebraMismatch(ValueError):
    """Operands live on different algebras."""


class SizingError(ValueError):
    """Requested algebra would exceed the configured basis size cap."""


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


# -- Lyndon words ------------------------------------------------------------

def lyndon_words(m: int, n: int):
    """All Lyndon words over ``range(m)`` of length <= n (Duval's algorithm)."""
    if m < 1 or n < 1:
        return
    w = [-1]
    while w:
        w[-1] += 1
        yield tuple(w)
        k = len(w)
        while len(w) < n:
            w.append(w[len(w) - k])
        while w and w[-1] == m - 1:
            w.pop()


def is_lyndon(w) -> bool:
    w = tuple(w)
    return len(w) > 0 and all(w < w[i:] for i in range(1, len(w)))


def standard_factorization(w):
    """Split a Lyndon word as ``u v`` with ``v`` its longest proper Lyndon suffix."""
    for i in range(1, len(w)):
        if is_lyndon(w[i:]):
            return w[:i], w[i:]
    raise ValueError(f"{w!r} has no standard factorization")


def word_tree(w):
    """Binary bracket tree of the standard bracketing of a Lyndon word."""
    if len(w) == 1:
        return w[0]
    u, v = standard_factorization(w)
    return (word_tree(u), word_tree(v))


def tree_leaves(tree):
    if isinstance(tree, int):
        return (tree,)
    return tree_leaves(tree[0]) + tree_leaves(tree[1])


def tree_str(tree, names=None):
    if isinstance(tree, int):
        return names[tree] if names else f"X{tree + 1}"
    return f"[{tree_str(tree[0], names)},{tree_str(tree[1], names)}]"


# Words in the free associative algebra: dict word -> Fraction.

def _tmul(p, q, maxdeg):
    out = {}
    for u, a in p.items():
        for v, b in q.items():
            if len(u) + len(v) > maxdeg:
                continue
            w = u + v
            out[w] = out.get(w, 0) + a * b
    return {w: c for w, c in out.items() if c != 0}


def _tadd(p, q, scale=1):
    out = dict(p)
    for w, c in q.items():
        out[w] = out.get(w, 0) + scale * c
    return {w: c for w, c in out.items() if c != 0}


class _LyndonExpander:
    """Expands standard bracketings into noncommutative polynomials and back."""

    def __init__(self):
        self._cache = {}

    def expand(self, w):
        w = tuple(w)
        if w not in self._cache:
            if len(w) == 1:
                self._cache[w] = {w: Fraction(1)}
            else:
                u, v = standard_factorization(w)
                pu, pv = self.expand(u), self.expand(v)
                n = len(w)
                self._cache[w] = _tadd(_tmul(pu, pv, n), _tmul(pv, pu, n), -1)
        return self._cache[w]

    def reduce(self, poly):
        """Coordinates of a Lie polynomial in the Lyndon basis.

        Relies on triangularity: the standard bracketing of ``w`` equals ``w``
        plus lexicographically larger words.
        """
        poly = dict(poly)
        out = {}
        while poly:
            w = min(poly)
            c = poly[w]
            if not is_lyndon(w):
                raise ValueError(f"not a Lie polynomial (leading word {w})")
            out[w] = c
            poly = _tadd(poly, self.expand(w), -c)
        return out


_EXPANDER = _LyndonExpander()


def witt_dimension(m: int, k: int) -> int:
    """Necklace count: dimension of degree-k part of the free Lie algebra on m letters."""
    total = 0
    for d in range(1, k + 1):
        if k % d == 0:
            total += _mobius(d) * m ** (k // d)
    return total // k


def _mobius(n):
    res, p = 1, 2
    while p * p <= n:
        if n % p == 0:
            n //= p
            if n % p == 0:
                return 0
            res = -res
        p += 1
    if n > 1:
        res = -res
    return res


# -- algebra -------------------------------------------------------------------

@dataclass(frozen=True)
class HallElement:
    word: object  # int for a generator, (left, right) for a bracket
    layer: int
    index: int

    @property
    def leaves(self):
        return tree_leaves(self.word)


class StratifiedAlgebra:
    """A stratified nilpotent Lie algebra with exact structure constants.

    ``table`` maps ``(i, j)`` with ``i < j`` to ``{k: c}`` meaning
    ``[b_i, b_j] = sum_k c b_k``.
    """

    def __init__(self, m, basis, table, name="", gram=None, depth=None,
                 parent=None, projection=None, names=None):
        self.m = m
        self.basis = tuple(basis)
        self.dim = len(self.basis)
        self.name = name
        self.names = tuple(names) if names else None
        self.parent = parent
        self._projection = projection
        layers = [b.layer for b in self.basis]
        if layers != sorted(layers):
            raise ValueError("basis must be grouped by layer")
        top = max(layers) if layers else 1
        self.depth = max(depth or 0, top)
        self.layer_dims = tuple(layers.count(k) for k in range(1, self.depth + 1))
        self.step = max((k + 1 for k, d in enumerate(self.layer_dims) if d), default=1)
        if self.layer_dims[0] != m:
            raise ValueError("layer 1 must consist of the m generators")
        self.layer_of = tuple(layers)
        starts = [0]
        for d in self.layer_dims:
            starts.append(starts[-1] + d)
        self.layer_ranges = tuple(range(starts[k], starts[k + 1]) for k in range(self.depth))
        clean = {}
        for (i, j), col in table.items():
            col = {k: as_fraction(c) for k, c in col.items() if c != 0}
            if not col:
                continue
            if i == j:
                raise ValueError("diagonal bracket must vanish")
            if i > j:
                i, j = j, i
                col = {k: -c for k, c in col.items()}
            for k in col:
                if self.layer_of[k] != self.layer_of[i] + self.layer_of[j]:
                    raise ValueError(f"[b{i},b{j}] leaves layer {self.layer_of[i] + self.layer_of[j]}")
            clean[(i, j)] = col
        self.table = clean
        self._pairs = tuple((i, j, tuple(col.items())) for (i, j), col in sorted(clean.items()))
        if gram is None:
            gram = [[Fraction(int(a == b)) for b in range(m)] for a in range(m)]
        self.gram = tuple(tuple(as_fraction(x) for x in row) for row in gram)
        self._dense = None

    # -- identity ------------------------------------------------------------
    @property
    def digest(self) -> str:
        payload = json.dumps({
            "m": self.m, "dims": self.layer_dims,
            "table": [[i, j, [[k, str(c)] for k, c in col]] for i, j, col in self._pairs],
            "gram": [[str(x) for x in r] for r in self.gram],
        }, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def same_as(self, other) -> bool:
        return self is other or (isinstance(other, StratifiedAlgebra) and self.digest == other.digest)

    def __repr__(self):
        return f"StratifiedAlgebra({self.name or '?'}, dims={self.layer_dims})"

    def label(self, i) -> str:
        names = self.names or tuple(f"X{g + 1}" for g in range(self.m))
        return tree_str(self.basis[i].word, names)

    # -- raw coefficient arithmetic -------------------------------------------
    def bracket_coeffs(self, a, b):
        out = [0] * self.dim
        for i, j, col in self._pairs:
            ai, aj, bi, bj = a[i], a[j], b[i], b[j]
            if (ai == 0 or bj == 0) and (aj == 0 or bi == 0):
                continue
            c = ai * bj - aj * bi
            if c == 0:
                continue
            for k, s in col:
                out[k] += c * s
        return out

    def dense_constants(self):
        """Float array C with [b_i, b_j] = sum_k C[i, j, k] b_k."""
        if self._dense is None:
            import numpy as np
            C = np.zeros((self.dim, self.dim, self.dim))
            for i, j, col in self._pairs:
                for k, c in col:
                    C[i, j, k] = float(c)
                    C[j, i, k] = -float(c)
            C.setflags(write=False)
            self._dense = C
        return self._dense

    def inner(self, u, v):
        """Inner product of two horizontal coefficient sequences (length m)."""
        g = self.gram
        return sum(u[a] * g[a][b] * v[b] for a in range(self.m) for b in range(self.m)
                   if u[a] != 0 and v[b] != 0)

    # -- constructors for vectors -------------------------------------------
    def vector(self, coeffs) -> "LieVector":
        coeffs = tuple(coeffs)
        if len(coeffs) != self.dim:
            raise ValueError(f"expected {self.dim} coefficients, got {len(coeffs)}")
        return LieVector(self, coeffs)

    def zero(self) -> "LieVector":
        return LieVector(self, (Fraction(0),) * self.dim)

    def basis_vector(self, i) -> "LieVector":
        c = [Fraction(0)] * self.dim
        c[i] = Fraction(1)
        return LieVector(self, tuple(c))

    def generator(self, i) -> "LieVector":
        if not 0 <= i < self.m:
            raise IndexError(i)
        return self.basis_vector(i)

    def horizontal(self, coeffs) -> "LieVector":
        coeffs = [as_fraction(c) if not isinstance(c, float) else c for c in coeffs]
        if len(coeffs) != self.m:
            raise ValueError(f"horizontal vector needs {self.m} coefficients")
        return LieVector(self, tuple(coeffs) + (Fraction(0),) * (self.dim - self.m))

    def dual(self, i) -> "Covector":
        c = [Fraction(0)] * self.dim
        c[i] = Fraction(1)
        return Covector(self, tuple(c))

    def covector(self, coeffs) -> "Covector":
        return Covector(self, tuple(as_fraction(c) for c in coeffs))

    def random_vector(self, rng, horizontal=False, bound=5, den=4) -> "LieVector":
        n = self.m if horizontal else self.dim
        c = [Fraction(rng.randint(-bound * den, bound * den), rng.randint(1, den)) for _ in range(n)]
        return self.horizontal(c) if horizontal else self.vector(c)

    def project(self, v: "LieVector") -> "LieVector":
        """Image of a parent-algebra vector in this quotient."""
        if self._projection is None:
            raise ValueError("not a quotient algebra")
        if not self.parent.same_as(v.algebra):
            raise AlgebraMismatch("vector does not live on the parent algebra")
        return self.vector(self._projection(v.coeffs))

    def ad_matrix(self, x):
        """Columns: ad_x applied to each basis vector (as a list of columns)."""
        cols = []
        for i in range(self.dim):
            e = [0] * self.dim
            e[i] = 1
            cols.append(self.bracket_coeffs(x, e))
        return cols


@dataclass(frozen=True, eq=False)
class LieVector:
    algebra: StratifiedAlgebra
    coeffs: tuple

    def _check(self, other):
        if not self.algebra.same_as(other.algebra):
            raise AlgebraMismatch("vectors live on different algebras")

    def __add__(self, other):
        self._check(other)
        return LieVector(self.algebra, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other):
        self._check(other)
        return LieVector(self.algebra, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self):
        return LieVector(self.algebra, tuple(-a for a in self.coeffs))

    def __rmul__(self, s):
        return LieVector(self.algebra, tuple(s * a for a in self.coeffs))

    __mul__ = __rmul__

    def __eq__(self, other):
        return (isinstance(other, LieVector) and self.algebra.same_as(other.algebra)
                and all(a == b for a, b in zip(self.coeffs, other.coeffs)))

    def __hash__(self):
        return hash(self.coeffs)

    @property
    def is_exact(self):
        return all(isinstance(c, (int, Fraction)) for c in self.coeffs)

    def is_horizontal(self):
        return all(c == 0 for c in self.coeffs[self.algebra.m:])

    def is_zero(self):
        return all(c == 0 for c in self.coeffs)

    @property
    def horizontal_part(self):
        return self.coeffs[:self.algebra.m]

    def layer(self, k):
        return tuple(self.coeffs[i] for i in self.algebra.layer_ranges[k - 1])

    def support_layers(self):
        return sorted({self.algebra.layer_of[i] for i, c in enumerate(self.coeffs) if c != 0})

    def __repr__(self):
        terms = [f"{c}*{self.algebra.label(i)}" for i, c in enumerate(self.coeffs) if c != 0]
        return "LieVector(" + (" + ".join(terms) or "0") + ")"


@dataclass(frozen=True, eq=False)
class Covector:
    algebra: StratifiedAlgebra
    coeffs: tuple

    def __call__(self, v: LieVector):
        if not self.algebra.same_as(v.algebra):
            raise AlgebraMismatch("covector and vector live on different algebras")
        return sum((a * b for a, b in zip(self.coeffs, v.coeffs) if a != 0), Fraction(0))

    def pair(self, coeffs):
        return sum((a * b for a, b in zip(self.coeffs, coeffs) if a != 0), Fraction(0))

    def __neg__(self):
        return Covector(self.algebra, tuple(-a for a in self.coeffs))

    def __add__(self, other):
        return Covector(self.algebra, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __rmul__(self, s):
        return Covector(self.algebra, tuple(s * a for a in self.coeffs))

    def __eq__(self, other):
        return isinstance(other, Covector) and tuple(self.coeffs) == tuple(other.coeffs)

    def __hash__(self):
        return hash(self.coeffs)

    def is_zero(self):
        return all(c == 0 for c in self.coeffs)

    def __repr__(self):
        terms = [f"{c}*{self.algebra.label(i)}*" for i, c in enumerate(self.coeffs) if c != 0]
        return "Covector(" + (" + ".join(terms) or "0") + ")"


def bracket(a: LieVector, b: LieVector) -> LieVector:
    if not a.algebra.same_as(b.algebra):
        raise AlgebraMismatch("cannot bracket vectors from different algebras")
    return LieVector(a.algebra, tuple(a.algebra.bracket_coeffs(a.coeffs, b.coeffs)))


def jacobi_defect(alg: StratifiedAlgebra, a, b, c):
    br = alg.bracket_coeffs
    x = br(a, br(b, c))
    y = br(b, br(c, a))
    z = br(c, br(a, b))
    return [p + q + r for p, q, r in zip(x, y, z)]


# -- builders -----------------------------------------------------------------

def from_brackets(m, layers, brackets, trees=None, name="", names=None, depth=None):
    """Build an algebra from defining brackets ``{(i, j): {k: c}}``.

    ``layers`` lists the layer of each basis element; ``trees`` optionally
    gives a bracket tree over generator indices for each element.
    """
    trees = trees or [i if layers[i] == 1 else None for i in range(len(layers))]
    basis = [HallElement(trees[i], layers[i], i) for i in range(len(layers))]
    return StratifiedAlgebra(m, basis, brackets, name=name, names=names, depth=depth)


def _cache_path(m, s):
    root = os.environ.get("CARNOT_CACHE_DIR")
    if not root:
        return None
    return Path(root) / f"free_{m}_{s}.json"


def build_free_nilpotent(m: int, s: int, cap: int = DEFAULT_SIZE_CAP) -> StratifiedAlgebra:
    """Free nilpotent stratified Lie algebra on ``m`` generators of step ``s``."""
    if m < 1 or s < 1:
        raise ValueError("need m >= 1 and s >= 1")
    size = sum(witt_dimension(m, k) for k in range(1, s + 1))
    if size > cap:
        raise SizingError(f"free:{m}:{s} has {size} basis elements, above the cap of {cap}")
    words = sorted(lyndon_words(m, s), key=lambda w: (len(w), w))
    index = {w: i for i, w in enumerate(words)}
    basis = [HallElement(word_tree(w), len(w), i) for i, w in enumerate(words)]

    path = _cache_path(m, s)
    table = None
    if path is not None and path.exists():
        raw = json.loads(path.read_text())
        table = {(i, j): {k: Fraction(c) for k, c in col} for i, j, col in raw}
    if table is None:
        table = {}
        for i, u in enumerate(words):
            for j in range(i + 1, len(words)):
                v = words[j]
                if len(u) + len(v) > s:
                    continue
                pu, pv = _EXPANDER.expand(u), _EXPANDER.expand(v)
                n = len(u) + len(v)
                poly = _tadd(_tmul(pu, pv, n), _tmul(pv, pu, n), -1)
                coords = _EXPANDER.reduce(poly)
                if coords:
                    table[(i, j)] = {index[w]: c for w, c in coords.items()}
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps([[i, j, [[k, str(c)] for k, c in col.items()]]
                                        for (i, j), col in sorted(table.items())]))
    alg = StratifiedAlgebra(m, basis, table, name=f"free:{m}:{s}", depth=s)
    alg.words = tuple(words)
    return alg


def free_element(alg: StratifiedAlgebra, word) -> LieVector:
    """Basis vector of a free algebra named by its Lyndon word (0-based letters)."""
    idx = {w: i for i, w in enumerate(alg.words)}
    return alg.basis_vector(idx[tuple(word)])


def quotient(alg: StratifiedAlgebra, relations, name=None) -> StratifiedAlgebra:
    """Quotient by the ideal generated by homogeneous ``relations``.

    The quotient keeps those parent basis elements that are not pivots of the
    echelonized ideal, so its basis is a subset of the parent's.
    """
    layers = [[] for _ in range(alg.depth)]
    for r in relations:
        if not alg.same_as(r.algebra):
            raise AlgebraMismatch("relation lives on another algebra")
        sup = r.support_layers()
        if len(sup) > 1:
            raise ValueError(f"relation {r!r} is not homogeneous (layers {sup})")
        if sup:
            layers[sup[0] - 1].append(list(r.coeffs))
    spans = [Span(alg.dim) for _ in range(alg.depth)]
    gens = [[Fraction(int(i == g)) for i in range(alg.dim)] for g in range(alg.m)]
    for k in range(alg.depth):
        frontier = [v for v in layers[k] if spans[k].add(v)]
        if k > 0:
            # ad of generators applied to the previous layer of the ideal
            for v in spans[k - 1].basis():
                for g in gens:
                    w = alg.bracket_coeffs(g, v)
                    spans[k].add(w)
        del frontier
    ideal_rows, pivots = [], []
    for sp in spans:
        ideal_rows.extend(sp.rows)
        pivots.extend(sp.pivots)
    pivset = set(pivots)
    keep = [i for i in range(alg.dim) if i not in pivset]
    if any(i in pivset for i in range(alg.m)):
        raise ValueError("relations kill a generator")
    pos = {old: new for new, old in enumerate(keep)}

    def project(coeffs):
        v = list(coeffs)
        for row, p in zip(ideal_rows, pivots):
            if v[p] != 0:
                f = v[p]
                v = [a - f * b for a, b in zip(v, row)]
        return tuple(v[i] for i in keep)

    table = {}
    for a in range(len(keep)):
        for b in range(a + 1, len(keep)):
            i, j = keep[a], keep[b]
            col = alg.table.get((i, j))
            if not col:
                continue
            full = [0] * alg.dim
            for k, c in col.items():
                full[k] = c
            img = project(full)
            new = {k: c for k, c in enumerate(img) if c != 0}
            if new:
                table[(a, b)] = new
    basis = [HallElement(alg.basis[i].word, alg.basis[i].layer, n) for n, i in enumerate(keep)]
    q = StratifiedAlgebra(alg.m, basis, table, name=name or f"{alg.name}/J", gram=alg.gram,
                          depth=alg.depth, parent=alg, projection=project, names=alg.names)
    q.kept = tuple(keep)
    return q


def ad_power_span(X: LieVector):
    """Echelon basis (rows) of span{ad_X^k V : k >= 0, V horizontal}."""
    if not X.is_horizontal():
        raise ValueError("ad_power_span needs a horizontal vector")
    alg = X.algebra
    sp = Span(alg.dim)
    frontier = []
    for g in range(alg.m):
        e = [Fraction(int(i == g)) for i in range(alg.dim)]
        sp.add(e)
        frontier.append(e)
    for _ in range(alg.depth):
        nxt = []
        for v in frontier:
            w = alg.bracket_coeffs(X.coeffs, v)
            if sp.add(w):
                nxt.append(w)
        if not nxt:
            break
        frontier = nxt
    return sp.basis()


def annihilator(rows, n):
    """Basis of covectors vanishing on the row space."""
    return nullspace(rows, n)


def subalgebra_span(alg: StratifiedAlgebra, gens):
    """Echelon basis of the Lie subalgebra generated by the given coefficient rows."""
    sp = Span(alg.dim)
    frontier = [list(g) for g in gens if sp.add(list(g))]
    base = list(frontier)
    while frontier:
        nxt = []
        for v in frontier:
            for g in base:
                w = alg.bracket_coeffs(g, v)
                if sp.add(w):
                    nxt.append(w)
        frontier = nxt
    return sp.basis()


def permute_generators(alg: StratifiedAlgebra, perm) -> StratifiedAlgebra:
    """Same algebra with the first layer reordered: new generator i is old ``perm[i]``.

    Higher layers keep their order.  Returns the new algebra and the index map
    old -> new.
    """
    perm = list(perm)
    order = perm + list(range(alg.m, alg.dim))
    new_of = {old: new for new, old in enumerate(order)}
    table = {}
    for (i, j), col in alg.table.items():
        table[(new_of[i], new_of[j])] = {new_of[k]: c for k, c in col.items()}
    relabel = lambda t: new_of[t] if isinstance(t, int) else (relabel(t[0]), relabel(t[1]))
    basis = [HallElement(relabel(alg.basis[old].word) if alg.basis[old].word is not None else None,
                         alg.basis[old].layer, n) for n, old in enumerate(order)]
    gram = [[alg.gram[perm[a]][perm[b]] for b in range(alg.m)] for a in range(alg.m)]
    names = [alg.names[p] for p in perm] if alg.names else None
    return StratifiedAlgebra(alg.m, basis, table, name=f"{alg.name}~perm", gram=gram,
                             depth=alg.depth, names=names), new_of


def with_gram(alg: StratifiedAlgebra, gram) -> StratifiedAlgebra:
    """Same algebra, different inner product on the horizontal layer."""
    g = [[as_fraction(x) for x in row] for row in gram]
    for a in range(alg.m):
        for b in range(alg.m):
            if g[a][b] != g[b][a]:
                raise ValueError("gram matrix must be symmetric")
    # positive definiteness via exact pivots
    red = [row[:] for row in g]
    for k in range(alg.m):
        if red[k][k] <= 0:
            raise ValueError("gram matrix must be positive definite")
        for i in range(k + 1, alg.m):
            f = red[i][k] / red[k][k]
            red[i] = [x - f * y for x, y in zip(red[i], red[k])]
    out = StratifiedAlgebra(alg.m, alg.basis, alg.table, name=alg.name, gram=g, depth=alg.depth,
                            parent=alg.parent, projection=alg._projection, names=alg.names)
    return out


# -- presets ------------------------------------------------------------------

def heisenberg(n: int = 1) -> StratifiedAlgebra:
    m = 2 * n
    layers = [1] * m + [2]
    trees = list(range(m)) + [(0, n)]
    table = {(i, n + i): {m: 1} for i in range(n)}
    names = [f"X{i + 1}" for i in range(n)] + [f"Y{i + 1}" for i in range(n)]
    if n == 1:
        names = ["X", "Y"]
    return from_brackets(m, layers, table, trees, name=f"heisenberg:{n}", names=names)


def goursat(N: int) -> StratifiedAlgebra:
    """N-dimensional Goursat algebra: [X,Y]=W1, [Y,W_i]=W_{i+1}."""
    if N < 3:
        raise ValueError("goursat needs N >= 3")
    layers = [1, 1] + list(range(2, N))
    trees = [0, 1, (0, 1)]
    table = {(0, 1): {2: 1}}
    for i in range(2, N - 1):
        table[(1, i)] = {i + 1: 1}
        trees.append((1, trees[i]))
    return from_brackets(2, layers, table, trees, name=f"goursat:{N}", names=["X", "Y"])


def engel() -> StratifiedAlgebra:
    alg = goursat(4)
    alg.name = "engel"
    return alg


def superengel() -> StratifiedAlgebra:
    """Basis X, Y, Z, [X,Z], [Y,Z], [Y,[Y,Z]]; all other brackets vanish."""
    layers = [1, 1, 1, 2, 2, 3]
    trees = [0, 1, 2, (0, 2), (1, 2), (1, (1, 2))]
    table = {(0, 2): {3: 1}, (1, 2): {4: 1}, (1, 4): {5: 1}}
    return from_brackets(3, layers, table, trees, name="superengel", names=["X", "Y", "Z"])


def freequot(s: int) -> StratifiedAlgebra:
    """Free step-s algebra on s generators modulo brackets repeating a generator."""
    free = build_free_nilpotent(s, s)
    rels = [free.basis_vector(i) for i, w in enumerate(free.words) if len(set(w)) < len(w)]
    q = quotient(free, rels, name=f"freequot:{s}")
    return q


def multilinear_count(s: int, k: int) -> int:
    """Independent count of brackets of k distinct generators out of s: C(s,k)(k-1)!."""
    return comb(s, k) * factorial(k - 1) if k <= s else 0


def parse_preset(name: str) -> StratifiedAlgebra:
    return _parse_preset_cached(name.strip().lower())


@lru_cache(maxsize=64)
def _parse_preset_cached(name):
    parts = name.split(":")
    head = parts[0]
    try:
        args = [int(p) for p in parts[1:]]
    except ValueError:
        raise ValueError(f"malformed preset {name!r}") from None
    if head == "heisenberg":
        return heisenberg(*(args or [1]))
    if head == "engel" and not args:
        return engel()
    if head == "superengel" and not args:
        return superengel()
    if head == "goursat" and len(args) == 1:
        return goursat(args[0])
    if head == "free" and len(args) == 2:
        return build_free_nilpotent(*args)
    if head == "freequot" and len(args) == 1:
        return freequot(args[0])
    raise ValueError(f"unknown preset {name!r}")


def from_json_spec(spec) -> StratifiedAlgebra:
    """Group spec ``{"generators": m, "step": s, "relations": [...], "name": ...}``.

    Each relation is a sparse vector on free:m:s: a mapping whose keys are
    basis indices or Lyndon words written with 1-based generator digits
    (e.g. ``"112"`` for [X1,[X1,X2]]), and whose values are rationals.
    """
    if isinstance(spec, str):
        spec = json.loads(spec)
    if "preset" in spec:
        return parse_preset(spec["preset"])
    try:
        m, s = int(spec["generators"]), int(spec["step"])
    except KeyError as exc:
        raise ValueError(f"group spec is missing {exc.args[0]!r}") from None
    free = build_free_nilpotent(m, s)
    index = {w: i for i, w in enumerate(free.words)}
    rels = []
    for n, rel in enumerate(spec.get("relations", [])):
        c = [Fraction(0)] * free.dim
        for key, val in rel.items():
            if isinstance(key, str) and not key.isdigit() or (isinstance(key, str) and len(key) > 1 and m < 10):
                w = tuple(int(ch) - 1 for ch in key)
                if w not in index:
                    raise ValueError(f"relation {n}: {key!r} is not a Lyndon word of free:{m}:{s}")
                c[index[w]] += as_fraction(val)
            else:
                c[int(key)] += as_fraction(val)
        rels.append(free.vector(c))
    alg = quotient(free, rels, name=spec.get("name", f"free:{m}:{s}/J")) if rels else free
    if "gram" in spec:
        alg = with_gram(alg, spec["gram"])
    return alg


def load_group(spec: str) -> StratifiedAlgebra:
    """Preset name, or path to a JSON group spec."""
    p = Path(spec)
    if spec.endswith(".json") or p.exists():
        try:
            data = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ValueError(f"{spec}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
        return from_json_spec(data)
    return parse_preset(spec)


PRESETS = ("heisenberg:1", "heisenberg:2", "engel", "goursat:5", "superengel", "free:2:3", "freequot:3")


def random_rational(rng: random.Random, bound=5, den=4):
    return Fraction(rng.randint(-bound * den, bound * den), rng.randint(1, den))
