"""Group law in exponential coordinates of the first kind.

The product is the truncated Baker-Campbell-Hausdorff series.  Its
coefficients on the Lyndon basis of the free algebra on two letters are
obtained once per step by computing log(exp(a) exp(b)) in the truncated
tensor algebra and reducing the result; evaluating a Lyndon word then means
substituting x, y for the letters and bracketing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .lie_core import (AlgebraMismatch, StratifiedAlgebra, _EXPANDER, _tadd, _tmul,
                       as_fraction, lyndon_words, word_tree)


# -- BCH coefficients ------------------------------------------------------------

def _texp(letter, s):
    out = {(): Fraction(1)}
    term = {(): Fraction(1)}
    gen = {(letter,): Fraction(1)}
    for n in range(1, s + 1):
        term = {w: c / n for w, c in _tmul(term, gen, s).items()}
        out = _tadd(out, term)
    return out


@lru_cache(maxsize=None)
def bch_terms(s: int):
    """Tuple of (bracket tree over letters 0=x, 1=y, coefficient) through degree s."""
    prod = _tmul(_texp(0, s), _texp(1, s), s)
    z = {w: c for w, c in prod.items() if w}
    log = {}
    power = {(): Fraction(1)}
    for n in range(1, s + 1):
        power = _tmul(power, z, s)
        log = _tadd(log, power, Fraction((-1) ** (n + 1), n))
    coords = _EXPANDER.reduce(log)
    order = sorted(lyndon_words(2, s), key=lambda w: (len(w), w))
    return tuple((word_tree(w), coords[w]) for w in order if w in coords)


# -- points -------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GroupPoint:
    algebra: StratifiedAlgebra
    coords: tuple

    def __eq__(self, other):
        return (isinstance(other, GroupPoint) and self.algebra.same_as(other.algebra)
                and all(a == b for a, b in zip(self.coords, other.coords)))

    def __hash__(self):
        return hash(self.coords)

    def __mul__(self, other):
        return product(self, other)

    def to_list(self):
        return [float(c) for c in self.coords]

    def as_array(self):
        return np.array([float(c) for c in self.coords])

    @property
    def is_exact(self):
        return all(isinstance(c, (int, Fraction)) for c in self.coords)

    def __repr__(self):
        return f"GroupPoint({', '.join(str(c) for c in self.coords)})"


def identity(alg: StratifiedAlgebra) -> GroupPoint:
    return GroupPoint(alg, (Fraction(0),) * alg.dim)


def point(alg: StratifiedAlgebra, coords) -> GroupPoint:
    coords = tuple(c if isinstance(c, float) else as_fraction(c) for c in coords)
    if len(coords) != alg.dim:
        raise ValueError(f"expected {alg.dim} coordinates, got {len(coords)}")
    return GroupPoint(alg, coords)


def exp(v) -> GroupPoint:
    """exp of a LieVector, which in first-kind coordinates is the same vector."""
    return GroupPoint(v.algebra, tuple(v.coeffs))


def log(x: GroupPoint):
    return x.algebra.vector(x.coords)


def _bch_coeffs(alg, a, b):
    terms = bch_terms(alg.step)
    memo = {0: list(a), 1: list(b)}

    def ev(tree):
        key = tree
        if key not in memo:
            memo[key] = alg.bracket_coeffs(ev(tree[0]), ev(tree[1]))
        return memo[key]

    out = [0] * alg.dim
    for tree, c in terms:
        if isinstance(tree, int):
            vals = memo[tree]
        else:
            if len(_leaves(tree)) > alg.step:
                continue
            vals = ev(tree)
        for k, v in enumerate(vals):
            if v != 0:
                out[k] += c * v
    return out


def _leaves(tree):
    return (tree,) if isinstance(tree, int) else _leaves(tree[0]) + _leaves(tree[1])


def product(x: GroupPoint, y: GroupPoint) -> GroupPoint:
    if not x.algebra.same_as(y.algebra):
        raise AlgebraMismatch("points live on different groups")
    alg = x.algebra
    if alg.step == 1:
        return GroupPoint(alg, tuple(a + b for a, b in zip(x.coords, y.coords)))
    if not any(x.coords):
        return y
    if not any(y.coords):
        return x
    return GroupPoint(alg, tuple(_bch_coeffs(alg, x.coords, y.coords)))


def product_many(*pts) -> GroupPoint:
    out = pts[0]
    for p in pts[1:]:
        out = product(out, p)
    return out


def inverse(x: GroupPoint) -> GroupPoint:
    return GroupPoint(x.algebra, tuple(-c for c in x.coords))


def dilate(lam, x: GroupPoint) -> GroupPoint:
    alg = x.algebra
    pw = [lam ** k for k in range(1, alg.depth + 1)]
    return GroupPoint(alg, tuple(c * pw[alg.layer_of[i] - 1] for i, c in enumerate(x.coords)))


def layer_norms_sq(x):
    """Squared norm of each layer, exact when the coordinates are exact."""
    alg = x.algebra
    c = x.coords
    h = c[:alg.m]
    out = [alg.inner(h, h)]
    for rng in alg.layer_ranges[1:]:
        out.append(sum(c[i] * c[i] for i in rng))
    return out


def gauge(x: GroupPoint) -> float:
    """Homogeneous gauge max_k |x_k|^(1/k)."""
    return max((float(n) ** (1.0 / (2 * k)) for k, n in enumerate(layer_norms_sq(x), 1)), default=0.0)


def gauge_le(x: GroupPoint, c) -> bool:
    """Exact test gauge(x) <= c for rational coordinates and rational c >= 0."""
    c = as_fraction(c)
    if c < 0:
        return False
    return all(n <= c ** (2 * k) for k, n in enumerate(layer_norms_sq(x), 1))


def gauge_distance(x: GroupPoint, y: GroupPoint) -> float:
    return gauge(product(inverse(x), y))


def to_float(x: GroupPoint) -> GroupPoint:
    return GroupPoint(x.algebra, tuple(float(c) for c in x.coords))


# -- batched float backend --------------------------------------------------------------

class FloatGroup:
    """Vectorised float group law on arrays of shape (..., dim)."""

    def __init__(self, alg: StratifiedAlgebra):
        self.alg = alg
        self.C = alg.dense_constants()
        self.terms = [(t, float(c)) for t, c in bch_terms(alg.step) if len(_leaves(t)) <= alg.step]
        self.layer = np.array(alg.layer_of)
        G = np.array([[float(v) for v in row] for row in alg.gram])
        self.G = G

    def bracket(self, a, b):
        return np.einsum("...i,...j,ijk->...k", a, b, self.C, optimize=True)

    def product(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if self.alg.step == 1:
            return a + b
        memo = {0: a, 1: b}

        def ev(tree):
            if tree not in memo:
                memo[tree] = self.bracket(ev(tree[0]), ev(tree[1]))
            return memo[tree]

        out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
        for tree, c in self.terms:
            out = out + c * ev(tree)
        return out

    def dilate(self, lam, a):
        return np.asarray(a) * np.asarray(lam, dtype=float)[..., None] ** self.layer

    def gauge(self, a):
        a = np.asarray(a, dtype=float)
        m = self.alg.m
        h = a[..., :m]
        vals = [np.sqrt(np.maximum(np.einsum("...i,ij,...j->...", h, self.G, h), 0.0))]
        for k, rng in enumerate(self.alg.layer_ranges[1:], start=2):
            if len(rng) == 0:
                continue
            sl = a[..., rng.start:rng.stop]
            vals.append(np.sqrt((sl * sl).sum(-1)) ** (1.0 / k))
        return np.max(np.stack(vals, -1), -1)

    def distance(self, a, b):
        return self.gauge(self.product(-np.asarray(a), b))


@lru_cache(maxsize=32)
def _float_group_cached(digest, alg):
    return FloatGroup(alg)


def float_group(alg: StratifiedAlgebra) -> FloatGroup:
    return _float_group_cached(alg.digest, alg)


# -- diagnostics ------------------------------------------------------------------------

def sample_ball(alg, center, radius, n, rng):
    """Random points of the gauge ball around ``center`` (float arrays)."""
    fg = float_group(alg)
    v = rng.standard_normal((n, alg.dim))
    g = fg.gauge(v)
    unit = fg.dilate(1.0 / g, v)
    r = radius * rng.uniform(0, 1, n) ** (1.0 / alg.dim)
    return fg.product(np.asarray(center, dtype=float), fg.dilate(r, unit))


def brick_constant(x: GroupPoint, r, R, samples=10_000, seed=0, grid=None):
    """Largest sampled eps with B(x,r) inside y . delta_{1-rho}(B(x,R)) . z.

    Uses the equivalent test gauge distance from x of
    delta_{1/(1-rho)}(y^-1 x' z^-1) below R, for x' in B(x,r) and
    y, z, rho of size at most eps.  Monte Carlo; diagnostic only.
    """
    if not 0 < r < R:
        raise ValueError("need 0 < r < R")
    alg = x.algebra
    fg = float_group(alg)
    rng = np.random.default_rng(seed)
    xc = x.as_array()
    xs = sample_ball(alg, xc, r, samples, rng)
    ys = sample_ball(alg, np.zeros(alg.dim), 1.0, samples, rng)
    zs = sample_ball(alg, np.zeros(alg.dim), 1.0, samples, rng)
    us = rng.uniform(0, 1, samples)
    grid = grid if grid is not None else [2.0 ** -k for k in range(1, 40)]
    for eps in sorted(grid, reverse=True):
        if eps >= 1:
            continue
        y = fg.dilate(np.full(samples, eps), ys)
        z = fg.dilate(np.full(samples, eps), zs)
        rho = eps * us
        w = fg.product(fg.product(-y, xs), -z)
        w = fg.dilate(1.0 / (1.0 - rho), w)
        if np.all(fg.distance(xc, w) < R):
            return eps
    return 0.0


def quasi_triangle_constant(alg, n=10_000, seed=0):
    """Empirical max of d(x,z) / (d(x,y) + d(y,z)) over random triples."""
    fg = float_group(alg)
    rng = np.random.default_rng(seed)
    x, y, z = (rng.standard_normal((n, alg.dim)) for _ in range(3))
    num = fg.distance(x, z)
    den = fg.distance(x, y) + fg.distance(y, z)
    return float(np.max(num / den))
