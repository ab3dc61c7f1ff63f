"""Horizontal curves given by piecewise-polynomial controls.

A control piece stores Bernstein coefficients in the normalised variable
s = (t - t0) / (t1 - t0), so values at the knots are read off exactly and
the curve surgeries only relabel the domain.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .group_ops import (GroupPoint, dilate, float_group, identity, inverse, point, product,
                        to_float)
from .lie_core import as_fraction

MAX_DEGREE = 7

# order-4 commutator-free scheme: Gauss nodes and mixing weights
_C1, _C2 = 0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6
_A1, _A2 = 0.25 + math.sqrt(3) / 6, 0.25 - math.sqrt(3) / 6


def _bernstein_matrix(n, s):
    s = np.asarray(s, dtype=float)[..., None]
    i = np.arange(n + 1)
    binom = np.array([math.comb(n, k) for k in i], dtype=float)
    return binom * s ** i * (1 - s) ** (n - i)


def power_to_bernstein(a):
    """Bernstein coefficients of sum_j a[j] s^j (rows are vector coefficients)."""
    a = [list(r) for r in a]
    n = len(a) - 1
    out = []
    for i in range(n + 1):
        row = [0] * len(a[0])
        for j in range(i + 1):
            w = Fraction(math.comb(i, j), math.comb(n, j))
            row = [r + w * x if not isinstance(x, float) else r + float(w) * x for r, x in zip(row, a[j])]
        out.append(row)
    return out


def bernstein_to_power(b):
    b = np.asarray(b, dtype=float)
    n = b.shape[0] - 1
    a = np.zeros_like(b)
    for j in range(n + 1):
        for i in range(j + 1):
            a[j] += math.comb(n, j) * math.comb(j, i) * (-1) ** (j - i) * b[i]
    return a


def elevate(b, degree):
    """Degree-elevate Bernstein coefficients (exact for rational inputs)."""
    b = [list(r) for r in b]
    while len(b) - 1 < degree:
        n = len(b) - 1
        new = [b[0]]
        for i in range(1, n + 1):
            w = Fraction(i, n + 1)
            new.append([w * x + (1 - w) * y for x, y in zip(b[i - 1], b[i])])
        new.append(b[-1])
        b = new
    return b


@dataclass(frozen=True)
class Piece:
    t0: object
    t1: object
    coeffs: tuple  # (deg+1) rows of m scalars

    @property
    def degree(self):
        return len(self.coeffs) - 1

    @property
    def array(self):
        return np.array([[float(x) for x in r] for r in self.coeffs])

    @property
    def length(self):
        return self.t1 - self.t0


class ControlPath:
    """Piecewise-polynomial control t -> R^m on [a, b]."""

    def __init__(self, pieces, m=None):
        ps = []
        for p in pieces:
            if not isinstance(p, Piece):
                t0, t1, c = p
                p = Piece(t0, t1, tuple(tuple(r) for r in c))
            if p.degree > MAX_DEGREE:
                raise ValueError(f"piece degree {p.degree} exceeds the cap {MAX_DEGREE}")
            if not p.t1 > p.t0:
                raise ValueError("pieces must have positive length")
            ps.append(p)
        if not ps:
            raise ValueError("empty control")
        for a, b in zip(ps, ps[1:]):
            if abs(float(a.t1) - float(b.t0)) > 1e-12:
                raise ValueError("pieces must tile the domain")
        self.pieces = tuple(ps)
        self.m = m or len(ps[0].coeffs[0])
        self._arrays = [p.array for p in ps]
        self._knots = np.array([float(p.t0) for p in ps] + [float(ps[-1].t1)])

    @property
    def domain(self):
        return self.pieces[0].t0, self.pieces[-1].t1

    @property
    def length(self):
        a, b = self.domain
        return b - a

    # -- evaluation ----------------------------------------------------------
    def _locate(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self._knots, t, side="right") - 1
        return np.clip(idx, 0, len(self.pieces) - 1)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        flat = t.reshape(-1)
        out = np.empty((flat.size, self.m))
        idx = self._locate(flat)
        for k in np.unique(idx):
            sel = idx == k
            p = self.pieces[k]
            s = (flat[sel] - float(p.t0)) / float(p.length)
            out[sel] = _bernstein_matrix(p.degree, s) @ self._arrays[k]
        return out.reshape(t.shape + (self.m,))

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        flat = t.reshape(-1)
        out = np.zeros((flat.size, self.m))
        idx = self._locate(flat)
        for k in np.unique(idx):
            p = self.pieces[k]
            if p.degree == 0:
                continue
            sel = idx == k
            d = p.degree * np.diff(self._arrays[k], axis=0) / float(p.length)
            s = (flat[sel] - float(p.t0)) / float(p.length)
            out[sel] = _bernstein_matrix(p.degree - 1, s) @ d
        return out.reshape(t.shape + (self.m,))

    def start_value(self):
        return tuple(self.pieces[0].coeffs[0])

    def end_value(self):
        return tuple(self.pieces[-1].coeffs[-1])

    def one_sided(self, k):
        """(left value, right value, left derivative, right derivative) at knot k."""
        a, b = self.pieces[k - 1], self.pieces[k]
        A, B = self._arrays[k - 1], self._arrays[k]
        da = a.degree * (A[-1] - A[-2]) / float(a.length) if a.degree else np.zeros(self.m)
        db = b.degree * (B[1] - B[0]) / float(b.length) if b.degree else np.zeros(self.m)
        return A[-1], B[0], da, db

    def knot_residuals(self):
        """Max jump of the value and of the derivative over interior knots."""
        v = d = 0.0
        for k in range(1, len(self.pieces)):
            la, ra, lda, rda = self.one_sided(k)
            v = max(v, float(np.abs(la - ra).max()))
            d = max(d, float(np.abs(lda - rda).max()))
        return v, d

    def continuity(self, tol=1e-12):
        """'C1', 'C0', or 'none' for the control across its knots."""
        v, d = self.knot_residuals()
        if v > tol:
            return "none"
        return "C1" if d <= tol else "C0"

    def sup_norm(self, gram=None):
        """Exact-up-to-rounding max of the norm, via critical points of |u|^2."""
        G = np.eye(self.m) if gram is None else np.asarray(gram, dtype=float)
        best = 0.0
        for arr in self._arrays:
            a = bernstein_to_power(arr)
            n = a.shape[0] - 1
            q = np.zeros(2 * n + 1)
            for i in range(n + 1):
                for j in range(n + 1):
                    q[i + j] += a[i] @ G @ a[j]
            cands = [0.0, 1.0]
            if n >= 1:
                dq = np.polynomial.polynomial.polyder(q)
                if np.any(np.abs(dq) > 0):
                    r = np.polynomial.polynomial.polyroots(np.trim_zeros(dq, "b")) if len(np.trim_zeros(dq, "b")) > 1 else []
                    cands += [float(x.real) for x in np.atleast_1d(r) if abs(x.imag) < 1e-9 and 0 <= x.real <= 1]
            vals = np.polynomial.polynomial.polyval(np.array(cands), q)
            best = max(best, float(np.sqrt(max(vals.max(), 0.0))))
        return best

    def shifted(self, dt):
        return ControlPath([Piece(p.t0 + dt, p.t1 + dt, p.coeffs) for p in self.pieces], self.m)

    def to_json(self):
        return {
            "domain": [float(x) for x in self.domain],
            "continuity": self.continuity(),
            "pieces": [{"interval": [float(p.t0), float(p.t1)],
                        "bernstein": [[float(x) for x in r] for r in p.coeffs]} for p in self.pieces],
        }

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls([(p["interval"][0], p["interval"][1], p["bernstein"]) for p in obj["pieces"]])

    def __repr__(self):
        return f"ControlPath({self.domain}, pieces={len(self.pieces)}, {self.continuity()})"


def _sub_bernstein(arr, s0, s1):
    """Bernstein coefficients of a piece restricted to [s0, s1] in its normalised variable."""
    n = arr.shape[0] - 1
    sig = np.linspace(0, 1, n + 1)
    # interpolate at n+1 nodes: exact for degree-n polynomials
    vals = _bernstein_matrix(n, s0 + (s1 - s0) * sig) @ arr
    return np.linalg.solve(_bernstein_matrix(n, sig), vals)


def restrict(path, a, b) -> ControlPath:
    """The control on the subinterval [a, b]."""
    a, b = float(a), float(b)
    lo, hi = (float(x) for x in path.domain)
    if not (lo - 1e-15 <= a < b <= hi + 1e-15):
        raise ValueError("subinterval outside the control domain")
    out = []
    for k, p in enumerate(path.pieces):
        t0, t1 = float(p.t0), float(p.t1)
        u0, u1 = max(a, t0), min(b, t1)
        if u1 <= u0:
            continue
        if u0 == t0 and u1 == t1:
            out.append(Piece(t0, t1, p.coeffs))
            continue
        L = t1 - t0
        sub = _sub_bernstein(path._arrays[k], (u0 - t0) / L, (u1 - t0) / L)
        out.append(Piece(u0, u1, tuple(tuple(float(x) for x in r) for r in sub)))
    return ControlPath(out, path.m)


def constant_control(c, a=0, b=1):
    return ControlPath([(a, b, [tuple(c)])])


def piecewise_constant(values, durations, t0=0):
    pieces, t = [], t0
    for v, d in zip(values, durations):
        pieces.append((t, t + d, [tuple(v)]))
        t = t + d
    return ControlPath(pieces)


def polynomial_control(power_coeffs, a=0, b=1):
    """Control sum_j c_j s^j with s the normalised time on [a, b]."""
    return ControlPath([(a, b, power_to_bernstein(power_coeffs))])


def concat_controls(*paths):
    pieces, t = [], None
    for p in paths:
        if t is not None:
            p = p.shifted(t - p.domain[0])
        pieces.extend(p.pieces)
        t = p.domain[1]
    return ControlPath(pieces)


@dataclass(frozen=True)
class HorizontalCurve:
    start: GroupPoint
    control: ControlPath

    def __post_init__(self):
        if self.control.m != self.start.algebra.m:
            raise ValueError("control dimension does not match the number of generators")

    @property
    def algebra(self):
        return self.start.algebra

    @property
    def is_c1_h(self):
        return self.control.continuity() in ("C0", "C1")

    def velocity(self, t):
        return self.control(t)


def curve(start, control):
    return HorizontalCurve(start, control)


# -- integration ----------------------------------------------------------------------

def _pad(fg, u):
    out = np.zeros(u.shape[:-1] + (fg.alg.dim,))
    out[..., :fg.alg.m] = u
    return out


def flow(fg, x, ufun, t0, t1, n, method="midpoint", record=False):
    """Integrate x' = x.u on [t0, t1] with n equal steps; x may be batched.

    ``ufun(t)`` returns controls of shape (..., m).
    """
    h = (t1 - t0) / n
    xs = [x] if record else None
    for k in range(n):
        a = t0 + k * h
        if method == "midpoint":
            x = fg.product(x, _pad(fg, h * ufun(a + 0.5 * h)))
        elif method == "cf4":
            u1, u2 = ufun(a + _C1 * h), ufun(a + _C2 * h)
            x = fg.product(x, _pad(fg, h * (_A1 * u1 + _A2 * u2)))
            x = fg.product(x, _pad(fg, h * (_A2 * u1 + _A1 * u2)))
        else:
            raise ValueError(f"unknown method {method!r}")
        if record:
            xs.append(x)
    return (x, xs) if record else x


def integrate(c: HorizontalCurve, h, method="midpoint", samples=True):
    """Endpoint and step-boundary samples (times, coordinate rows)."""
    if not h > 0:
        raise ValueError("step size must be positive")
    fg = float_group(c.algebra)
    x = c.start.as_array()
    times, rows = [float(c.control.domain[0])], [x]
    for k, p in enumerate(c.control.pieces):
        arr = c.control._arrays[k]
        if not np.all(np.isfinite(arr)):
            raise ValueError("non-finite control values")
        a, b = float(p.t0), float(p.t1)
        n = max(1, math.ceil((b - a) / h - 1e-9))

        def ufun(t, p=p, arr=arr, a=a, b=b):
            return _bernstein_matrix(p.degree, (t - a) / (b - a)) @ arr

        x, xs = flow(fg, x, ufun, a, b, n, method, record=True)
        if samples:
            times.extend(np.linspace(a, b, n + 1)[1:])
            rows.extend(xs[1:])
    end = GroupPoint(c.algebra, tuple(float(v) for v in x))
    return end, (np.array(times), np.array(rows))


def exact_endpoint(c: HorizontalCurve) -> GroupPoint:
    """Exact endpoint for piecewise-constant controls with rational data."""
    x = c.start
    alg = c.algebra
    for p in c.control.pieces:
        if any(r != p.coeffs[0] for r in p.coeffs):
            raise ValueError("exact endpoint needs piecewise-constant controls")
        d = as_fraction(p.t1) - as_fraction(p.t0)
        x = product(x, point(alg, [d * as_fraction(v) for v in p.coeffs[0]] + [0] * (alg.dim - alg.m)))
    return x


def step2_endpoint(c: HorizontalCurve, nodes=8) -> GroupPoint:
    """Closed-form endpoint for step <= 2 using Gauss-Legendre quadrature.

    Layer 1 is the integral of u; layer 2 is half the integral of [U, u] with
    U the running integral.  Exact for polynomial controls up to rounding.
    """
    alg = c.algebra
    if alg.step > 2:
        raise ValueError("closed-form flow only for step <= 2")
    fg = float_group(alg)
    m = alg.m
    C = fg.C[:m, :m, :]
    gs, gw = np.polynomial.legendre.leggauss(nodes)
    U = np.zeros(m)
    L2 = np.zeros(alg.dim)
    for k, p in enumerate(c.control.pieces):
        arr = c.control._arrays[k]
        L = float(p.length)
        n = p.degree
        anti = np.vstack([np.zeros(m), np.cumsum(arr, axis=0) * L / (n + 1)])
        s = 0.5 * (gs + 1)
        u = _bernstein_matrix(n, s) @ arr
        Ut = U + _bernstein_matrix(n + 1, s) @ anti
        L2 += 0.5 * L * 0.5 * np.einsum("q,qi,qj,ijk->k", gw, Ut, u, C)
        U = U + anti[-1]
    delta = L2.copy()
    delta[:m] += U
    return GroupPoint(alg, tuple(fg.product(c.start.as_array(), delta)))


# -- surgeries ---------------------------------------------------------------------------

def _scaled(path, lam, negate=False, reverse=False, t0=0):
    """Control on [t0, t0 + |lam| * len] with velocity (+-)u((t - t0)/|lam|), optionally reversed."""
    a, b = path.domain
    out = []
    pieces = path.pieces[::-1] if reverse else path.pieces
    for p in pieces:
        if reverse:
            s0, s1 = b - p.t1, b - p.t0
            coeffs = p.coeffs[::-1]
        else:
            s0, s1 = p.t0 - a, p.t1 - a
            coeffs = p.coeffs
        if negate:
            coeffs = tuple(tuple(-x for x in r) for r in coeffs)
        out.append(Piece(t0 + lam * s0, t0 + lam * s1, coeffs))
    return ControlPath(out, path.m)


def t1_dilate(c: HorizontalCurve, lam) -> HorizontalCurve:
    """delta_lam o gamma(t / lam) on [0, lam * T]; velocity gamma'(t / lam)."""
    if not lam > 0:
        raise ValueError("T1 needs lambda > 0")
    return HorizontalCurve(dilate(lam, c.start), _scaled(c.control, lam))


def t2_dilate(c: HorizontalCurve, lam) -> HorizontalCurve:
    """delta_lam o gamma(t / |lam|) for lam < 0; velocity -gamma'(t / |lam|)."""
    if not lam < 0:
        raise ValueError("T2 needs lambda < 0")
    return HorizontalCurve(dilate(lam, c.start), _scaled(c.control, -lam, negate=True))


def t3_reverse(c: HorizontalCurve) -> HorizontalCurve:
    """gamma(T)^-1 . gamma(T - t): starts at the identity, velocity -gamma'(T - t)."""
    return HorizontalCurve(identity(c.algebra), _scaled(c.control, 1, negate=True, reverse=True))


def t4_reverse_keep(c: HorizontalCurve) -> HorizontalCurve:
    """T3 composed with T2 at lambda = -1: velocity gamma'(T - t), from the identity."""
    return HorizontalCurve(identity(c.algebra), _scaled(c.control, 1, reverse=True))


def t5_concat(c1: HorizontalCurve, c2: HorizontalCurve) -> HorizontalCurve:
    """Concatenation of two curves anchored at the identity."""
    if any(c1.start.coords) or any(c2.start.coords):
        raise ValueError("T5 needs both curves to start at the identity")
    a1 = c1.control.domain[0]
    first = c1.control.shifted(-a1) if a1 != 0 else c1.control
    second = c2.control.shifted(first.domain[1] - c2.control.domain[0])
    return HorizontalCurve(c1.start, ControlPath(first.pieces + second.pieces, c1.control.m))


# -- constructions -----------------------------------------------------------------------

def connector(r, V, W) -> ControlPath:
    """C0 control on [0, r] from V to W whose curve returns to its start.

    Linear through -V/2 and 0, then through -W/2 to W, on quarters of r.  Each
    half moves back and forth along one line, so the displacement cancels,
    and the sup norm is max(|V|, |W|).
    """
    if not r > 0:
        raise ValueError("connector needs r > 0")
    V, W = list(V), list(W)
    half = lambda v: [x / 2 if not isinstance(x, int) else Fraction(x, 2) for x in v]
    zero = [0 * x for x in V]
    q = as_fraction(r) / 4 if not isinstance(r, float) else r / 4
    knots = [0, q, 2 * q, 3 * q, 4 * q]
    vals = [V, [-x for x in half(V)], zero, [-x for x in half(W)], W]
    return ControlPath([(knots[i], knots[i + 1], [tuple(vals[i]), tuple(vals[i + 1])]) for i in range(4)])


def interp_prefix(V, W, rho) -> ControlPath:
    """Control t -> ((rho - t) V + t W) / rho on [0, rho]."""
    if not rho > 0:
        raise ValueError("interp_prefix needs rho > 0")
    return ControlPath([(0, rho, [tuple(V), tuple(W)])])


def f_rho_map(x: GroupPoint, rho) -> GroupPoint:
    """delta_rho(x) . delta_{rho-1}(x)^-1, the endpoint of the T_rho surgery."""
    return product(dilate(rho, x), inverse(dilate(rho - 1, x)))


def f_rho_jacobian(x: GroupPoint, rho, h=1e-6):
    """Central finite-difference Jacobian of f_rho at x (float)."""
    fg = float_group(x.algebra)
    x0 = x.as_array()

    def F(v):
        return fg.product(fg.dilate(rho, v), -fg.dilate(rho - 1, v))

    J = np.zeros((x0.size, x0.size))
    for i in range(x0.size):
        e = np.zeros(x0.size)
        e[i] = h
        J[:, i] = (F(x0 + e) - F(x0 - e)) / (2 * h)
    return J


def sample_curve_csv(c: HorizontalCurve, h, method="midpoint"):
    end, (ts, xs) = integrate(c, h, method)
    us = c.control(ts)
    lines = []
    for t, u, x in zip(ts, us, xs):
        lines.append(",".join(repr(float(v)) for v in [t, *u, *x]))
    return "\n".join(lines) + "\n"
