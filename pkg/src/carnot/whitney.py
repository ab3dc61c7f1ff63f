"""First-order Whitney data for horizontal curves.

Checks the compatibility modulus r_{K,eta}, builds the non-extendable data of
a non-pliable vector, and constructs extensions in step <= 2 by solving one
shooting problem per gap of K.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .curves import (MAX_DEGREE, ControlPath, HorizontalCurve, Piece, _bernstein_matrix, elevate,
                     integrate, step2_endpoint)
from .group_ops import (GroupPoint, dilate, float_group, gauge, gauge_distance, gauge_le, identity,
                        inverse, point, product)
from .lie_core import LieVector, StratifiedAlgebra, as_fraction


def _scalar(x):
    if isinstance(x, str):
        return Fraction(x)
    return x


def _dump(x):
    return str(x) if isinstance(x, Fraction) else float(x)


@dataclass
class WhitneyData:
    K: list
    f: list  # GroupPoint per time
    X: list  # horizontal coefficient tuples per time
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.K:
            raise ValueError("K must be nonempty")
        if any(b <= a for a, b in zip(self.K, self.K[1:])):
            raise ValueError("K must be strictly increasing")
        if not (len(self.K) == len(self.f) == len(self.X)):
            raise ValueError("K, f and X must have equal lengths")
        alg = self.f[0].algebra
        if any(not p.algebra.same_as(alg) for p in self.f):
            raise ValueError("all points must live on one group")
        if any(len(x) != alg.m for x in self.X):
            raise ValueError("X values must be horizontal coefficient vectors")

    @property
    def algebra(self):
        return self.f[0].algebra

    def to_json(self):
        return {"K": [_dump(t) for t in self.K],
                "f": [[_dump(c) for c in p.coords] for p in self.f],
                "X": [[_dump(c) for c in x] for x in self.X],
                "meta": self.meta}

    @classmethod
    def from_json(cls, obj, alg: StratifiedAlgebra):
        if isinstance(obj, str):
            obj = json.loads(obj)
        K = [_scalar(t) for t in obj["K"]]
        f = [point(alg, [_scalar(c) for c in p]) for p in obj["f"]]
        X = [tuple(_scalar(c) for c in x) for x in obj["X"]]
        return cls(K, f, X, obj.get("meta", {}))


def _exp_h(alg, h, X):
    return GroupPoint(alg, tuple(h * c for c in X) + (0,) * (alg.dim - alg.m))


def pair_defect(data: WhitneyData, i, j, exact=False):
    """d(f(t_i), f(t_j) . exp((t_i - t_j) X(t_j))) as a group element (before the gauge)."""
    alg = data.algebra
    h = data.K[i] - data.K[j]
    pred = product(data.f[j], _exp_h(alg, h, data.X[j]))
    return product(inverse(data.f[i]), pred)


def whitney_modulus(data: WhitneyData, eta) -> float:
    """sup over pairs with 0 < |t - tau| < eta of the defect divided by |t - tau|."""
    n = len(data.K)
    if n < 2:
        return 0.0
    alg = data.algebra
    fg = float_group(alg)
    K = np.array([float(t) for t in data.K])
    F = np.array([p.to_list() for p in data.f])
    X = np.array([[float(c) for c in x] for x in data.X])
    best = 0.0
    for j in range(n):
        dt = K - K[j]
        sel = (np.abs(dt) < eta) & (dt != 0)
        if not sel.any():
            continue
        step = np.zeros((sel.sum(), alg.dim))
        step[:, :alg.m] = dt[sel, None] * X[j]
        pred = fg.product(F[j], step)
        d = fg.distance(F[sel], pred)
        best = max(best, float((d / np.abs(dt[sel])).max()))
    return best


@dataclass
class ModulusReport:
    etas: list
    values: list
    exponent: float
    monotone: bool
    passed: bool

    def to_json(self):
        return {"eta": self.etas, "r": self.values, "decay_exponent": self.exponent,
                "monotone": self.monotone, "pass": self.passed,
                "note": "values use the homogeneous gauge in place of the CC distance"}


def modulus_report(data: WhitneyData, etas=None) -> ModulusReport:
    etas = etas or [2.0 ** -k for k in range(1, 7)]
    etas = sorted(etas, reverse=True)
    vals = [whitney_modulus(data, e) for e in etas]
    monotone = all(b <= a for a, b in zip(vals, vals[1:]))
    pos = [(math.log(e), math.log(v)) for e, v in zip(etas, vals) if v > 0]
    if len(pos) >= 2:
        xs, ys = np.array(pos).T
        exponent = float(np.polyfit(xs, ys, 1)[0])
    else:
        exponent = float("inf")
    return ModulusReport(etas, vals, exponent, monotone, monotone and exponent > 0)


def sample_curve_data(c: HorizontalCurve, K):
    """Whitney data (f, X) read off a curve with step <= 2 at the times K."""
    from .curves import restrict
    a = c.control.domain[0]
    f, X = [], []
    for t in K:
        if t == a:
            f.append(c.start)
        else:
            f.append(step2_endpoint(HorizontalCurve(c.start, restrict(c.control, a, t))))
        X.append(tuple(float(v) for v in c.control(float(t))))
    return WhitneyData(list(K), f, X)


# -- counterexample ----------------------------------------------------------------------

DEFAULT_OBSTRUCTIONS = {
    # separating side reported by the reachability probe, top-layer central element
    "engel": ((1, 0), 3, 1),
    "superengel": ((0, 0, 1), 5, -1),
}


def _is_central(alg, i):
    e = alg.basis_vector(i).coeffs
    return all(not any(alg.bracket_coeffs(e, alg.basis_vector(j).coeffs)) for j in range(alg.m))


def obstruction_from_probe(X: LieVector, seed=0, samples=1000, epsilon=0.1):
    """Central basis direction unreachable according to the probe, or None."""
    from .pliability import reachability_probe
    rep = reachability_probe(X, epsilon, samples, seed)
    if not rep.separated:
        return None
    alg = X.algebra
    lam = np.array(rep.direction[:alg.dim])
    i = int(np.argmax(np.abs(lam)))
    # LP directions carry sampling noise off the dominant axis; require a clear winner
    others = np.delete(np.abs(np.array(rep.direction)), i)
    if others.max(initial=0.0) > 1e-2 * abs(lam[i]) or not _is_central(alg, i):
        return None
    return i, -int(np.sign(lam[i]))


def build_counterexample(alg: StratifiedAlgebra, V=None, nmax=12, obstruction=None, tail=None,
                         grid=9):
    """Whitney data on K = {1 - 1/n} u {1} with no C1_H extension.

    ``obstruction`` is (basis index, sign) of a central direction unreachable
    near exp(V); defaults come from the presets or from the probe.
    """
    if nmax < 1:
        raise ValueError("nmax must be >= 1")
    if V is None:
        if alg.name in DEFAULT_OBSTRUCTIONS:
            V = DEFAULT_OBSTRUCTIONS[alg.name][0]
        else:
            raise ValueError("no vector given and no default for this group")
    V = tuple(as_fraction(c) for c in V)
    Vvec = alg.horizontal(V)
    if obstruction is None:
        d = DEFAULT_OBSTRUCTIONS.get(alg.name)
        if d is not None and tuple(as_fraction(c) for c in d[0]) == V:
            obstruction = d[1:]
        else:
            obstruction = obstruction_from_probe(Vvec)
    if obstruction is None:
        raise ValueError("no obstruction direction available: the vector shows no probe "
                         "evidence of non-pliability")
    idx, sign = obstruction
    xbar = point(alg, [Fraction(sign) if k == idx else 0 for k in range(alg.dim)])
    ts = [Fraction(k, (grid - 1) // 2) for k in range(-((grid - 1) // 2), (grid - 1) // 2 + 1)]
    rhos = [Fraction(k, grid - 1) for k in range(grid)]

    def sigma_for(n):
        sigma = Fraction(1)
        bound = Fraction(1, 2 ** n)
        while True:
            xn = dilate(sigma, xbar)
            ok = True
            for r in rhos:
                z = dilate(r, xn)
                for t in ts:
                    e = _exp_h(alg, t, V)
                    if not gauge_le(product(inverse(e), product(z, e)), bound):
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                return sigma
            sigma /= 2

    N = tail or nmax + 20
    ys = [identity(alg)]  # y_1
    sigmas, offsets = [], []
    for n in range(1, N):
        rho = Fraction(1, n * (n + 1))
        sig = sigma_for(n)
        xt = dilate(rho, dilate(sig, xbar))
        sigmas.append(sig)
        offsets.append(xt)
        ys.append(product(product(ys[-1], _exp_h(alg, rho, V)), xt))
    K = [1 - Fraction(1, n) for n in range(1, nmax + 1)] + [Fraction(1)]
    # y_N sits at time 1 - 1/N; carry it to time 1 along V so that only the tail of
    # the offsets is missing from the limit
    f = ys[:nmax] + [product(ys[N - 1], _exp_h(alg, Fraction(1, N), V))]
    meta = {"kind": "counterexample", "group": alg.name, "nmax": nmax, "tail_terms": N,
            "tail_bound": str(Fraction(1, 2 ** (N - 1))),
            "obstruction": {"index": idx, "label": alg.label(idx), "sign": sign},
            "sigma": [str(s) for s in sigmas[:nmax]]}
    data = WhitneyData(K, f, [V] * len(K), meta)
    data.offsets = offsets[:nmax]
    return data


def telescoping_check(data: WhitneyData):
    """Exact check of D(i,j) <= sum_{k=min}^{max-1} 2^-k on the counterexample data.

    Indices follow K = {1 - 1/n}: the point 1 uses the partial-product index
    recorded in the metadata.
    """
    nmax = data.meta["nmax"]
    idx = list(range(1, nmax + 1)) + [data.meta["tail_terms"]]
    worst = None
    for a in range(len(idx)):
        for b in range(len(idx)):
            if a == b:
                continue
            i, j = idx[a], idx[b]
            lo, hi = min(i, j), max(i, j)
            bound = sum((Fraction(1, 2 ** k) for k in range(lo, hi)), Fraction(0))
            d = pair_defect(data, a, b)
            if not gauge_le(d, bound):
                return False, (i, j)
            ratio = gauge(d) / float(bound)
            worst = max(worst or 0.0, ratio)
    return True, worst


# -- step-2 extension -------------------------------------------------------------------------

def _bump_coeffs(k, degree=MAX_DEGREE):
    """Bernstein coefficients of s^2 (1-s)^2 s^k, elevated to ``degree``."""
    n = 4 + k
    power = [0] * (n + 1)
    for j, c in enumerate([1, -2, 1]):  # (1-s)^2
        power[2 + k + j] = c
    from .curves import power_to_bernstein
    b = power_to_bernstein([[Fraction(c)] for c in power])
    return [r[0] for r in elevate(b, degree)]


class GapSolver:
    """Shooting for u on [0,1] with fixed end values and endpoint in layers <= 2."""

    def __init__(self, alg: StratifiedAlgebra, nbumps=None, nodes=10):
        self.alg = alg
        m = alg.m
        self.m = m
        self.K = nbumps or min(4, math.ceil(2 * alg.dim / m))
        self.bumps = [np.array([float(c) for c in _bump_coeffs(k)]) for k in range(self.K)]
        gs, gw = np.polynomial.legendre.leggauss(nodes)
        self.s = 0.5 * (gs + 1)
        self.w = 0.5 * gw
        self.B = _bernstein_matrix(MAX_DEGREE, self.s)
        self.Bi = _bernstein_matrix(MAX_DEGREE + 1, self.s)
        C = float_group(alg).C[:m, :m, :].copy()
        # keep only layer-2 outputs so that step-3 groups can use the truncated problem
        C[:, :, [i for i in range(alg.dim) if alg.layer_of[i] != 2]] = 0
        self.C = C
        self.two = [i for i in range(alg.dim) if alg.layer_of[i] <= 2]

    def _anti(self, coeffs):
        n = coeffs.shape[0] - 1
        return np.vstack([np.zeros(coeffs.shape[1:]), np.cumsum(coeffs, axis=0) / (n + 1)])

    def setup(self, Xa, Xb):
        m = self.m
        herm = np.array(elevate([list(Xa), list(Xa), list(Xb), list(Xb)], MAX_DEGREE), dtype=float)
        psis = [herm]
        for b in self.bumps:
            for i in range(m):
                p = np.zeros((MAX_DEGREE + 1, m))
                p[:, i] = b
                psis.append(p)
        self.psis = psis
        vals = np.array([self.B @ p for p in psis])            # (P, q, m)
        ints = np.array([self.Bi @ self._anti(p) for p in psis])  # (P, q, m)
        self.L1 = np.array([self._anti(p)[-1] for p in psis])   # (P, m)
        self.M = 0.5 * np.einsum("q,aqi,bqj,ijk->abk", self.w, ints, vals, self.C)
        self.herm = herm

    def endpoint(self, c):
        a = np.concatenate([[1.0], c])
        out = np.zeros(self.alg.dim)
        out[:self.m] = a @ self.L1
        out += np.einsum("a,b,abk->k", a, a, self.M)
        return out

    def jacobian(self, c):
        a = np.concatenate([[1.0], c])
        J = np.zeros((self.alg.dim, len(c)))
        J[:self.m] = self.L1[1:].T
        J += (np.einsum("b,abk->ka", a, self.M) + np.einsum("a,abk->kb", a, self.M))[:, 1:]
        return J

    def control_coeffs(self, c):
        out = self.herm.copy()
        for ci, p in zip(c, self.psis[1:]):
            out = out + ci * p
        return out

    def solve(self, Xa, Xb, y, tol=1e-12, max_newton=50, seed=0):
        self.setup(Xa, Xb)
        y = np.asarray(y, dtype=float)
        rows = self.two
        rng = np.random.default_rng(seed)
        best = None
        for attempt in range(4):
            c = np.zeros(len(self.psis) - 1) if attempt == 0 else 1e-2 * rng.standard_normal(len(self.psis) - 1)
            for it in range(max_newton):
                r = (self.endpoint(c) - y)[rows]
                res = float(np.abs(r).max())
                if best is None or res < best[1]:
                    best = (c.copy(), res, it)
                if res < tol:
                    return c, res, it, True
                J = self.jacobian(c)[rows]
                step = np.linalg.lstsq(J, r, rcond=None)[0]
                c = c - step
        return best[0], best[1], best[2], False


@dataclass
class ExtensionResult:
    control: ControlPath
    start: GroupPoint
    gaps: list
    knot_residuals: tuple
    f_residual: float | None = None
    x_residual: float | None = None

    @property
    def curve(self):
        return HorizontalCurve(self.start, self.control)

    @property
    def ok(self):
        return all(g["converged"] for g in self.gaps)

    def to_json(self):
        return {"control": self.control.to_json(), "start": self.start.to_list(),
                "gaps": self.gaps, "knot_value_jump": self.knot_residuals[0],
                "knot_derivative_jump": self.knot_residuals[1],
                "f_residual": self.f_residual, "x_residual": self.x_residual}


def solve_gap(solver, fa, fb, a, b, Xa, Xb, tol, max_newton):
    alg = solver.alg
    L = b - a
    rel = product(inverse(fa), fb)
    y = dilate(1 / as_fraction(L) if not isinstance(L, float) else 1 / L, rel).as_array()
    c, res, its, conv = solver.solve([float(x) for x in Xa], [float(x) for x in Xb], y, tol, max_newton)
    coeffs = solver.control_coeffs(c)
    piece = Piece(a, b, tuple(tuple(float(x) for x in r) for r in coeffs))
    dev = ControlPath([(0, 1, coeffs - np.array([float(x) for x in Xa]))]).sup_norm(alg.gram)
    return piece, {"interval": [float(a), float(b)], "residual": res, "iterations": its,
                   "converged": bool(conv), "coefficients_norm": float(np.linalg.norm(c)),
                   "sup_deviation": dev, "target_gauge": gauge(GroupPoint(alg, tuple(y)))}


def extend_step2(data: WhitneyData, tol=1e-12, max_newton=50, force=False, verify=True) -> ExtensionResult:
    """C1_H extension of Whitney data in a group of step <= 2.

    With ``force`` a higher-step group is accepted and only the layer-1 and
    layer-2 equations are solved; the true endpoint residual is then measured
    by numerical integration.
    """
    alg = data.algebra
    if alg.step > 2 and not force:
        raise ValueError("extend_step2 needs a group of step <= 2")
    if len(data.K) < 2:
        raise ValueError("need at least two points")
    solver = GapSolver(alg)
    pieces, gaps = [], []
    for k in range(len(data.K) - 1):
        a, b = data.K[k], data.K[k + 1]
        piece, diag = solve_gap(solver, data.f[k], data.f[k + 1], a, b, data.X[k], data.X[k + 1],
                                tol, max_newton)
        if alg.step > 2:
            c = HorizontalCurve(data.f[k], ControlPath([piece]))
            end, _ = integrate(c, float(b - a) / 400, method="cf4", samples=False)
            diag["true_residual"] = gauge_distance(end, data.f[k + 1])
            diag["converged"] = diag["converged"] and diag["true_residual"] < 1e-6
        pieces.append(piece)
        gaps.append(diag)
    ctrl = ControlPath(pieces, alg.m)
    out = ExtensionResult(ctrl, data.f[0], gaps, ctrl.knot_residuals())
    if verify and alg.step <= 2:
        out.f_residual = reproduce_residual(out, data)
        out.x_residual = max(float(np.abs(np.array(ctrl(float(t))) - np.array([float(c) for c in x])).max())
                             for t, x in zip(data.K, data.X))
    return out


def reproduce_residual(ext: ExtensionResult, data: WhitneyData) -> float:
    """Max gauge distance between the extension at K and f, via the closed-form flow."""
    x = ext.start
    worst = gauge_distance(x, data.f[0])
    for k, p in enumerate(ext.control.pieces):
        x = step2_endpoint(HorizontalCurve(x, ControlPath([p])))
        worst = max(worst, gauge_distance(x, data.f[k + 1]))
    return worst


# -- Lusin approximation demo -----------------------------------------------------------------

@dataclass
class LusinResult:
    K: list  # closed intervals
    complement_measure: float
    extension: HorizontalCurve
    gaps: list
    agreement: float

    def to_json(self):
        return {"K": self.K, "complement_measure": self.complement_measure,
                "control": self.extension.control.to_json(), "gaps": self.gaps,
                "agreement_residual": self.agreement}


def lusin_demo(c: HorizontalCurve, epsilon, tol=1e-12, jump_tol=1e-12, check_points=5) -> LusinResult:
    """Replace the curve near each velocity jump by a C1_H bridge.

    Windows of radius epsilon / (2J) around the J jumps are removed; each
    window is bridged by a shooting solve and the input pieces are kept on K.
    """
    from .curves import restrict
    alg = c.algebra
    if alg.step > 2:
        raise ValueError("lusin_demo needs a group of step <= 2")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    ctrl = c.control
    a0, b0 = (float(x) for x in ctrl.domain)
    jumps = []
    for k in range(1, len(ctrl.pieces)):
        la, ra, _, _ = ctrl.one_sided(k)
        if np.abs(la - ra).max() > jump_tol:
            jumps.append(float(ctrl.pieces[k].t0))
    if not jumps:
        return LusinResult([[a0, b0]], 0.0, c, [], 0.0)
    r = epsilon / (2 * len(jumps))
    windows = []
    for t in jumps:
        lo, hi = max(a0, t - r), min(b0, t + r)
        if windows and lo <= windows[-1][1]:
            windows[-1][1] = hi
        else:
            windows.append([lo, hi])
    K, cur = [], a0
    for lo, hi in windows:
        if lo > cur:
            K.append([cur, lo])
        cur = hi
    if cur < b0:
        K.append([cur, b0])

    def state(t):
        if t == a0:
            return c.start
        return step2_endpoint(HorizontalCurve(c.start, restrict(ctrl, a0, t)))

    solver = GapSolver(alg)
    pieces, gaps = [], []
    t = a0
    for lo, hi in windows:
        if lo > t:
            pieces.extend(restrict(ctrl, t, lo).pieces)
        ua = _one_sided_value(ctrl, lo, left=True)
        ub = _one_sided_value(ctrl, hi, left=False)
        if lo == a0 or hi == b0:
            raise ValueError("a jump window reaches the end of the domain; lower epsilon")
        piece, diag = solve_gap(solver, state(lo), state(hi), lo, hi, ua, ub, tol, 50)
        pieces.append(piece)
        gaps.append(diag)
        t = hi
    if t < b0:
        pieces.extend(restrict(ctrl, t, b0).pieces)
    ext = HorizontalCurve(c.start, ControlPath(pieces, alg.m))
    worst = 0.0
    for lo, hi in K:
        for s in np.linspace(lo, hi, check_points):
            s = float(s)
            if s == a0:
                continue
            e1 = step2_endpoint(HorizontalCurve(ext.start, restrict(ext.control, a0, s)))
            worst = max(worst, gauge_distance(e1, state(s)))
    measure = sum(hi - lo for lo, hi in windows)
    return LusinResult(K, measure, ext, gaps, worst)


def _one_sided_value(ctrl, t, left):
    for p in ctrl.pieces:
        a, b = float(p.t0), float(p.t1)
        inside = (a < t <= b) if left else (a <= t < b)
        if inside:
            s = (t - a) / (b - a)
            return tuple(float(v) for v in (_bernstein_matrix(p.degree, s) @ p.array))
    raise ValueError("time outside the control domain")
