"""Pliability of horizontal vectors.

Certified routes: the zero vector, absence of abnormal lifts, and the
Bianchini-Stefani bracket-parity criterion on the lifted system
x' = F0(x) + sum v_i F_i(x) on G x R^m.  Non-pliability is certified only via
rigidity.  A numerical reachability probe supplies uncertified evidence.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations_with_replacement

import numpy as np
from scipy.optimize import linprog

from .curves import ControlPath, HorizontalCurve, concat_controls, connector, constant_control, flow, integrate
from .group_ops import GroupPoint, float_group, identity
from .lie_core import LieVector, StratifiedAlgebra, as_fraction
from .linalg import Span, rank
from .rigidity import abnormal_family, rigidity_test

DEFAULT_CAP = 20000


# -- lifted fields -------------------------------------------------------------------

class LiftedField:
    """Vector field (A(u), a) on G x R^m with A polynomial in u and a constant.

    ``poly`` maps exponent tuples (length m) to algebra coefficient tuples.
    """

    __slots__ = ("algebra", "poly", "vertical")

    def __init__(self, algebra, poly=None, vertical=None):
        self.algebra = algebra
        self.poly = {k: tuple(v) for k, v in (poly or {}).items() if any(v)}
        self.vertical = tuple(vertical) if vertical is not None else (Fraction(0),) * algebra.m

    def is_zero(self):
        return not self.poly and not any(self.vertical)

    def __add__(self, other):
        poly = dict(self.poly)
        for k, v in other.poly.items():
            poly[k] = tuple(a + b for a, b in zip(poly[k], v)) if k in poly else v
        return LiftedField(self.algebra, poly, [a + b for a, b in zip(self.vertical, other.vertical)])

    def scale(self, c):
        return LiftedField(self.algebra, {k: tuple(c * x for x in v) for k, v in self.poly.items()},
                           [c * x for x in self.vertical])

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def __eq__(self, other):
        return (self - other).is_zero()

    def derivative(self, i):
        """d/du_i of the algebra part."""
        out = {}
        for k, v in self.poly.items():
            if k[i]:
                e = k[i]
                nk = k[:i] + (e - 1,) + k[i + 1:]
                out[nk] = tuple(e * x for x in v)
        return LiftedField(self.algebra, out)

    def evaluate(self, u):
        """Tangent vector (algebra coefficients, vertical) at a point with velocity u."""
        alg = self.algebra
        acc = [0] * alg.dim
        for k, v in self.poly.items():
            w = 1
            for ui, e in zip(u, k):
                w *= ui ** e
            if w:
                acc = [a + w * x for a, x in zip(acc, v)]
        return list(acc) + list(self.vertical)

    def flat(self, keys):
        """Coordinate row over an index of (monomial, basis index) plus vertical slots."""
        row = [Fraction(0)] * (len(keys) + self.algebra.m)
        for k, v in self.poly.items():
            for j, x in enumerate(v):
                if x:
                    row[keys[(k, j)]] = x
        for i, x in enumerate(self.vertical):
            row[len(keys) + i] = x
        return row

    @property
    def algebra_part(self):
        return self.poly

    def __repr__(self):
        alg = self.algebra
        terms = []
        for k, v in sorted(self.poly.items()):
            mono = "*".join(f"u{i + 1}^{e}" if e > 1 else f"u{i + 1}" for i, e in enumerate(k) if e)
            for j, x in enumerate(v):
                if x:
                    terms.append(f"{x}*{mono + '*' if mono else ''}{alg.label(j)}")
        terms += [f"{x}*d/du{i + 1}" for i, x in enumerate(self.vertical) if x]
        return "LiftedField(" + (" + ".join(terms) or "0") + ")"


def _mul_mono(a, b):
    return tuple(x + y for x, y in zip(a, b))


def lifted_bracket(F: LiftedField, G: LiftedField) -> LiftedField:
    """[(A,a),(B,b)] = ([A,B] + a . d_u B - b . d_u A, 0)."""
    if not F.algebra.same_as(G.algebra):
        raise ValueError("lifted fields live on different algebras")
    alg = F.algebra
    poly = {}
    for ka, va in F.poly.items():
        for kb, vb in G.poly.items():
            br = alg.bracket_coeffs(va, vb)
            if any(br):
                k = _mul_mono(ka, kb)
                poly[k] = tuple(p + q for p, q in zip(poly[k], br)) if k in poly else tuple(br)
    out = LiftedField(alg, poly)
    for i, a in enumerate(F.vertical):
        if a:
            out = out + G.derivative(i).scale(a)
    for i, b in enumerate(G.vertical):
        if b:
            out = out - F.derivative(i).scale(b)
    return LiftedField(alg, out.poly)


def drift_field(alg: StratifiedAlgebra) -> LiftedField:
    """F0 = (sum u_i X_i, 0)."""
    m = alg.m
    poly = {}
    for i in range(m):
        k = tuple(int(j == i) for j in range(m))
        poly[k] = tuple(Fraction(int(j == i)) for j in range(alg.dim))
    return LiftedField(alg, poly)


def control_field(alg: StratifiedAlgebra, i) -> LiftedField:
    """F_i = (0, e_i), 0-based i."""
    return LiftedField(alg, {}, [Fraction(int(j == i)) for j in range(alg.m)])


def constant_field(alg, vec) -> LiftedField:
    return LiftedField(alg, {(0,) * alg.m: tuple(vec)})


# -- bracket words ----------------------------------------------------------------------

@dataclass
class BracketWord:
    tree: object  # "F0", ("F", j) or (left, right)
    length: int
    multidegree: tuple
    field: LiftedField

    def __str__(self):
        return _word_str(self.tree)


def _word_str(t):
    if t == "F0":
        return "F0"
    if isinstance(t, tuple) and t[0] == "F":
        return f"F{t[1] + 1}"
    return f"[{_word_str(t[0])},{_word_str(t[1])}]"


def bracket_words(a: BracketWord, b: BracketWord) -> BracketWord:
    return BracketWord((a.tree, b.tree), a.length + b.length,
                       tuple(x + y for x, y in zip(a.multidegree, b.multidegree)),
                       lifted_bracket(a.field, b.field))


def j_family(alg: StratifiedAlgebra):
    """ad_{F0}^k F_j for 0 <= k <= s, and whether ad^{s+1} vanished for every j."""
    F0 = BracketWord("F0", 1, (0,) * alg.m, drift_field(alg))
    out, vanished = [], True
    for j in range(alg.m):
        w = BracketWord(("F", j), 1, tuple(int(i == j) for i in range(alg.m)), control_field(alg, j))
        for k in range(alg.step + 1):
            if not w.field.is_zero():
                out.append(w)
            w = bracket_words(F0, w)
        vanished &= w.field.is_zero()
    return out, vanished


def _monomial_keys(alg):
    m = alg.m
    monos = []
    for d in range(alg.step):
        for combo in combinations_with_replacement(range(m), d):
            k = [0] * m
            for c in combo:
                k[c] += 1
            monos.append(tuple(k))
    keys = {}
    for mono in monos:
        for j in range(alg.dim):
            keys[(mono, j)] = len(keys)
    return keys


@dataclass
class HierarchyReport:
    lmax: int
    classes: dict  # (length, multidegree) -> list of BracketWord
    even_ok: bool
    failures: list
    stabilized: bool
    truncation_ok: bool
    capped: bool
    count: int

    def words(self):
        for ws in self.classes.values():
            yield from ws


def build_hierarchy(alg: StratifiedAlgebra, lmax=None, cap=DEFAULT_CAP) -> HierarchyReport:
    """Span bases of iterated brackets of the J family, graded by (length, multidegree).

    Also tests the parity condition: every element whose multidegree is even
    in each F_i must be a constant-coefficient combination of shorter elements.
    """
    return _hierarchy_cached(alg.digest, alg, lmax or 2 * alg.step + 2, cap)


@lru_cache(maxsize=32)
def _hierarchy_cached(_digest, alg, lmax, cap):
    keys = _monomial_keys(alg)
    ncols = len(keys) + alg.m
    J, truncation_ok = j_family(alg)
    classes, spans = {}, {}
    shorter = Span(ncols)
    failures = []
    count = 0
    capped = False
    for L in range(1, lmax + 1):
        cands = [w for w in J if w.length == L]
        ks = sorted(classes)
        for i, ka in enumerate(ks):
            for kb in ks[i:]:
                if ka[0] + kb[0] != L:
                    continue
                A, B = classes[ka], classes[kb]
                for x, a in enumerate(A):
                    for y in range(x + 1 if ka == kb else 0, len(B)):
                        count += 1
                        if count > cap:
                            capped = True
                            break
                        cands.append(bracket_words(a, B[y]))
        new = {}
        for w in cands:
            if w.field.is_zero():
                continue
            key = (w.length, w.multidegree)
            sp = spans.setdefault(key, Span(ncols))
            if sp.add(w.field.flat(keys)):
                new.setdefault(key, []).append(w)
        for key, ws in new.items():
            classes.setdefault(key, []).extend(ws)
            if all(d % 2 == 0 for d in key[1]):
                for w in ws:
                    if not shorter.contains(w.field.flat(keys)):
                        failures.append(w)
        for key, ws in new.items():
            for w in ws:
                shorter.add(w.field.flat(keys))
        if capped:
            break
    stabilized = not any(k[0] > 2 * alg.step for k in classes)
    return HierarchyReport(lmax, classes, not failures, failures, stabilized, truncation_ok, capped, count)


@dataclass
class BSReport:
    tag: str  # Pliable or Inconclusive
    rank: int
    target_rank: int
    even_ok: bool
    stabilized: bool
    truncation_ok: bool
    capped: bool
    failures: list = field(default_factory=list)

    def to_json(self):
        return {"tag": self.tag, "rank": self.rank, "target_rank": self.target_rank,
                "even_condition": self.even_ok, "stabilized": self.stabilized,
                "truncation_verified": self.truncation_ok, "capped": self.capped,
                "parity_failures": self.failures[:10]}


def bianchini_stefani(X: LieVector, lmax=None, cap=DEFAULT_CAP) -> BSReport:
    if not X.is_horizontal():
        raise ValueError("bianchini_stefani needs a horizontal vector")
    alg = X.algebra
    H = build_hierarchy(alg, lmax, cap)
    u = [as_fraction(c) for c in X.horizontal_part]
    rows = [w.field.evaluate(u) for w in H.words()]
    r = rank(rows, alg.dim + alg.m) if rows else 0
    target = alg.dim + alg.m
    ok = r == target and H.even_ok and H.stabilized and H.truncation_ok and not H.capped
    return BSReport("Pliable" if ok else "Inconclusive", r, target, H.even_ok, H.stabilized,
                    H.truncation_ok, H.capped, [str(w) for w in H.failures])


# -- verdicts ---------------------------------------------------------------------------

@dataclass
class PliabilityVerdict:
    tag: str
    certificate: str
    details: dict = field(default_factory=dict)

    def to_json(self):
        return {"tag": self.tag, "certificate": self.certificate, "details": self.details}


def no_abnormal_certificate(X: LieVector) -> bool:
    return abnormal_family(X).dim == 0


def zero_pliable(alg: StratifiedAlgebra, epsilon=None, seed=0, attempts=20, h=None):
    """Pliable verdict for the zero vector, with the loop witness on request."""
    details = {}
    if epsilon is not None:
        w = zero_witness(alg, epsilon, seed=seed, attempts=attempts, h=h)
        details["witness"] = w
    return PliabilityVerdict("Pliable", "ZeroVector", details)


def _flows_product(fg, Vs, taus):
    x = np.zeros(fg.alg.dim)
    for V, t in zip(Vs, taus):
        x = fg.product(x, np.concatenate([t * V, np.zeros(fg.alg.dim - fg.alg.m)]))
    return x


def zero_witness(alg, epsilon, seed=0, attempts=20, h=None, fd=1e-6):
    """Loop exp(t_1 V_1)...exp(t_k V_k) = 0 with full-rank time derivative.

    Random V_j followed by their negatives in reverse order close the loop;
    the rank of the time derivative is checked by finite differences.  The
    witness control joins the constant pieces with connectors.
    """
    fg = float_group(alg)
    rng = np.random.default_rng(seed)
    n = alg.dim
    for _ in range(attempts):
        W = rng.standard_normal((n, alg.m))
        Vs = list(W) + [-v for v in W[::-1]]
        k = len(Vs)
        total = 0.5
        taus = np.full(k, total / k)
        # rescale so every |V_j| < epsilon; this dilates phi and keeps phi(t) = 0
        lam = 0.5 * epsilon / max(np.linalg.norm(v) for v in Vs)
        Vs = [lam * v for v in Vs]
        J = np.zeros((alg.dim, k))
        for j in range(k):
            d = np.zeros(k)
            d[j] = fd
            J[:, j] = (_flows_product(fg, Vs, taus + d) - _flows_product(fg, Vs, taus - d)) / (2 * fd)
        sv = np.linalg.svd(J, compute_uv=False)
        if alg.dim == 0 or sv[alg.dim - 1] > 1e-8 * max(sv[0], 1e-300):
            break
    else:
        return {"available": False}
    r = (1 - taus.sum()) / k
    parts, prev = [], np.zeros(alg.m)
    for V, t in zip(Vs, taus):
        parts.append(connector(float(r), [float(x) for x in prev], [float(x) for x in V]))
        parts.append(constant_control([float(x) for x in V], 0, float(t)))
        prev = V
    ctrl = concat_controls(*parts)
    c = HorizontalCurve(identity(alg), ctrl)
    end, _ = integrate(c, h or 1e-3, samples=False)
    sigma_min = float(sv[min(alg.dim, len(sv)) - 1]) if alg.dim else 0.0
    return {
        "available": True,
        "k": k,
        "sup_norm": ctrl.sup_norm(alg.gram),
        "endpoint_error": float(np.abs(end.as_array()).max()),
        "jacobian_rank": int(np.sum(sv > 1e-8 * sv[0])) if len(sv) else 0,
        "sigma_min": sigma_min,
        "radius_estimate": 0.5 * sigma_min * float(taus.min()),
        "control": ctrl,
    }


def pliability_test(X: LieVector, lmax=None, probe=False, seed=0, epsilon=0.1, samples=1000):
    if not X.is_horizontal():
        raise ValueError("pliability_test needs a horizontal vector")
    alg = X.algebra
    if X.is_zero():
        return zero_pliable(alg)
    if no_abnormal_certificate(X):
        return PliabilityVerdict("Pliable", "NoAbnormalLift")
    bs = bianchini_stefani(X, lmax)
    if bs.tag == "Pliable":
        return PliabilityVerdict("Pliable", "BianchiniStefani", {"bianchini_stefani": bs.to_json()})
    rv = rigidity_test(X, seed=seed)
    details = {"bianchini_stefani": bs.to_json(), "rigidity": rv.tag}
    if rv.tag == "Rigid":
        return PliabilityVerdict("NotPliable", "RigidHenceNotPliable", details)
    if probe:
        rep = reachability_probe(X, epsilon, samples, seed)
        details["probe"] = rep.to_json()
        return PliabilityVerdict("Unknown", "ProbeEvidenceOnly", details)
    return PliabilityVerdict("Unknown", "ProbeEvidenceOnly", details)


# -- reachability probe -----------------------------------------------------------------------

def second_kind_chart(fg, h):
    """Coordinates a with h = exp(a_N e_N) ... exp(a_1 e_1), batched.

    Peels factors from the right in increasing basis order.
    """
    h = np.array(h, dtype=float, copy=True)
    N = fg.alg.dim
    a = np.zeros_like(h)
    for i in range(N):
        a[..., i] = h[..., i]
        e = np.zeros_like(h)
        e[..., i] = -a[..., i]
        h = fg.product(h, e)
    return a


@dataclass
class ProbeReport:
    separated: bool
    direction: list | None
    margin: float
    coverage_radius: float
    samples: int
    epsilon: float
    seed: int
    chart: str = "second-kind, descending basis order, anchored at exp(X)"
    endpoints: np.ndarray | None = None

    def to_json(self):
        return {"separated": self.separated, "direction": self.direction, "margin": self.margin,
                "coverage_radius": self.coverage_radius, "samples": self.samples,
                "epsilon": self.epsilon, "seed": self.seed, "chart": self.chart}


def probe_endpoints(X: LieVector, epsilon, samples, seed, degree=4, steps=64):
    alg = X.algebra
    fg = float_group(alg)
    m = alg.m
    rng = np.random.default_rng(seed)
    ubar = np.array([float(c) for c in X.horizontal_part])
    bound = epsilon / (degree * math.sqrt(m))
    C = rng.uniform(-bound, bound, (samples, degree, m))
    powers = np.arange(1, degree + 1)

    def ufun(t):
        return ubar + np.einsum("j,njm->nm", t ** powers, C)

    x0 = np.zeros((samples, alg.dim))
    x1 = flow(fg, x0, ufun, 0.0, 1.0, steps)
    anchor = -np.concatenate([ubar, np.zeros(alg.dim - m)])
    rel = second_kind_chart(fg, fg.product(anchor, x1))
    du = C.sum(axis=1)  # u(1) - ubar
    return np.hstack([rel, du])


def separating_direction(D, tol=1e-7):
    """LP: maximise s subject to lambda . d_i >= s, |lambda|_inf <= 1 (columns rescaled)."""
    scale = D.std(axis=0)
    scale[scale == 0] = 1.0
    Ds = D / scale
    n, k = Ds.shape
    c = np.zeros(k + 1)
    c[-1] = -1.0
    A = np.hstack([-Ds, np.ones((n, 1))])
    res = linprog(c, A_ub=A, b_ub=np.zeros(n), bounds=[(-1, 1)] * k + [(None, 1)], method="highs")
    if not res.success:
        return None, 0.0
    s = float(res.x[-1])
    if s <= tol:
        return None, s
    lam = res.x[:k] / scale
    lam = lam / np.abs(lam).max()
    return lam, s


def coverage_radius(D, directions=200, seed=0):
    """min over random unit directions w of max_i w . d_i (in rescaled coordinates)."""
    scale = D.std(axis=0)
    scale[scale == 0] = 1.0
    Ds = D / scale
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((directions, Ds.shape[1]))
    W /= np.linalg.norm(W, axis=1, keepdims=True)
    return float((Ds @ W.T).max(axis=0).min())


def reachability_probe(X: LieVector, epsilon=0.1, samples=1000, seed=0, keep=False) -> ProbeReport:
    if not epsilon > 0 or samples < 1:
        raise ValueError("need epsilon > 0 and samples >= 1")
    D = probe_endpoints(X, epsilon, samples, seed)
    lam, s = separating_direction(D)
    cov = 0.0 if lam is not None else coverage_radius(D, seed=seed)
    return ProbeReport(lam is not None, None if lam is None else [float(x) for x in lam], s, cov,
                       samples, epsilon, seed, endpoints=D if keep else None)
