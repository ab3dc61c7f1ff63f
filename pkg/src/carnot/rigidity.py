"""Abnormal covectors along straight curves and the rigidity trichotomy."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import factorial

import numpy as np

from .lie_core import (Covector, LieVector, StratifiedAlgebra, ad_power_span, annihilator,
                       subalgebra_span)
from .linalg import Span, nullspace

T_GRID = 64
Q_MARGIN = 1e-9
RANDOM_MEMBERS = 200


def _compose_ad(alg, p, X):
    """Coefficients of the covector p o ad_X."""
    out = []
    for i in range(alg.dim):
        e = [0] * alg.dim
        e[i] = 1
        col = alg.bracket_coeffs(X.coeffs, e)
        out.append(sum((a * b for a, b in zip(p, col) if a != 0 and b != 0), Fraction(0)))
    return out


def time_coefficients(p0: Covector, X: LieVector):
    """Polynomial coefficients c_k with p(t) = sum_k t^k c_k, where p(t) = p0 o exp(t ad_X)."""
    alg = X.algebra
    out, cur = [], list(p0.coeffs)
    k = 0
    while any(cur):
        out.append(Covector(alg, tuple(Fraction(c) / factorial(k) for c in cur)))
        cur = _compose_ad(alg, cur, X)
        k += 1
        if k > alg.depth + 1:
            raise RuntimeError("ad_X failed to be nilpotent")
    return out or [Covector(alg, tuple(Fraction(0) for _ in range(alg.dim)))]


def adjoint_equation_defect(p0: Covector, X: LieVector):
    """Max coefficient of d/dt p(t)Y - p(t)[X,Y] over basis Y, as a t-polynomial."""
    alg = X.algebra
    cs = time_coefficients(p0, X)
    worst = Fraction(0)
    for i in range(alg.dim):
        Y = alg.basis_vector(i)
        XY = alg.bracket_coeffs(X.coeffs, Y.coeffs)
        for k in range(len(cs) + 1):
            lhs = (k + 1) * cs[k + 1].coeffs[i] if k + 1 < len(cs) else 0
            rhs = cs[k].pair(XY) if k < len(cs) else 0
            worst = max(worst, abs(Fraction(lhs) - rhs))
    return worst


@dataclass
class AbnormalFamily:
    X: LieVector
    basis: list  # of Covector

    @property
    def dim(self):
        return len(self.basis)

    def at(self, p0: Covector, t):
        """p(t) as float coefficients."""
        cs = time_coefficients(p0, self.X)
        return sum(float(t) ** k * np.array([float(x) for x in c.coeffs]) for k, c in enumerate(cs))

    def member(self, weights):
        alg = self.X.algebra
        c = [Fraction(0)] * alg.dim
        for w, b in zip(weights, self.basis):
            c = [x + w * y for x, y in zip(c, b.coeffs)]
        return Covector(alg, tuple(c))


def abnormal_family(X: LieVector) -> AbnormalFamily:
    alg = X.algebra
    rows = ad_power_span(X)
    return AbnormalFamily(X, [Covector(alg, tuple(v)) for v in annihilator(rows, alg.dim)])


def goh_form(p: Covector):
    """Antisymmetric matrix p([X_i, X_j]) over the horizontal basis."""
    alg = p.algebra
    m = alg.m
    M = [[Fraction(0)] * m for _ in range(m)]
    for i in range(m):
        for j in range(m):
            if i != j:
                e = alg.basis_vector(i).coeffs
                f = alg.basis_vector(j).coeffs
                M[i][j] = p.pair(alg.bracket_coeffs(e, f))
    return M


def goh_identically_zero(p0: Covector, X: LieVector) -> bool:
    return all(all(x == 0 for row in goh_form(c) for x in row) for c in time_coefficients(p0, X))


def perp_basis(X: LieVector):
    """Exact orthogonal basis (horizontal coefficient rows) of X-perp in layer 1.

    Gram-Schmidt over the rationals; vectors are orthogonal but not normalised.
    """
    alg = X.algebra
    m = alg.m
    x = list(X.horizontal_part)
    ip = alg.inner
    out = []
    start = [x] if any(x) else []
    for g in range(m):
        v = [Fraction(int(i == g)) for i in range(m)]
        for b in start + out:
            nb = ip(b, b)
            if nb:
                f = ip(v, b) / nb
                v = [a - f * c for a, c in zip(v, b)]
        if any(v):
            out.append(v)
    return out


def _pad(alg, h):
    return list(h) + [Fraction(0)] * (alg.dim - alg.m)


def q_form(p: Covector, X: LieVector, basis=None):
    """Symmetric matrix of V -> p[V,[X,V]] on X-perp (exact)."""
    alg = X.algebra
    basis = perp_basis(X) if basis is None else basis
    vs = [_pad(alg, b) for b in basis]
    br = alg.bracket_coeffs
    xv = [br(X.coeffs, v) for v in vs]
    n = len(vs)
    Q = [[Fraction(0)] * n for _ in range(n)]
    for a in range(n):
        for b in range(a, n):
            val = (p.pair(br(vs[a], xv[b])) + p.pair(br(vs[b], xv[a]))) / 2
            Q[a][b] = Q[b][a] = val
    return Q


def q_polynomial(p0: Covector, X: LieVector, basis=None):
    """Coefficient matrices of Q_{p(t)} = sum_k t^k Q_k."""
    return [q_form(c, X, basis) for c in time_coefficients(p0, X)]


def q_min_eig(p0: Covector, X: LieVector, grid=T_GRID, basis=None):
    """Minimum over t in a uniform grid of [0,1] of the least eigenvalue of Q_{p(t)}."""
    Qs = [np.array([[float(x) for x in r] for r in Q]) for Q in q_polynomial(p0, X, basis)]
    if not Qs or Qs[0].size == 0:
        return float("inf")
    best = float("inf")
    for t in np.linspace(0, 1, grid):
        M = sum(t ** k * Q for k, Q in enumerate(Qs))
        best = min(best, float(np.linalg.eigvalsh(M)[0]))
    return best


def pliable_subgroup_certificate(X: LieVector, max_extra=None):
    """Horizontal S containing X on which exp(tX) has no abnormal lift.

    If the subalgebra generated by S equals span{ad_X^k V : V in S}, the
    straight curve is pliable inside the Carnot subgroup generated by S,
    hence not rigid there, hence not rigid in the whole group.  Returns the
    spanning rows of S or None.
    """
    alg = X.algebra
    m = alg.m
    x = list(X.coeffs)
    cands = [b for b in perp_basis(X)]
    max_extra = m - 2 if max_extra is None else max_extra
    for r in range(1, max_extra + 1):
        for combo in combinations(cands, r):
            S = [x] + [_pad(alg, c) for c in combo]
            sub = subalgebra_span(alg, S)
            sp = Span(alg.dim, S)
            frontier = list(S)
            while frontier:
                nxt = []
                for v in frontier:
                    w = alg.bracket_coeffs(x, v)
                    if sp.add(w):
                        nxt.append(w)
                frontier = nxt
            if len(sp) == len(sub):
                return S
    return None


@dataclass
class RigidityVerdict:
    tag: str
    witness: Covector | None = None
    q_margin: float | None = None
    reason: str = ""
    family_dim: int = 0
    goh_dim: int = 0
    details: dict = field(default_factory=dict)

    def to_json(self):
        alg = self.witness.algebra if self.witness is not None else None
        return {
            "tag": self.tag,
            "reason": self.reason,
            "witness": None if self.witness is None else {
                "coeffs": [str(c) for c in self.witness.coeffs],
                "support": [alg.label(i) for i, c in enumerate(self.witness.coeffs) if c != 0],
            },
            "q_margin": self.q_margin,
            "family_dim": self.family_dim,
            "goh_dim": self.goh_dim,
            "details": self.details,
        }


def rigidity_test(X: LieVector, seed=0, samples=RANDOM_MEMBERS, grid=T_GRID, margin=Q_MARGIN):
    alg = X.algebra
    if not X.is_horizontal():
        raise ValueError("rigidity_test needs a horizontal vector")
    if X.is_zero():
        return RigidityVerdict("NotRigid", reason="zero_vector_pliable")
    fam = abnormal_family(X)
    if fam.dim == 0:
        return RigidityVerdict("NotRigid", reason="no_abnormal_lift")

    # members whose Goh matrix vanishes identically in t
    rows = []
    for i in range(alg.m):
        for j in range(i + 1, alg.m):
            v = alg.bracket_coeffs(alg.basis_vector(i).coeffs, alg.basis_vector(j).coeffs)
            for _ in range(alg.depth + 1):
                if not any(v):
                    break
                rows.append([Fraction(0) + sum((b.coeffs[k] * v[k] for k in range(alg.dim)), Fraction(0))
                             for b in fam.basis])
                v = alg.bracket_coeffs(X.coeffs, v)
    goh_null = nullspace(rows, fam.dim) if rows else [[Fraction(int(i == j)) for j in range(fam.dim)]
                                                       for i in range(fam.dim)]
    admissible = [fam.member(w) for w in goh_null]
    base = dict(family_dim=fam.dim, goh_dim=len(admissible))
    if not admissible:
        witness = fam.basis[0]
        return RigidityVerdict("NotRigid", witness=witness, reason="goh_violated", **base)

    perp = perp_basis(X)
    rng = random.Random(seed)
    cands = []
    for a in admissible:
        cands += [a, -a]
    for _ in range(samples if len(admissible) > 1 else 0):
        w = [Fraction(rng.randint(-8, 8), rng.randint(1, 4)) for _ in admissible]
        if any(w):
            c = Covector(alg, tuple(sum((wi * a.coeffs[k] for wi, a in zip(w, admissible)), Fraction(0))
                                    for k in range(alg.dim)))
            cands.append(c)
    best, best_p = -float("inf"), None
    mins = []
    for p in cands:
        q = q_min_eig(p, X, grid, perp)
        mins.append(q)
        if q > best:
            best, best_p = q, p
    if best > margin:
        return RigidityVerdict("Rigid", witness=best_p, q_margin=best, reason="goh_and_q_positive", **base)

    violator = _violating_member(admissible, X, perp, cands, mins)
    if len(admissible) == 1 and q_min_eig(admissible[0], X, grid, perp) < -margin \
            and q_min_eig(-admissible[0], X, grid, perp) < -margin:
        return RigidityVerdict("NotRigid", witness=violator[0], q_margin=violator[1],
                               reason="q_indefinite_for_every_admissible_member", **base)
    S = pliable_subgroup_certificate(X)
    if S is not None:
        return RigidityVerdict("NotRigid", witness=violator[0], q_margin=violator[1],
                               reason="pliable_in_horizontal_subgroup",
                               details={"subgroup_horizontal": [[str(c) for c in v[:alg.m]] for v in S]},
                               **base)
    return RigidityVerdict("Unknown", witness=violator[0], q_margin=violator[1],
                           reason="second_order_test_undecided", **base)


def _violating_member(admissible, X, perp, cands, mins):
    """Prefer an admissible member with an exact negative diagonal entry of Q at t = 0."""
    for p in admissible + [-a for a in admissible]:
        Q = q_form(p, X, perp)
        for i in range(len(Q)):
            if Q[i][i] < 0:
                return p, float(Q[i][i])
    k = int(np.argmin(mins))
    return cands[k], mins[k]
