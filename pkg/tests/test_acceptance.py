"""Acceptance criteria 1-9, one printed PASS/FAIL line each."""

import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from _support import cantor_points, smooth_heisenberg_curve
from conftest import ACCEPTANCE_LINES
from carnot.curves import (HorizontalCurve, exact_endpoint, integrate, piecewise_constant,
                           polynomial_control)
from carnot.group_ops import GroupPoint, dilate, identity, point, product
from carnot.lie_core import PRESETS, bracket, jacobi_defect, parse_preset
from carnot.pliability import bianchini_stefani, lifted_bracket, control_field, drift_field, LiftedField
from carnot.pliability import pliability_test, reachability_probe
from carnot.rigidity import abnormal_family, adjoint_equation_defect, q_form, rigidity_test
from carnot.whitney import (build_counterexample, extend_step2, modulus_report, sample_curve_data,
                            telescoping_check)

F = Fraction


def report(n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def rand_vec(alg, rng, horizontal=False):
    n = alg.m if horizontal else alg.dim
    c = [F(rng.randint(-9, 9), rng.randint(1, 4)) for _ in range(n)]
    return alg.horizontal(c) if horizontal else alg.vector(c)


# 1 ---------------------------------------------------------------------------------------------

def test_criterion_1_algebra_exactness():
    t0 = time.perf_counter()
    bad = []
    for name in PRESETS:
        alg = parse_preset(name)
        rng = random.Random(name)
        for _ in range(1000):
            a, b, c = (rand_vec(alg, rng) for _ in range(3))
            lam = F(rng.randint(-9, 9), rng.randint(1, 4))
            x, y, z = (GroupPoint(alg, v.coeffs) for v in (a, b, c))
            if bracket(a, b) != -bracket(b, a):
                bad.append((name, "antisymmetry"))
            if any(jacobi_defect(alg, a.coeffs, b.coeffs, c.coeffs)):
                bad.append((name, "jacobi"))
            if product(product(x, y), z) != product(x, product(y, z)):
                bad.append((name, "associativity"))
            if dilate(lam, product(x, y)) != product(dilate(lam, x), dilate(lam, y)):
                bad.append((name, "dilation"))
    dt = time.perf_counter() - t0
    report(1, not bad and dt < 60,
           f"7 presets x 1000 exact cases, {len(bad)} failures, {dt:.1f}s (limit 60s)")


# 2 ---------------------------------------------------------------------------------------------

def test_criterion_2_verdict_table():
    t0 = time.perf_counter()
    problems = []
    eng = parse_preset("engel")
    X = eng.horizontal([1, 0])
    if rigidity_test(X).tag != "Rigid" or pliability_test(X).tag != "NotPliable":
        problems.append("engel")

    sup = parse_preset("superengel")
    Z = sup.horizontal([0, 0, 1])
    rv = rigidity_test(Z)
    # Q(Y) on the e5-dual witness
    y = [F(0), F(1), F(0)]
    qy = q_form(rv.witness, Z, [y])[0][0] if rv.witness is not None else None
    if rv.tag != "NotRigid" or qy != -1:
        problems.append(f"superengel tag={rv.tag} Q(Y)={qy}")

    rng = random.Random(2)
    for name in ("heisenberg:1", "heisenberg:2"):
        alg = parse_preset(name)
        for _ in range(50):
            v = rand_vec(alg, rng, horizontal=True)
            if not v.is_zero() and pliability_test(v).tag != "Pliable":
                problems.append(f"{name} {v}")

    for name in ("heisenberg:1", "heisenberg:2", "free:2:2", "free:3:2"):
        alg = parse_preset(name)
        vecs = [alg.zero()] + [rand_vec(alg, rng, horizontal=True) for _ in range(49)]
        for v in vecs:
            if bianchini_stefani(v).tag != "Pliable":
                problems.append(f"BS {name} {v}")

    fq = parse_preset("freequot:3")
    for _ in range(50):
        v = rand_vec(fq, rng, horizontal=True)
        if pliability_test(v).tag != "Pliable":
            problems.append(f"freequot:3 {v}")

    for name in PRESETS:
        alg = parse_preset(name)
        if pliability_test(alg.zero()).tag != "Pliable":
            problems.append(f"zero on {name}")
    dt = time.perf_counter() - t0
    report(2, not problems and dt < 300,
           f"verdict table, {len(problems)} mismatches {problems[:3]}, {dt:.1f}s (limit 300s)")


# 3 ---------------------------------------------------------------------------------------------

def test_criterion_3_lifted_brackets():
    problems = []
    for name in ("heisenberg:1", "free:3:2"):
        alg = parse_preset(name)
        F0 = drift_field(alg)
        Fs = [control_field(alg, i) for i in range(alg.m)]
        X = [alg.basis_vector(i).coeffs for i in range(alg.m)]
        const = lambda v: LiftedField(alg, {(0,) * alg.m: tuple(v)})
        for i in range(alg.m):
            a = lifted_bracket(F0, Fs[i])
            if a != const([-x for x in X[i]]):
                problems.append(f"{name} [F0,F{i + 1}]")
            lin = LiftedField(alg, {tuple(int(k == j) for k in range(alg.m)): tuple(alg.bracket_coeffs(X[i], X[j]))
                                    for j in range(alg.m)})
            if lifted_bracket(F0, a) != lin:
                problems.append(f"{name} [F0,[F0,F{i + 1}]]")
            for j in range(alg.m):
                if not lifted_bracket(a, Fs[j]).is_zero():
                    problems.append(f"{name} [[F0,F{i + 1}],F{j + 1}]")
                if lifted_bracket(a, lifted_bracket(F0, Fs[j])) != const(alg.bracket_coeffs(X[i], X[j])):
                    problems.append(f"{name} [[F0,F{i + 1}],[F0,F{j + 1}]]")
    report(3, not problems, f"lifted bracket displays on heisenberg:1 and free:3:2, mismatches {problems}")


# 4 ---------------------------------------------------------------------------------------------

def test_criterion_4_abnormal_law():
    worst = F(0)
    rng = random.Random(4)
    for name in PRESETS:
        alg = parse_preset(name)
        for _ in range(10):
            X = rand_vec(alg, rng, horizontal=True)
            for p in abnormal_family(X).basis:
                worst = max(worst, adjoint_equation_defect(p, X))
            p0 = alg.covector([F(rng.randint(-3, 3)) for _ in range(alg.dim)])
            worst = max(worst, adjoint_equation_defect(p0, X))
    de = abnormal_family(parse_preset("engel").horizontal([1, 0])).dim
    dh = abnormal_family(parse_preset("heisenberg:1").horizontal([1, 0])).dim
    report(4, worst == 0 and de == 1 and dh == 0,
           f"adjoint law exact defect {worst}, engel family dim {de}, heisenberg dim {dh}")


# 5 ---------------------------------------------------------------------------------------------

def test_criterion_5_integrator():
    rng = random.Random(5)
    exact_err = 0.0
    for name in ("heisenberg:1", "engel", "superengel", "free:2:3"):
        alg = parse_preset(name)
        for _ in range(5):
            vals = [[F(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(alg.m)] for _ in range(3)]
            durs = [F(rng.randint(1, 4), 8) for _ in range(3)]
            c = HorizontalCurve(identity(alg), piecewise_constant(vals, durs))
            end, _ = integrate(c, 0.05)
            exact_err = max(exact_err, float(np.abs(end.as_array() - exact_endpoint(c).as_array()).max()))

    alg = parse_preset("engel")
    orders = []
    nrng = random.Random(55)
    for _ in range(10):
        ctrl = polynomial_control([[nrng.uniform(-1, 1) for _ in range(2)] for _ in range(5)])
        c = HorizontalCurve(identity(alg), ctrl)
        xs = [integrate(c, 0.1 / 2 ** k)[0].as_array() for k in range(3)]
        orders.append(math.log2(np.linalg.norm(xs[0] - xs[1]) / np.linalg.norm(xs[1] - xs[2])))

    h1 = parse_preset("heisenberg:1")
    sq = HorizontalCurve(identity(h1), piecewise_constant([[1, 0], [0, 1], [-1, 0], [0, -1]], [1] * 4))
    sq_err = float(np.abs(integrate(sq, 0.25)[0].as_array() - [0, 0, 1]).max())
    ok = exact_err <= 1e-14 and all(1.8 <= o <= 2.2 for o in orders) and sq_err <= 1e-12
    report(5, ok, f"piecewise-constant error {exact_err:.1e}, observed orders "
                  f"[{min(orders):.3f}, {max(orders):.3f}], square loop error {sq_err:.1e}")


# 6 ---------------------------------------------------------------------------------------------

def test_criterion_6_counterexample():
    t0 = time.perf_counter()
    data = build_counterexample(parse_preset("engel"), nmax=12)
    tele, worst = telescoping_check(data)
    rep = modulus_report(data, [2.0 ** -k for k in range(1, 7)])
    dt = time.perf_counter() - t0
    ok = tele and rep.monotone and rep.exponent > 0 and dt < 60
    report(6, ok, f"engel nmax=12 telescoping {tele} (worst ratio {worst:.3f}), modulus "
                  f"{[round(v, 5) for v in rep.values]} nonincreasing={rep.monotone}, "
                  f"exponent {rep.exponent:.3f}, {dt:.1f}s")


# 7 ---------------------------------------------------------------------------------------------

def test_criterion_7_extension_round_trip():
    t0 = time.perf_counter()
    c = smooth_heisenberg_curve()
    K = cantor_points()
    data = sample_curve_data(c, K)
    ext = extend_step2(data, tol=1e-12)
    ctrl = ext.control
    # one-sided finite differences of the curve velocity at interior points of K
    d = 1e-7
    mismatch = 0.0
    for t in K[1:-1]:
        t = float(t)
        left, right = ctrl(t - d), ctrl(t + d)
        mismatch = max(mismatch, float(np.abs(left - right).max()))
    dt = time.perf_counter() - t0
    ok = ext.ok and ext.f_residual <= 1e-6 and ext.x_residual == 0 and mismatch <= 1e-6 and dt < 30
    report(7, ok, f"20-point Cantor set on heisenberg:1: f residual {ext.f_residual:.1e}, "
                  f"X residual {ext.x_residual}, one-sided mismatch {mismatch:.1e}, {dt:.1f}s")


# 8 ---------------------------------------------------------------------------------------------

def test_criterion_8_probe():
    Z = parse_preset("superengel").horizontal([0, 0, 1])
    signs, hits = set(), 0
    for seed in range(10):
        rep = reachability_probe(Z, 0.1, 1000, seed)
        if rep.separated:
            hits += 1
            signs.add(int(np.sign(rep.direction[5])))
    H = parse_preset("heisenberg:1").horizontal([1, 0])
    hz = sum(reachability_probe(H, 0.1, 1000, seed).separated for seed in range(10))
    ok = hits >= 9 and len(signs) == 1 and hz == 0
    report(8, ok, f"superengel separated {hits}/10 with z3 signs {sorted(signs)}, "
                  f"heisenberg separated {hz}/10")


# 9 ---------------------------------------------------------------------------------------------

def test_criterion_9_soundness():
    rng = random.Random(9)
    conflicts, tally = [], {}
    per = math.ceil(500 / len(PRESETS))
    total = 0
    for name in PRESETS:
        alg = parse_preset(name)
        axes = [alg.horizontal([int(i == j) for j in range(alg.m)]) for i in range(alg.m)]
        vecs = ([alg.zero()] + axes + [rand_vec(alg, rng, True) for _ in range(per)])[:per]
        for v in vecs:
            r = rigidity_test(v, samples=40).tag
            p = pliability_test(v).tag
            tally[(r, p)] = tally.get((r, p), 0) + 1
            total += 1
            if r == "Rigid" and p == "Pliable":
                conflicts.append((name, v))
    report(9, not conflicts and total >= 500,
           f"{total} vectors, {len(conflicts)} Rigid+Pliable conflicts, tally {dict(sorted(tally.items()))}")
