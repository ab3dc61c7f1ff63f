import json
from fractions import Fraction

import numpy as np
import pytest

from _support import cantor_points, smooth_heisenberg_curve
from carnot.curves import HorizontalCurve, piecewise_constant, polynomial_control
from carnot.group_ops import gauge, identity, point
from carnot.lie_core import engel, heisenberg, parse_preset, superengel
from carnot.whitney import (GapSolver, WhitneyData, build_counterexample, extend_step2, lusin_demo,
                            modulus_report, obstruction_from_probe, pair_defect, sample_curve_data,
                            telescoping_check, whitney_modulus)

F = Fraction


def test_cantor_points():
    K = cantor_points()
    assert len(K) == 20 and K[0] == 0 and K[-1] == 1


# -- data validation and modulus ---------------------------------------------------------------

def test_whitney_data_validation():
    alg = heisenberg(1)
    e = identity(alg)
    with pytest.raises(ValueError):
        WhitneyData([], [], [])
    with pytest.raises(ValueError):
        WhitneyData([1, 0], [e, e], [(0, 0), (0, 0)])
    with pytest.raises(ValueError):
        WhitneyData([0, 1], [e, e], [(0, 0)])
    with pytest.raises(ValueError):
        WhitneyData([0, 1], [e, identity(engel())], [(0, 0), (0, 0)])


def test_whitney_data_json_round_trip():
    data = build_counterexample(engel(), nmax=4)
    back = WhitneyData.from_json(json.dumps(data.to_json()), engel())
    assert back.K == data.K and back.f == data.f and back.X == data.X


def test_modulus_of_a_straight_line_is_zero():
    alg = engel()
    K = [F(k, 8) for k in range(9)]
    X = (F(1), F(-1, 2))
    f = [point(alg, [t * X[0], t * X[1], 0, 0]) for t in K]
    data = WhitneyData(K, f, [X] * len(K))
    assert whitney_modulus(data, 1.0) == 0.0
    assert all(pair_defect(data, i, j) == identity(alg) for i in range(9) for j in range(9))


def test_modulus_decays_on_smooth_curve_samples():
    c = smooth_heisenberg_curve()
    data = sample_curve_data(c, [k / 64 for k in range(65)])
    rep = modulus_report(data)
    assert rep.monotone and rep.exponent > 0.5


# -- counterexample -----------------------------------------------------------------------------------

def test_engel_counterexample_structure():
    data = build_counterexample(engel(), nmax=6)
    assert data.K == [1 - F(1, n) for n in range(1, 7)] + [F(1)]
    assert data.meta["obstruction"] == {"index": 3, "label": "[Y,[X,Y]]", "sign": 1}
    assert all(x == (1, 0) for x in data.X)
    sig = [F(s) for s in data.meta["sigma"]]
    assert sig == [F(1, 2 ** n) for n in range(1, 7)]
    ok, worst = telescoping_check(data)
    assert ok and 0 < worst <= 1


def test_counterexample_needs_obstruction():
    with pytest.raises(ValueError):
        build_counterexample(heisenberg(1), V=(1, 0), nmax=3)
    with pytest.raises(ValueError):
        build_counterexample(engel(), nmax=0)


def test_probe_obstruction_matches_default():
    assert obstruction_from_probe(superengel().horizontal([0, 0, 1]), samples=400) == (5, -1)
    assert obstruction_from_probe(heisenberg(1).horizontal([1, 0]), samples=400) is None


# -- step-2 extension ----------------------------------------------------------------------------------

def test_gap_solver_hits_target():
    alg = heisenberg(1)
    s = GapSolver(alg)
    c, res, its, ok = s.solve([1, 0], [0, 1], [0.5, 0.5, 0.2])
    assert ok and res < 1e-12
    assert np.allclose(s.endpoint(c), [0.5, 0.5, 0.2], atol=1e-12)


def test_extension_round_trip_on_cantor_set():
    c = smooth_heisenberg_curve()
    data = sample_curve_data(c, cantor_points())
    ext = extend_step2(data, tol=1e-12)
    assert ext.ok
    assert ext.f_residual <= 1e-6
    assert ext.x_residual == 0.0
    assert ext.knot_residuals[0] <= 1e-6
    assert ext.curve.is_c1_h


def test_extension_refuses_higher_step_unless_forced():
    data = build_counterexample(engel(), nmax=3)
    with pytest.raises(ValueError):
        extend_step2(data)


def test_forced_extension_reports_true_residual():
    alg = engel()
    K = [F(0), F(1, 2), F(1)]
    X = (F(1), F(0))
    f = [point(alg, [t, 0, 0, 0]) for t in K]
    ext = extend_step2(WhitneyData(K, f, [X] * 3), force=True)
    assert all("true_residual" in g for g in ext.gaps)
    assert ext.ok


def test_extension_with_free_step2():
    alg = parse_preset("free:3:2")
    c = HorizontalCurve(identity(alg), polynomial_control([[1, 0, 0], [0, 1, 0], [0, 0, 1]]))
    data = sample_curve_data(c, [0, 0.2, 0.5, 0.9, 1.0])
    ext = extend_step2(data, tol=1e-12)
    assert ext.ok and ext.f_residual < 1e-5


# -- Lusin ----------------------------------------------------------------------------------------------

def test_lusin_on_corner_curve():
    alg = heisenberg(1)
    c = HorizontalCurve(identity(alg), piecewise_constant([[1, 0], [0, 1]], [F(1, 2), F(1, 2)]))
    res = lusin_demo(c, 0.1)
    assert res.complement_measure <= 0.1 + 1e-12
    assert np.allclose(res.K, [[0, 0.45], [0.55, 1]])
    assert res.agreement < 1e-6
    assert res.extension.control.continuity() in ("C0", "C1")


def test_lusin_on_smooth_curve_is_identity():
    c = smooth_heisenberg_curve()
    res = lusin_demo(c, 0.1)
    assert res.complement_measure == 0 and res.extension is c


def test_lusin_rejects_step3():
    with pytest.raises(ValueError):
        lusin_demo(HorizontalCurve(identity(engel()), piecewise_constant([[1, 0]], [1])), 0.1)
