import random
from fractions import Fraction

import numpy as np
import pytest

from carnot.lie_core import PRESETS, engel, heisenberg, parse_preset, superengel
from carnot.rigidity import (abnormal_family, adjoint_equation_defect, goh_form, goh_identically_zero,
                             perp_basis, pliable_subgroup_certificate, q_form, q_min_eig, rigidity_test,
                             time_coefficients)

F = Fraction


def nonzero_horizontal(alg, rng):
    while True:
        X = alg.random_vector(rng, horizontal=True)
        if not X.is_zero():
            return X


# -- abnormal family ------------------------------------------------------------------------

def test_abnormal_family_solves_adjoint_equation(preset):
    rng = random.Random(1)
    for _ in range(5):
        X = nonzero_horizontal(preset, rng)
        fam = abnormal_family(X)
        for p in fam.basis:
            assert adjoint_equation_defect(p, X) == 0
            # annihilates the horizontal layer at every time
            for c in time_coefficients(p, X):
                assert all(c.coeffs[i] == 0 for i in range(preset.m))


def test_family_dimensions():
    assert abnormal_family(engel().horizontal([1, 0])).dim == 1
    assert abnormal_family(heisenberg(1).horizontal([1, 0])).dim == 0
    assert abnormal_family(heisenberg(2).horizontal([1, 2, 0, -1])).dim == 0
    # along Y the Engel curve is regular
    assert abnormal_family(engel().horizontal([0, 1])).dim == 0


def test_engel_family_is_the_top_covector():
    alg = engel()
    fam = abnormal_family(alg.horizontal([1, 0]))
    (p,) = fam.basis
    assert [c != 0 for c in p.coeffs] == [False, False, False, True]


def test_time_coefficients_engel_along_y():
    alg = engel()
    cs = time_coefficients(alg.dual(3), alg.horizontal([0, 1]))
    # p(t) = W2* + t W1* - t^2/2 X*
    assert [list(c.coeffs) for c in cs] == [[0, 0, 0, 1], [0, 0, 1, 0], [F(-1, 2), 0, 0, 0]]


# -- Goh and second-order forms ------------------------------------------------------------

def test_goh_form_is_antisymmetric(preset):
    rng = random.Random(2)
    p = preset.covector([F(rng.randint(-3, 3)) for _ in range(preset.dim)])
    G = goh_form(p)
    for i in range(preset.m):
        for j in range(preset.m):
            assert G[i][j] == -G[j][i]


def test_goh_identically_zero_on_engel_top():
    alg = engel()
    assert goh_identically_zero(alg.dual(3), alg.horizontal([1, 0]))
    assert not goh_identically_zero(alg.dual(2), alg.horizontal([1, 0]))


def test_perp_basis_is_orthogonal():
    alg = superengel()
    X = alg.horizontal([1, 2, -1])
    basis = perp_basis(X)
    assert len(basis) == 2
    x = list(X.horizontal_part)
    for b in basis:
        assert alg.inner(b, x) == 0
    assert alg.inner(basis[0], basis[1]) == 0


def test_q_form_symmetric_and_known_values():
    alg = engel()
    X = alg.horizontal([1, 0])
    Q = q_form(alg.dual(3), X)
    assert Q == [[F(1)]]  # p[Y,[X,Y]] = 1 on the Engel top covector
    assert q_min_eig(alg.dual(3), X) == pytest.approx(1.0)
    sup = superengel()
    Z = sup.horizontal([0, 0, 1])
    Qs = q_form(sup.dual(5), Z)
    assert Qs == [list(r) for r in zip(*Qs)]


def test_superengel_witness_q_of_y_is_minus_one():
    alg = superengel()
    Z = alg.horizontal([0, 0, 1])
    p = alg.dual(5)
    y = [F(0), F(1), F(0)] + [F(0)] * 3
    xy = alg.bracket_coeffs(Z.coeffs, y)
    assert p.pair(alg.bracket_coeffs(y, xy)) == -1


# -- verdicts ------------------------------------------------------------------------------------

@pytest.mark.parametrize("name,vec,tag,reason", [
    ("engel", [1, 0], "Rigid", "goh_and_q_positive"),
    ("engel", [0, 1], "NotRigid", "no_abnormal_lift"),
    ("engel", [0, 0], "NotRigid", "zero_vector_pliable"),
    ("superengel", [0, 0, 1], "NotRigid", "pliable_in_horizontal_subgroup"),
    ("heisenberg:1", [1, 0], "NotRigid", "no_abnormal_lift"),
    ("goursat:5", [1, 0], "Rigid", "goh_and_q_positive"),
    ("freequot:3", [1, 0, 0], "NotRigid", None),
])
def test_verdicts(name, vec, tag, reason):
    alg = parse_preset(name)
    v = rigidity_test(alg.horizontal(vec))
    assert v.tag == tag
    if reason:
        assert v.reason == reason


def test_superengel_witness_reported():
    alg = superengel()
    v = rigidity_test(alg.horizontal([0, 0, 1]))
    assert v.witness is not None and v.q_margin == pytest.approx(-1.0)
    assert v.witness.coeffs[5] != 0
    js = v.to_json()
    assert js["tag"] == "NotRigid" and js["witness"]["support"]


def test_pliable_subgroup_certificate():
    alg = superengel()
    S = pliable_subgroup_certificate(alg.horizontal([0, 0, 1]))
    assert S is not None and len(S) == 2
    assert pliable_subgroup_certificate(engel().horizontal([1, 0])) is None


def test_rigidity_rejects_vertical_vector():
    alg = engel()
    with pytest.raises(ValueError):
        rigidity_test(alg.basis_vector(2))


def test_verdict_is_seed_independent_for_definite_cases():
    alg = engel()
    tags = {rigidity_test(alg.horizontal([1, 0]), seed=s).tag for s in range(3)}
    assert tags == {"Rigid"}


def test_rigid_implies_family_nonempty(preset):
    rng = random.Random(4)
    for _ in range(10):
        X = nonzero_horizontal(preset, rng)
        v = rigidity_test(X, samples=20)
        if v.tag == "Rigid":
            assert v.family_dim >= 1 and v.goh_dim >= 1 and v.q_margin > 0


@pytest.mark.parametrize("name", ["engel", "superengel", "goursat:5", "freequot:3", "heisenberg:2"])
def test_verdicts_invariant_under_generator_reordering(name):
    from carnot.lie_core import permute_generators
    from carnot.pliability import pliability_test
    alg = parse_preset(name)
    perm = list(reversed(range(alg.m)))
    new, _ = permute_generators(alg, perm)
    rng = random.Random(6)
    vecs = [alg.horizontal([int(i == j) for j in range(alg.m)]) for i in range(alg.m)]
    vecs += [alg.random_vector(rng, horizontal=True) for _ in range(4)]
    for X in vecs:
        h = X.horizontal_part
        Y = new.horizontal([h[p] for p in perm])
        assert rigidity_test(X, samples=40).tag == rigidity_test(Y, samples=40).tag
        assert pliability_test(X).tag == pliability_test(Y).tag
