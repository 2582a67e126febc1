import numpy as np
import pytest

from abctorus.errors import FixedPointPresent, NotMonotone, SmallDivisorOverflow
from abctorus.exact_linalg import QuadNum
from abctorus.leaf_flow import (CircleLift, IntervalMap, LeafAction, affine_leaf_action, circle_conjugacy,
                                conjugated_leaf_action, flow_embedding, flow_property_defect,
                                leaf_translation, leaf_translation_structure, rotation_number,
                                rotation_number_farey, vector_field_eigencheck)

GOLD = (5 ** 0.5 - 1) / 2
CAT = [[2, 1], [1, 1]]
BSYM = [[1, 1], [1, 2]]


def test_rigid_rotation_exact():
    for n in (1, 7, 1000):
        assert rotation_number(CircleLift.rotation(0.3), n)["rho"] == 0.3


def test_rotation_number_against_farey_oracle():
    g = CircleLift.trig(0.4, [(1, 0.05, 0.0)])
    r = rotation_number(g, 100000)
    assert r["error_bound"] == 1e-5
    o = rotation_number_farey(g)
    assert o["lo"] <= r["rho"] + r["error_bound"] and r["rho"] - r["error_bound"] <= o["hi"]
    assert abs(r["rho"] - o["rho"]) < 1e-5


def test_fixed_point_rotation_zero():
    g = CircleLift.trig(0.0, [(1, 0.05, 0.0)])
    assert rotation_number(g, 1000)["rho"] == 0
    assert rotation_number_farey(g)["exact"]


def test_not_monotone():
    with pytest.raises(NotMonotone):
        rotation_number(CircleLift.trig(0.1, [(1, 0.3, 0.0)]), 10)


def test_conjugacy_invariance():
    g = CircleLift.trig(0.37, [(1, 0.04, 0.0)])
    h = CircleLift.trig(0.0, [(2, 0.02, 0.01)])
    conj = CircleLift.from_callable(lambda x: h.inverse_eval(g(h(x))))
    n = 20000
    a, b = rotation_number(g, n), rotation_number(conj, n, check=False)
    assert abs(a["rho"] - b["rho"]) <= a["error_bound"] + b["error_bound"]


def test_sampled_lift():
    x = np.arange(64) / 64
    g = CircleLift.sampled(0.3 + 0.02 * np.sin(2 * np.pi * x))
    assert g.validate()["periodicity_defect"] < 1e-12
    ref = CircleLift.trig(0.3, [(1, 0.02, 0.0)])
    xs = np.linspace(0, 1, 101)
    assert np.abs(g(xs) - ref(xs)).max() < 1e-5
    assert CircleLift.from_json(g.to_json()).nodes.tolist() == g.nodes.tolist()


def test_circle_conjugacy_rotation():
    c = circle_conjugacy(CircleLift.rotation(GOLD), GOLD)
    assert c.defect == 0 and np.abs(c.coeffs).max() == 0


def test_circle_conjugacy_golden():
    fam = circle_conjugacy(CircleLift.trig(GOLD, [(1, 0.05, 0.0)]), GOLD, 256, adjust_parameter=True)
    g = CircleLift.trig(GOLD + fam.sigma, [(1, 0.05, 0.0)])
    c = circle_conjugacy(g, GOLD, 256)
    assert c.defect < 1e-6
    assert abs(rotation_number(g, 100000)["rho"] - GOLD) <= 1e-5


def test_circle_conjugacy_quadratic_target():
    from fractions import Fraction
    rho = QuadNum(Fraction(-1, 2), Fraction(1, 2), 5)
    fam = circle_conjugacy(CircleLift.trig(GOLD, [(1, 0.03, 0.0)]), rho, 128, adjust_parameter=True)
    assert fam.defect < 1e-6


def test_small_divisor():
    with pytest.raises(SmallDivisorOverflow):
        circle_conjugacy(CircleLift.trig(0.5, [(1, 0.05, 0.0)]), 0.5)


@pytest.mark.parametrize("A,B", [(CAT, BSYM), ([[3, 1], [2, 1]], [[1, 1], [2, 3]])])
def test_translation_structure_affine(A, B):
    act, _ = affine_leaf_action(A, B)
    r = leaf_translation_structure(act)
    assert r["check"] and r["distance"] < 1e-12
    assert r["powers_norms"][10] < r["powers_norms"][0]


def test_translation_structure_conjugated():
    act, _ = affine_leaf_action(CAT, BSYM)
    ca, _ = conjugated_leaf_action(act, 0.05)
    assert leaf_translation_structure(ca, n=2000)["check"]


def test_translation_structure_rational():
    act, _ = affine_leaf_action(CAT, BSYM)
    r = leaf_translation_structure(LeafAction(leaf_translation(1.0), leaf_translation(0.4), act.B))
    assert not r["check"]
    assert r["powers_norms"][-1] > 1e6  # B^-n (1, c) grows


def test_translation_structure_fixed_point():
    act, _ = affine_leaf_action(CAT, BSYM)
    f1 = IntervalMap(lambda s: s + 0.1 * np.sin(s))
    with pytest.raises(FixedPointPresent):
        leaf_translation_structure(LeafAction(f1, leaf_translation(0.3), act.B))


def test_flow_affine():
    act, info = affine_leaf_action(CAT, BSYM)
    fl = flow_embedding(act)
    rep = fl.report
    assert max(rep.values()) < 1e-13
    S = np.linspace(-3, 3, 17)
    assert np.array_equal(fl(0.0, S), S) or np.abs(fl(0.0, S) - S).max() < 1e-15
    assert flow_property_defect(fl) < 1e-7
    assert rep["renormalization"] < 1e-5
    # X is a constant multiple of u_A: constant in the leaf coordinate
    X = fl.vector_field(S, 1e-4)
    assert np.ptp(X) < 1e-9 and abs(X[0] - info["translations"][0]) < 1e-9
    assert vector_field_eigencheck(fl, dt=1e-4)["max_residual"] < 1e-8


def test_flow_conjugated():
    act, _ = affine_leaf_action(CAT, BSYM)
    ca, ch = conjugated_leaf_action(act, 0.05)
    fl = flow_embedding(ca)
    assert fl.report["g1_vs_f1"] < 1e-5 and fl.report["gc_vs_f2"] < 1e-5
    assert fl.report["renormalization"] < 1e-5
    assert flow_property_defect(fl) < 1e-7
    # exact flow of the model: phi^-1(phi(s) + t a1)
    a1 = float(act.f1(np.array([0.0]))[0])
    S = np.linspace(-2, 2, 9)
    for t in (-0.7, 0.3, 1.9):
        assert np.abs(fl(t, S) - ch.phi_inv(ch.phi(S) + t * a1)).max() < 1e-5


def test_vector_field_second_order():
    act, _ = affine_leaf_action(CAT, BSYM)
    ca, _ = conjugated_leaf_action(act, 0.05)
    fl = flow_embedding(ca)
    r1 = vector_field_eigencheck(fl, dt=2e-4)["max_residual"]
    r2 = vector_field_eigencheck(fl, dt=1e-4)["max_residual"]
    assert r2 < 1e-4
    assert 3.0 < r1 / r2 < 5.0
