from fractions import Fraction

import numpy as np
import pytest

from abctorus.affine_actions import (TRACE_DIFFER, TRACE_EQUAL_GENERIC, TRACE_EQUAL_SAME, AbcAffineAction,
                                     AbcGroup, act, annihilates, annihilator_lattice_basis, classify,
                                     eigen_kernel_basis, faithfulness_test)
from abctorus.errors import Inconsistent, IrrationalCoefficients, NotAnosov
from abctorus.exact_linalg import IntMatrix2, QuadMatrix, QuadNum
from oracles import brute_force, random_rational_action

CAT = [[2, 1], [1, 1]]


def test_classify_same():
    res = classify(CAT, CAT, 0)
    assert res.case == TRACE_EQUAL_SAME
    assert res.kernel_basis == (QuadMatrix.identity(2), IntMatrix2(CAT).to_quad())


def test_classify_trace_differ():
    res = classify(CAT, [[1, 2], [1, 3]], 0)
    assert res.case == TRACE_DIFFER and res.kernel_dim == 0
    assert res.rho_particular == QuadMatrix.zeros(2, 2)


def test_classify_generic():
    A, B = [[2, 1], [3, 2]], [[1, 2], [1, 3]]
    res = classify(A, B, 0)
    assert res.case == TRACE_EQUAL_GENERIC
    assert res.kernel_basis == eigen_kernel_basis(A, B)


def test_classify_errors():
    with pytest.raises(Inconsistent):
        classify(CAT, CAT, [[1, 0], [0, 0]])
    with pytest.raises(NotAnosov):
        classify([[1, 1], [0, 1]], CAT, 0)


def test_action_invariant_for_any_coefficients():
    rng = np.random.default_rng(0)
    A, B = [[2, 1], [3, 2]], [[1, 2], [1, 3]]
    for _ in range(10):
        c1 = QuadNum(Fraction(int(rng.integers(-5, 6)), 3), Fraction(int(rng.integers(-3, 4)), 2), 3)
        a = AbcAffineAction.from_classification(A, B, 0, c1, Fraction(int(rng.integers(-4, 5)), 7))
        lhs = a.A.to_quad() @ a.rho - a.rho @ a.B.to_quad()
        assert lhs == QuadMatrix.zeros(2, 2)


@pytest.mark.parametrize("c1, basis, faithful, obstruction", [
    (Fraction(1, 2), "auto", False, (2, 0)),
    (1, "auto", False, (1, 0)),
    (1, "eigen", True, None),
])
def test_faithfulness_examples(c1, basis, faithful, obstruction):
    a = AbcAffineAction.from_classification(CAT, CAT, 0, c1, 0, basis=basis)
    rep = faithfulness_test(a)
    assert rep.faithful is faithful
    assert rep.obstruction == obstruction
    assert rep.a_infinite_order


def test_faithfulness_conjugate_pair_cancels_irrational_part():
    # N1 + N2 is twice the rational part of N1, so the orbit of rho is finite
    a = AbcAffineAction.from_classification(CAT, CAT, 0, 1, 1, basis="eigen")
    rep = faithfulness_test(a)
    assert rep.irrational_rank == 0
    assert not rep.faithful and annihilates(rep.obstruction, a.rho)
    b = AbcAffineAction.from_classification(CAT, CAT, 0, 1, -1, basis="eigen")
    assert faithfulness_test(b).faithful


def test_faithfulness_float_refused():
    a = AbcAffineAction.from_classification(CAT, CAT, 0, 0.5, 0.0, basis="eigen")
    with pytest.raises(IrrationalCoefficients):
        faithfulness_test(a)


def test_faithfulness_matches_brute_force_oracle():
    rng = np.random.default_rng(11)
    for _ in range(50):
        a = random_rational_action(rng)
        assert a.rho.is_rational
        rep = faithfulness_test(a)
        best, orbit_size = brute_force(a.rho)
        assert rep.faithful is False  # finite orbit
        assert rep.obstruction == best
        b1, b2 = annihilator_lattice_basis(a.rho.rational_rows())
        assert abs(b1[0] * b2[1] - b1[1] * b2[0]) == orbit_size


def test_act_generators():
    a = AbcAffineAction.from_classification(CAT, CAT, 0, Fraction(1, 3), Fraction(1, 5))
    T = act(a, (0, (1, 0)))
    assert T.M == IntMatrix2.identity() and T.t == (a.rho[0, 0], a.rho[1, 0])
    L = act(a, (1, (0, 0)))
    assert L.M == IntMatrix2(CAT) and L.t == (0, 0)


def _random_element(rng):
    return int(rng.integers(-2, 3)), tuple(int(x) for x in rng.integers(-3, 4, 2))


@pytest.mark.parametrize("A, B, basis", [(CAT, CAT, "eigen"), ([[2, 1], [3, 2]], [[1, 2], [1, 3]], "auto")])
def test_act_group_law(A, B, basis):
    rng = np.random.default_rng(5)
    a = AbcAffineAction.from_classification(A, B, 0, QuadNum(Fraction(1, 2), 0), Fraction(2, 3), basis=basis)
    G = AbcGroup(a.B)
    for _ in range(100):
        v = tuple(int(x) for x in rng.integers(-9, 10, 2))
        lhs = act(a, (1, (0, 0))) @ act(a, (0, v)) @ act(a, (1, (0, 0))).inverse()
        assert lhs.equal_mod_integers(act(a, (0, a.B.apply(v))))
    for _ in range(100):
        g = [_random_element(rng) for _ in range(int(rng.integers(1, 5)))]
        h = [_random_element(rng) for _ in range(int(rng.integers(1, 5)))]
        word = g + h
        prod, img = (0, (0, 0)), act(a, (0, (0, 0)))
        for e in word:
            prod = G.mul(prod, e)
            img = img @ act(a, e)
        assert img.equal_mod_integers(act(a, prod))
        assert act(a, G.mul(prod, G.inv(prod))).equal_mod_integers(act(a, (0, (0, 0))))


def test_action_json_roundtrip():
    a = AbcAffineAction.from_classification([[2, 1], [3, 2]], [[1, 2], [1, 3]], 0, Fraction(1, 3), Fraction(-2, 5))
    b = AbcAffineAction.from_json(a.to_json())
    assert b.rho == a.rho
