import math
from fractions import Fraction

import numpy as np
import pytest

from abctorus.errors import (FieldMismatch, NoSolution, NotAnosov, NotUnimodular,
                             ParabolicTrace, PeriodNotFound, RationalInput)
from abctorus.exact_linalg import (IntMatrix2, QuadMatrix, QuadNum, continued_fraction_quadratic,
                                   eigen_data, kronecker, outer, squarefree_decompose,
                                   sylvester_matrix, sylvester_solve)
from oracles import random_rational_matrix, random_sl2

CAT = IntMatrix2([[2, 1], [1, 1]])


def test_quadnum_field_arithmetic():
    s5 = QuadNum(0, 1, 5)
    assert s5 * s5 == 5
    x = QuadNum(Fraction(3, 2), Fraction(1, 2), 5)
    assert x * x.inverse() == 1
    assert x * x.conjugate() == 1
    assert (x - 3) * x == -1  # lambda^2 - 3 lambda + 1 = 0
    with pytest.raises(FieldMismatch):
        s5 + QuadNum(0, 1, 3)
    assert QuadNum(7) + s5 == QuadNum(7, 1, 5)


def test_quadnum_order_and_floor():
    phi = QuadNum(Fraction(1, 2), Fraction(1, 2), 5)
    assert 1 < phi < 2
    assert math.floor(phi) == 1
    assert math.floor(-phi) == -2
    assert math.floor(QuadNum(0, -1, 3)) == -2
    assert QuadNum(2, -1, 3).sign() == 1
    assert QuadNum(1, -1, 3).sign() == -1
    small = QuadNum(Fraction(3, 2), Fraction(-1, 2), 5) ** 30
    assert abs(float(small) - ((3 - math.sqrt(5)) / 2) ** 30) < 1e-25


def test_squarefree():
    assert squarefree_decompose(12) == (2, 3)
    assert squarefree_decompose(5) == (1, 5)
    assert squarefree_decompose(72) == (6, 2)


def test_intmatrix_flags():
    assert CAT.is_sl2 and CAT.is_anosov
    assert not IntMatrix2([[1, 1], [0, 1]]).is_anosov
    assert CAT @ CAT.inverse() == IntMatrix2.identity()
    assert CAT ** -3 == (CAT ** 3).inverse()


@pytest.mark.parametrize("M, lam, u1", [
    ([[2, 1], [1, 1]], QuadNum(Fraction(3, 2), Fraction(1, 2), 5), QuadNum(Fraction(-1, 2), Fraction(1, 2), 5)),
    ([[1, 2], [1, 3]], QuadNum(2, 1, 3), QuadNum(Fraction(1, 2), Fraction(1, 2), 3)),
])
def test_eigen_data_examples(M, lam, u1):
    e = eigen_data(M)
    assert e.lam == lam
    assert e.u == (1, u1)


def test_eigen_data_errors():
    with pytest.raises(NotAnosov):
        eigen_data([[1, 1], [0, 1]])
    with pytest.raises(NotUnimodular):
        eigen_data([[2, 1], [1, 2]])


def test_eigen_relations_random():
    rng = np.random.default_rng(1)
    for _ in range(100):
        M = random_sl2(rng)
        e = eigen_data(M)
        assert M.apply(e.u) == tuple(e.lam * x for x in e.u)
        assert M.apply(e.u_inv) == tuple(e.lam_inv * x for x in e.u_inv)
        assert e.lam * e.lam_inv == 1
        assert abs(e.lam) > 1
        assert e.u[0] == 1


def test_kronecker_identity_block():
    K = kronecker(QuadMatrix.identity(2), CAT.to_quad())
    expected = [[2, 1, 0, 0], [1, 1, 0, 0], [0, 0, 2, 1], [0, 0, 1, 1]]
    assert K == QuadMatrix(expected)


def test_kronecker_eigenvalue_products():
    e = eigen_data(CAT)
    K = kronecker(CAT.to_quad(), CAT.to_quad())
    # eigenvectors u_i (x) u_j  give eigenvalues lam_i lam_j
    pairs = [(e.u, e.lam), (e.u_inv, e.lam_inv)]
    seen = []
    for v, lv in pairs:
        for w, lw in pairs:
            x = kronecker(QuadMatrix([[c] for c in v]), QuadMatrix([[c] for c in w]))
            assert K @ x == x.scale(lv * lw)
            seen.append(lv * lw)
    assert sorted(float(s) for s in seen) == pytest.approx(sorted([float(e.lam ** 2), 1, 1, float(e.lam ** -2)]))


def test_kronecker_laws_random():
    rng = np.random.default_rng(2)
    done = 0
    while done < 100:
        P, Q, R, S = (random_rational_matrix(rng) for _ in range(4))
        assert kronecker(P, Q) @ kronecker(R, S) == kronecker(P @ R, Q @ S)
        if P.det() == 0 or Q.det() == 0:
            continue
        assert kronecker(P, Q).inverse() == kronecker(P.inverse(), Q.inverse())
        done += 1


def test_kronecker_field_mismatch():
    with pytest.raises(FieldMismatch):
        kronecker(QuadMatrix([[QuadNum(0, 1, 5)]]), QuadMatrix([[QuadNum(0, 1, 3)]]))


def test_sylvester_vectorization_matches_direct_expansion():
    rng = np.random.default_rng(3)
    for _ in range(20):
        A, B = random_sl2(rng), random_sl2(rng)
        K = sylvester_matrix(A, B)
        X = random_rational_matrix(rng)
        Y = A.to_quad() @ X - X @ B.to_quad()
        x = [X[0, 0], X[1, 0], X[0, 1], X[1, 1]]
        y = [sum((K[i][j] * x[j] for j in range(4)), QuadNum(0)) for i in range(4)]
        assert y == [Y[0, 0], Y[1, 0], Y[0, 1], Y[1, 1]]


def test_sylvester_same_matrix():
    sol = sylvester_solve(CAT, CAT, 0)
    assert sol.kernel_basis == (QuadMatrix.identity(2), CAT.to_quad())
    assert sol.particular == QuadMatrix.zeros(2, 2)


def test_sylvester_trace_differ_trivial():
    sol = sylvester_solve([[2, 1], [1, 1]], [[1, 2], [1, 3]], 0)
    assert sol.kernel_dim == 0
    assert sol.particular == QuadMatrix.zeros(2, 2)


def test_sylvester_trace_equal_generic():
    A, B = IntMatrix2([[2, 1], [3, 2]]), IntMatrix2([[1, 2], [1, 3]])
    sol = sylvester_solve(A, B, 0)
    eA, eBt = eigen_data(A), eigen_data(B.T)
    assert sol.kernel_basis == (outer(eA.u, eBt.u), outer(eA.u_inv, eBt.u_inv))
    for K in sol.kernel_basis:
        assert A @ K == K @ B.to_quad()


def test_sylvester_random_pairs():
    rng = np.random.default_rng(4)
    for _ in range(200):
        A, B = random_sl2(rng), random_sl2(rng)
        C = QuadMatrix([[int(v) for v in rng.integers(-3, 4, 2)] for _ in range(2)])
        if A.trace == B.trace:
            C = A.to_quad() @ C - C @ B.to_quad()  # guarantees consistency
        sol = sylvester_solve(A, B, C)
        X = sol.particular
        assert X.is_rational
        assert A @ X - X @ B.to_quad() == C
        assert sol.kernel_dim == (2 if A.trace == B.trace else 0)
        for K in sol.kernel_basis:
            assert A @ K == K @ B.to_quad()


def test_sylvester_errors():
    with pytest.raises(ParabolicTrace):
        sylvester_solve([[1, 1], [0, 1]], CAT, 0)
    with pytest.raises(NoSolution):
        sylvester_solve(CAT, CAT, [[1, 0], [0, 0]])


def test_continued_fractions():
    golden = continued_fraction_quadratic(QuadNum(Fraction(1, 2), Fraction(1, 2), 5))
    assert golden.expand(5) == [1] * 5 and golden.period == (0, 1)
    r3 = continued_fraction_quadratic(QuadNum(0, 1, 3))
    assert r3.expand(5) == [1, 1, 2, 1, 2] and r3.period == (1, 2)
    with pytest.raises(RationalInput):
        continued_fraction_quadratic(QuadNum(Fraction(7, 3)))
    with pytest.raises(PeriodNotFound):
        continued_fraction_quadratic(QuadNum(0, 1, 94), max_terms=3)


def test_continued_fraction_convergent_bound():
    rng = np.random.default_rng(5)
    for _ in range(30):
        d = int(rng.choice([2, 3, 5, 6, 7, 10, 11, 13, 94, 151]))
        q = QuadNum(Fraction(int(rng.integers(-5, 6)), int(rng.integers(1, 5))),
                    Fraction(int(rng.choice([-3, -1, 1, 2])), int(rng.integers(1, 4))), d)
        cf = continued_fraction_quadratic(q, max_terms=2000)
        for c in cf.convergents[1:]:
            assert abs(q * c.denominator - c.numerator) < Fraction(1, c.denominator)
        # re-evaluating the expansion recovers the number
        pre, per = cf.period
        assert len(cf.partial_quotients) == pre + per
