"""Independent oracles and random samplers shared by unit and acceptance tests."""
import itertools
import math
from fractions import Fraction

from abctorus.affine_actions import AbcAffineAction, obstruction_key
from abctorus.exact_linalg import IntMatrix2, QuadMatrix


def random_sl2(rng, lo=-20, hi=20, anosov=True):
    while True:
        a, b, c = (int(v) for v in rng.integers(lo, hi + 1, size=3))
        if b == 0:
            continue
        # solve a*d - b*c = 1 for integer d when possible
        if (1 + b * c) % a if a else True:
            continue
        d = (1 + b * c) // a
        if not lo <= d <= hi:
            continue
        M = IntMatrix2([[a, b], [c, d]])
        if not anosov or M.is_anosov:
            return M


def random_rational_matrix(rng, n=2, m=2):
    return QuadMatrix([[Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 7))) for _ in range(m)]
                       for _ in range(n)])


def random_rational_action(rng):
    """A rational-rho action: either A = B with rational kernel coefficients, or a trace-unequal pair."""
    if rng.random() < 0.5:
        A = [[2, 1], [1, 1]] if rng.random() < 0.5 else [[3, 1], [2, 1]]
        c1 = Fraction(int(rng.integers(-6, 7)), int(rng.integers(1, 9)))
        c2 = Fraction(int(rng.integers(-6, 7)), int(rng.integers(1, 9)))
        C = [[int(v) for v in rng.integers(-2, 3, 2)] for _ in range(2)]
        Ci = IntMatrix2(C).to_quad()
        C = (IntMatrix2(A).to_quad() @ Ci - Ci @ IntMatrix2(A).to_quad()).rational_rows()
        return AbcAffineAction.from_classification(A, A, [[int(x) for x in r] for r in C], c1, c2)
    A, B = [[2, 1], [1, 1]], [[1, 2], [1, 3]]
    C = [[int(v) for v in rng.integers(-3, 4, 2)] for _ in range(2)]
    return AbcAffineAction.from_classification(A, B, C)


def brute_force(rho):
    """Minimal annihilator and orbit size of {rho p mod Z^2} by direct enumeration."""
    R = rho.rational_rows()
    q = math.lcm(*(x.denominator for row in R for x in row))
    best = None
    for n in itertools.product(range(-q, q + 1), repeat=2):
        if n != (0, 0) and all(((n[0] * R[0][j] + n[1] * R[1][j]).denominator == 1) for j in range(2)):
            if best is None or obstruction_key(n) < obstruction_key(best):
                best = n
    orbit = {tuple((R[i][0] * p[0] + R[i][1] * p[1]) % 1 for i in range(2))
             for p in itertools.product(range(-q, q + 1), repeat=2)}
    return best, len(orbit)
