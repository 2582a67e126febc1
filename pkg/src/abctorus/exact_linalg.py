"""Exact linear algebra over Z, Q and real quadratic fields Q(sqrt d).

Rationals are ``fractions.Fraction``.  ``QuadNum`` is a + b*sqrt(d) with
rational a, b; ``QuadMatrix`` is a dense matrix of QuadNums sharing one d.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import (
    DiscriminantTooLarge,
    FieldMismatch,
    NoSolution,
    NotAnosov,
    NotUnimodular,
    ParabolicTrace,
    PeriodNotFound,
    RationalInput,
)

Rational = Fraction

_TRIAL_BOUND = 10**6


def as_fraction(x) -> Fraction:
    """Exact conversion; strings like "3/4" and ints accepted, floats refused."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot convert {type(x).__name__} exactly to a rational")


def fraction_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def squarefree_decompose(n: int) -> tuple[int, int]:
    """Return (s, d) with n = s**2 * d and d squarefree, for n >= 1."""
    if n < 1:
        raise ValueError("squarefree_decompose needs n >= 1")
    s, d, m = 1, 1, n
    p = 2
    while p * p <= m and p <= _TRIAL_BOUND:
        e = 0
        while m % p == 0:
            m //= p
            e += 1
        s *= p ** (e // 2)
        if e % 2:
            d *= p
        p += 1 if p == 2 else 2
    if m > 1:
        r = math.isqrt(m)
        if r * r == m:
            s *= r
        elif p * p > m:
            d *= m  # cofactor is prime
        else:
            raise DiscriminantTooLarge("cofactor not resolved by trial division", n=n)
    return s, d


def is_squarefree(d: int) -> bool:
    return d >= 1 and squarefree_decompose(d)[0] == 1


# ---------------------------------------------------------------------------
# Quadratic numbers
# ---------------------------------------------------------------------------

class QuadNum:
    """a + b*sqrt(d).  When b = 0 the value is rational and ``d`` is only a tag."""

    __slots__ = ("a", "b", "d")

    def __init__(self, a=0, b=0, d: int = 1):
        a = as_fraction(a)
        b = as_fraction(b)
        d = int(d)
        if b != 0 and (d < 2 or not is_squarefree(d)):
            raise ValueError(f"d={d} must be squarefree and > 1 for irrational values")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "d", d)

    def __setattr__(self, name, value):
        raise AttributeError("QuadNum is immutable")

    @staticmethod
    def coerce(x) -> "QuadNum":
        if isinstance(x, QuadNum):
            return x
        return QuadNum(as_fraction(x))

    @staticmethod
    def sqrt(n: int) -> "QuadNum":
        """Exact sqrt of a nonnegative integer."""
        s, d = squarefree_decompose(n) if n > 0 else (0, 1)
        return QuadNum(0, s, d) if d > 1 else QuadNum(s)

    # field bookkeeping
    @property
    def is_rational(self) -> bool:
        return self.b == 0

    def _field(self, other: "QuadNum") -> int:
        if self.b != 0 and other.b != 0 and self.d != other.d:
            raise FieldMismatch("operands live in different quadratic fields", d1=self.d, d2=other.d)
        if self.b != 0:
            return self.d
        if other.b != 0:
            return other.d
        return self.d if self.d > 1 else other.d

    def with_field(self, d: int) -> "QuadNum":
        if self.b != 0 and self.d != d:
            raise FieldMismatch("cannot move irrational value to another field", d1=self.d, d2=d)
        return self if self.d == d else QuadNum(self.a, self.b, d)

    # arithmetic
    def __add__(self, other):
        o = _q(other)
        if o is NotImplemented:
            return o
        return QuadNum(self.a + o.a, self.b + o.b, self._field(o))

    __radd__ = __add__

    def __neg__(self):
        return QuadNum(-self.a, -self.b, self.d)

    def __pos__(self):
        return self

    def __sub__(self, other):
        o = _q(other)
        if o is NotImplemented:
            return o
        return QuadNum(self.a - o.a, self.b - o.b, self._field(o))

    def __rsub__(self, other):
        o = _q(other)
        if o is NotImplemented:
            return o
        return o - self

    def __mul__(self, other):
        o = _q(other)
        if o is NotImplemented:
            return o
        d = self._field(o)
        return QuadNum(self.a * o.a + self.b * o.b * d, self.a * o.b + self.b * o.a, d)

    __rmul__ = __mul__

    def conjugate(self) -> "QuadNum":
        return QuadNum(self.a, -self.b, self.d)

    def norm(self) -> Fraction:
        return self.a * self.a - self.b * self.b * self.d

    def inverse(self) -> "QuadNum":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("QuadNum division by zero")
        return QuadNum(self.a / n, -self.b / n, self.d)

    def __truediv__(self, other):
        o = _q(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = _q(other)
        if o is NotImplemented:
            return o
        return o * self.inverse()

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        out, base = QuadNum(1, 0, self.d), self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # ordering
    def sign(self) -> int:
        sa = (self.a > 0) - (self.a < 0)
        sb = (self.b > 0) - (self.b < 0)
        if sb == 0:
            return sa
        if sa == 0 or sa == sb:
            return sb
        # opposite signs: compare a^2 with b^2 d
        cmp = self.a * self.a - self.b * self.b * self.d
        return sa if cmp > 0 else sb

    def __eq__(self, other):
        o = _q(other)
        if o is NotImplemented:
            return NotImplemented
        if self.b == 0 and o.b == 0:
            return self.a == o.a
        return self.a == o.a and self.b == o.b and self.d == o.d

    def __hash__(self):
        if self.b == 0:
            return hash(self.a)
        return hash((self.a, self.b, self.d))

    def __lt__(self, other):
        return (self - _q(other)).sign() < 0

    def __le__(self, other):
        return (self - _q(other)).sign() <= 0

    def __gt__(self, other):
        return (self - _q(other)).sign() > 0

    def __ge__(self, other):
        return (self - _q(other)).sign() >= 0

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __floor__(self) -> int:
        if self.b == 0:
            return math.floor(self.a)
        L = math.lcm(self.a.denominator, self.b.denominator)
        aL = int(self.a * L)
        bL = int(self.b * L)
        r = math.isqrt(bL * bL * self.d)
        root_floor = r if bL > 0 else -r - 1
        return (aL + root_floor) // L

    def __float__(self) -> float:
        if self.b == 0:
            return float(self.a)
        a, bs = float(self.a), float(self.b) * math.sqrt(self.d)
        if a != 0 and (a > 0) != (bs > 0):
            # cancellation: use (a^2 - b^2 d) / (a - b sqrt d)
            return float(self.norm()) / (a - bs)
        return a + bs

    def __repr__(self):
        if self.b == 0:
            return f"QuadNum({self.a})"
        return f"QuadNum({self.a} + {self.b}*sqrt({self.d}))"

    def to_json(self) -> dict:
        return {"a": fraction_str(self.a), "b": fraction_str(self.b), "d": self.d}

    @staticmethod
    def from_json(obj) -> "QuadNum":
        if isinstance(obj, dict):
            return QuadNum(Fraction(obj["a"]), Fraction(obj.get("b", "0")), int(obj.get("d", 1)))
        return QuadNum(as_fraction(obj))


def _q(x):
    if isinstance(x, QuadNum):
        return x
    if isinstance(x, (int, Fraction, np.integer)):
        return QuadNum(x)
    return NotImplemented


# ---------------------------------------------------------------------------
# Integer 2x2 matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntMatrix2:
    rows: tuple

    def __init__(self, rows):
        r = tuple(tuple(int(v) for v in row) for row in rows)
        if len(r) != 2 or any(len(row) != 2 for row in r):
            raise ValueError("IntMatrix2 needs a 2x2 integer array")
        for row, src in zip(r, rows):
            for v, s in zip(row, src):
                if isinstance(s, float) and s != v:
                    raise ValueError("IntMatrix2 entries must be integers")
        object.__setattr__(self, "rows", r)

    @staticmethod
    def identity() -> "IntMatrix2":
        return IntMatrix2([[1, 0], [0, 1]])

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    @property
    def det(self) -> int:
        (a, b), (c, d) = self.rows
        return a * d - b * c

    @property
    def trace(self) -> int:
        return self.rows[0][0] + self.rows[1][1]

    @property
    def is_sl2(self) -> bool:
        return self.det == 1

    @property
    def is_anosov(self) -> bool:
        return self.det == 1 and abs(self.trace) > 2

    @property
    def T(self) -> "IntMatrix2":
        (a, b), (c, d) = self.rows
        return IntMatrix2([[a, c], [b, d]])

    def __matmul__(self, other):
        if isinstance(other, IntMatrix2):
            (a, b), (c, d) = self.rows
            (e, f), (g, h) = other.rows
            return IntMatrix2([[a * e + b * g, a * f + b * h], [c * e + d * g, c * f + d * h]])
        if isinstance(other, QuadMatrix):
            return self.to_quad(other.d) @ other
        return NotImplemented

    def apply(self, v: Sequence):
        """Exact M v for a length-2 sequence of ints/Fractions/QuadNums."""
        (a, b), (c, d) = self.rows
        return (a * v[0] + b * v[1], c * v[0] + d * v[1])

    def inverse(self) -> "IntMatrix2":
        if abs(self.det) != 1:
            raise NotUnimodular("inverse over Z needs det = +-1", det=self.det)
        (a, b), (c, d) = self.rows
        s = self.det
        return IntMatrix2([[d * s, -b * s], [-c * s, a * s]])

    def __pow__(self, k: int) -> "IntMatrix2":
        base = self if k >= 0 else self.inverse()
        k = abs(k)
        out = IntMatrix2.identity()
        while k:
            if k & 1:
                out = out @ base
            base = base @ base
            k >>= 1
        return out

    def to_numpy(self, dtype=float) -> np.ndarray:
        return np.array(self.rows, dtype=dtype)

    def to_quad(self, d: int = 1) -> "QuadMatrix":
        return QuadMatrix([[QuadNum(v, 0, d) for v in row] for row in self.rows])

    def tolist(self):
        return [list(r) for r in self.rows]

    def __repr__(self):
        return f"IntMatrix2({self.tolist()})"


def as_int_matrix(M) -> IntMatrix2:
    if isinstance(M, IntMatrix2):
        return M
    return IntMatrix2(np.asarray(M).tolist() if isinstance(M, np.ndarray) else M)


# ---------------------------------------------------------------------------
# Quadratic-field matrices
# ---------------------------------------------------------------------------

class QuadMatrix:
    """Dense matrix with QuadNum entries in a common field Q(sqrt d)."""

    __slots__ = ("entries", "d")

    def __init__(self, rows):
        ent = tuple(tuple(QuadNum.coerce(v) for v in row) for row in rows)
        if not ent or any(len(r) != len(ent[0]) for r in ent):
            raise ValueError("QuadMatrix rows must be nonempty and equal length")
        d = 1
        for row in ent:
            for v in row:
                if v.b != 0:
                    if d > 1 and v.d != d:
                        raise FieldMismatch("entries from different fields", d1=d, d2=v.d)
                    d = v.d
        if d == 1:
            d = max((v.d for row in ent for v in row), default=1)
        object.__setattr__(self, "entries", tuple(tuple(v.with_field(d) if v.b == 0 else v for v in row) for row in ent))
        object.__setattr__(self, "d", d)

    def __setattr__(self, name, value):
        raise AttributeError("QuadMatrix is immutable")

    @staticmethod
    def zeros(m: int, n: int, d: int = 1) -> "QuadMatrix":
        return QuadMatrix([[QuadNum(0, 0, d)] * n for _ in range(m)])

    @staticmethod
    def identity(n: int, d: int = 1) -> "QuadMatrix":
        return QuadMatrix([[QuadNum(int(i == j), 0, d) for j in range(n)] for i in range(n)])

    @staticmethod
    def coerce(M) -> "QuadMatrix":
        if isinstance(M, QuadMatrix):
            return M
        if isinstance(M, IntMatrix2):
            return M.to_quad()
        return QuadMatrix(M)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.entries), len(self.entries[0])

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    @property
    def is_rational(self) -> bool:
        return all(v.b == 0 for row in self.entries for v in row)

    def rational_rows(self) -> list[list[Fraction]]:
        if not self.is_rational:
            raise ValueError("matrix has irrational entries")
        return [[v.a for v in row] for row in self.entries]

    def parts(self) -> tuple[list[list[Fraction]], list[list[Fraction]]]:
        """Split into rational matrices (R, S) with M = R + S*sqrt(d)."""
        return ([[v.a for v in row] for row in self.entries],
                [[v.b for v in row] for row in self.entries])

    def __eq__(self, other):
        if isinstance(other, IntMatrix2):
            other = other.to_quad()
        if not isinstance(other, QuadMatrix):
            return NotImplemented
        return self.shape == other.shape and all(
            x == y for r1, r2 in zip(self.entries, other.entries) for x, y in zip(r1, r2))

    def __hash__(self):
        return hash(self.entries)

    def _binop(self, other, op):
        other = QuadMatrix.coerce(other)
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        return QuadMatrix([[op(x, y) for x, y in zip(r1, r2)] for r1, r2 in zip(self.entries, other.entries)])

    def __add__(self, other):
        return self._binop(other, lambda x, y: x + y)

    def __sub__(self, other):
        return self._binop(other, lambda x, y: x - y)

    def __neg__(self):
        return QuadMatrix([[-v for v in row] for row in self.entries])

    def scale(self, c) -> "QuadMatrix":
        c = QuadNum.coerce(c)
        return QuadMatrix([[c * v for v in row] for row in self.entries])

    def __mul__(self, c):
        if isinstance(c, (QuadNum, int, Fraction)):
            return self.scale(c)
        return NotImplemented

    __rmul__ = __mul__

    def __matmul__(self, other):
        other = QuadMatrix.coerce(other)
        m, k = self.shape
        k2, n = other.shape
        if k != k2:
            raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
        if self.d > 1 and other.d > 1 and self.d != other.d and not (self.is_rational or other.is_rational):
            raise FieldMismatch("matrix fields differ", d1=self.d, d2=other.d)
        if self.is_rational and other.is_rational:
            # plain Fraction arithmetic avoids per-entry field bookkeeping
            P, Q, d = self.rational_rows(), other.rational_rows(), max(self.d, other.d)
            cols = list(zip(*Q))
            return QuadMatrix([[QuadNum(sum(x * y for x, y in zip(r, col)), 0, d) for col in cols] for r in P])
        out = []
        for i in range(m):
            row = []
            for j in range(n):
                s = QuadNum(0)
                for t in range(k):
                    s = s + self.entries[i][t] * other.entries[t][j]
                row.append(s)
            out.append(row)
        return QuadMatrix(out)

    def __rmatmul__(self, other):
        return QuadMatrix.coerce(other) @ self

    @property
    def T(self) -> "QuadMatrix":
        return QuadMatrix([list(col) for col in zip(*self.entries)])

    def det(self) -> QuadNum:
        m, n = self.shape
        if m != n:
            raise ValueError("det of non-square matrix")
        a = [list(r) for r in self.entries]
        det = QuadNum(1, 0, self.d)
        for c in range(n):
            p = next((r for r in range(c, n) if a[r][c] != 0), None)
            if p is None:
                return QuadNum(0, 0, self.d)
            if p != c:
                a[c], a[p] = a[p], a[c]
                det = -det
            det = det * a[c][c]
            inv = a[c][c].inverse()
            for r in range(c + 1, n):
                f = a[r][c] * inv
                if f != 0:
                    a[r] = [x - f * y for x, y in zip(a[r], a[c])]
        return det

    def inverse(self) -> "QuadMatrix":
        """Gauss-Jordan inverse in the field."""
        m, n = self.shape
        if m != n:
            raise ValueError("inverse of non-square matrix")
        if self.is_rational:
            return self._rational_inverse()
        one, zero = QuadNum(1, 0, self.d), QuadNum(0, 0, self.d)
        a = [list(r) + [one if i == j else zero for j in range(n)] for i, r in enumerate(self.entries)]
        for c in range(n):
            p = next((r for r in range(c, n) if a[r][c] != 0), None)
            if p is None:
                raise ZeroDivisionError("singular QuadMatrix")
            a[c], a[p] = a[p], a[c]
            inv = a[c][c].inverse()
            a[c] = [x * inv for x in a[c]]
            for r in range(n):
                if r != c and a[r][c] != 0:
                    f = a[r][c]
                    a[r] = [x - f * y for x, y in zip(a[r], a[c])]
        return QuadMatrix([row[n:] for row in a])

    def _rational_inverse(self) -> "QuadMatrix":
        n = self.shape[0]
        a = [r + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(self.rational_rows())]
        for c in range(n):
            p = next((r for r in range(c, n) if a[r][c] != 0), None)
            if p is None:
                raise ZeroDivisionError("singular QuadMatrix")
            a[c], a[p] = a[p], a[c]
            inv = 1 / a[c][c]
            a[c] = [x * inv for x in a[c]]
            for r in range(n):
                if r != c and a[r][c] != 0:
                    f = a[r][c]
                    a[r] = [x - f * y for x, y in zip(a[r], a[c])]
        return QuadMatrix([[QuadNum(x, 0, self.d) for x in row[n:]] for row in a])

    def to_numpy(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.entries])

    def to_json(self):
        if self.is_rational:
            return [[fraction_str(v.a) for v in row] for row in self.entries]
        return [[v.to_json() for v in row] for row in self.entries]

    @staticmethod
    def from_json(obj) -> "QuadMatrix":
        return QuadMatrix([[QuadNum.from_json(v) for v in row] for row in obj])

    def __repr__(self):
        return f"QuadMatrix({[list(r) for r in self.entries]})"


def kronecker(P, Q) -> QuadMatrix:
    """Block matrix whose (i, j) block is P[i, j] * Q."""
    P, Q = QuadMatrix.coerce(P), QuadMatrix.coerce(Q)
    if P.d > 1 and Q.d > 1 and P.d != Q.d and not (P.is_rational or Q.is_rational):
        raise FieldMismatch("kronecker factors in different fields", d1=P.d, d2=Q.d)
    m, n = P.shape
    p, q = Q.shape
    return QuadMatrix([[P[i // p, j // q] * Q[i % p, j % q] for j in range(n * q)] for i in range(m * p)])


def outer(u: Sequence, w: Sequence) -> QuadMatrix:
    """u w^T, the rank-one matrix written u (x) w."""
    return QuadMatrix([[QuadNum.coerce(x) * QuadNum.coerce(y) for y in w] for x in u])


def vec(X) -> list[QuadNum]:
    """Column-stacking vectorization."""
    X = QuadMatrix.coerce(X)
    m, n = X.shape
    return [X[i, j] for j in range(n) for i in range(m)]


def unvec(v: Sequence, m: int, n: int) -> QuadMatrix:
    return QuadMatrix([[v[j * m + i] for j in range(n)] for i in range(m)])


# ---------------------------------------------------------------------------
# Eigendata
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EigenData:
    lam: QuadNum
    lam_inv: QuadNum
    u: tuple
    u_inv: tuple

    @property
    def d(self) -> int:
        return self.lam.d


def eigen_data(M) -> EigenData:
    """Exact eigenpairs of an Anosov matrix; ``u`` belongs to the expanding eigenvalue."""
    M = as_int_matrix(M)
    if M.det != 1:
        raise NotUnimodular("determinant must be 1", det=M.det)
    t = M.trace
    if abs(t) <= 2:
        raise NotAnosov("|trace| <= 2", trace=t)
    s, d = squarefree_decompose(t * t - 4)
    sg = 1 if t > 0 else -1
    lam = QuadNum(Fraction(t, 2), Fraction(sg * s, 2), d)
    lam_inv = lam.conjugate()
    a, b = M[0, 0], M[0, 1]
    # b != 0 for Anosov matrices (otherwise the trace would be +-2)
    u = (QuadNum(1, 0, d), (lam - a) / b)
    u_inv = (QuadNum(1, 0, d), (lam_inv - a) / b)
    return EigenData(lam, lam_inv, u, u_inv)


# ---------------------------------------------------------------------------
# Fraction-free elimination and the Sylvester equation
# ---------------------------------------------------------------------------

def bareiss_echelon(rows: list[list[int]], n_coef: int) -> tuple[list[list[int]], list[int]]:
    """Fraction-free row echelon form on the first ``n_coef`` columns.

    Returns the reduced integer rows and the pivot columns.
    """
    a = [list(map(int, r)) for r in rows]
    m = len(a)
    pivots: list[int] = []
    prev = 1
    r = 0
    for c in range(n_coef):
        p = next((i for i in range(r, m) if a[i][c] != 0), None)
        if p is None:
            continue
        a[r], a[p] = a[p], a[r]
        for i in range(r + 1, m):
            a[i] = [(a[r][c] * a[i][j] - a[i][c] * a[r][j]) // prev for j in range(len(a[i]))]
        prev = a[r][c]
        pivots.append(c)
        r += 1
        if r == m:
            break
    return a, pivots


def solve_rational_system(K: list[list[Fraction]], rhs: list[Fraction]) -> tuple[list[Fraction], int]:
    """Canonical particular solution of K x = rhs (free variables set to 0).

    Returns (x, rank).  Raises NoSolution with the offending echelon row.
    """
    m, n = len(K), len(K[0])
    L = 1
    for row, b in zip(K, rhs):
        for v in list(row) + [b]:
            L = math.lcm(L, Fraction(v).denominator)
    aug = [[int(Fraction(v) * L) for v in row] + [int(Fraction(b) * L)] for row, b in zip(K, rhs)]
    ech, piv = bareiss_echelon(aug, n)
    rank = len(piv)
    for i in range(rank, m):
        if ech[i][n] != 0:
            raise NoSolution("inconsistent linear system", certificate_row=ech[i])
    x = [Fraction(0)] * n
    for i in reversed(range(rank)):
        c = piv[i]
        s = Fraction(ech[i][n]) - sum(Fraction(ech[i][j]) * x[j] for j in range(c + 1, n))
        x[c] = s / ech[i][c]
    return x, rank


@dataclass(frozen=True)
class SolutionSpace:
    particular: QuadMatrix
    kernel_basis: tuple
    rank: int
    metadata: dict = field(default_factory=dict)

    @property
    def kernel_dim(self) -> int:
        return len(self.kernel_basis)


def sylvester_matrix(A, B) -> list[list[int]]:
    """4x4 integer matrix of X -> AX - XB acting on column-stacked vec X."""
    A, B = as_int_matrix(A), as_int_matrix(B)
    I = IntMatrix2.identity()
    left = kronecker(I.to_quad(), A.to_quad())
    right = kronecker(B.T.to_quad(), I.to_quad())
    return [[int((x - y).a) for x, y in zip(r1, r2)] for r1, r2 in zip(left.entries, right.entries)]


def sylvester_kernel_basis(A, B) -> tuple:
    """Basis of {X : AX = XB} for Anosov A, B of equal trace."""
    A, B = as_int_matrix(A), as_int_matrix(B)
    if A == B:
        return (QuadMatrix.identity(2), A.to_quad())
    eA, eBt = eigen_data(A), eigen_data(B.T)
    return (outer(eA.u, eBt.u), outer(eA.u_inv, eBt.u_inv))


def sylvester_solve(A, B, C=None) -> SolutionSpace:
    """All solutions of A X - X B = C as particular + span(kernel_basis)."""
    A, B = as_int_matrix(A), as_int_matrix(B)
    for name, M in (("A", A), ("B", B)):
        if M.det != 1:
            raise NotUnimodular(f"{name} is not in SL2(Z)", det=M.det)
        if abs(M.trace) == 2:
            raise ParabolicTrace(f"|tr {name}| = 2", trace=M.trace)
    if C is None or (isinstance(C, int) and C == 0):
        C = [[0, 0], [0, 0]]
    Cq = QuadMatrix.coerce(C)
    if not Cq.is_rational:
        raise ValueError("C must be rational")
    K = sylvester_matrix(A, B)
    rhs = [v.a for v in vec(Cq)]
    x, rank = solve_rational_system([[Fraction(v) for v in row] for row in K], rhs)
    particular = unvec([QuadNum(v) for v in x], 2, 2)
    if A.trace != B.trace:
        basis: tuple = ()
    else:
        if abs(A.trace) < 2:
            raise NotAnosov("equal elliptic traces have no real eigenvector basis", trace=A.trace)
        basis = sylvester_kernel_basis(A, B)
    if 4 - rank != len(basis):
        raise AssertionError(f"rank {rank} inconsistent with kernel size {len(basis)}")
    meta = {"particular_choice": "fraction-free elimination, free variables set to 0",
            "vectorization": "column stacking: (I kron A - B^T kron I) vec X = vec C"}
    return SolutionSpace(particular, basis, rank, meta)


# ---------------------------------------------------------------------------
# Continued fractions of quadratic irrationals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CFExpansion:
    partial_quotients: tuple
    period: tuple  # (preperiod length, period length)
    convergents: tuple  # Fractions p_k/q_k
    diophantine_gamma: Fraction

    @property
    def max_quotient(self) -> int:
        pre, per = self.period
        return max(self.partial_quotients[1:pre + per] or self.partial_quotients[:1])

    def expand(self, k: int) -> list[int]:
        """First k partial quotients, unrolling the periodic tail."""
        pre, per = self.period
        q = self.partial_quotients
        return [q[i] if i < pre else q[pre + (i - pre) % per] for i in range(k)]


def continued_fraction_quadratic(q: QuadNum, max_terms: int = 1000) -> CFExpansion:
    """Exact, eventually periodic continued fraction of an irrational quadratic number."""
    q = QuadNum.coerce(q)
    if q.b == 0:
        raise RationalInput("continued fraction needs an irrational input", value=str(q.a))
    L = math.lcm(q.a.denominator, q.b.denominator)
    sg = 1 if q.b > 0 else -1
    P = sg * int(q.a * L)
    Q = sg * L
    D = int(q.b * L) ** 2 * q.d
    if (D - P * P) % Q:
        P, D, Q = P * abs(Q), D * Q * Q, Q * abs(Q)
    m = math.isqrt(D)
    seen: dict = {}
    quotients: list[int] = []
    for k in range(max_terms):
        state = (P, Q)
        if state in seen:
            pre = seen[state]
            per = k - pre
            break
        seen[state] = k
        a = (P + m) // Q if Q > 0 else (P + m + 1) // Q
        quotients.append(a)
        P = a * Q - P
        Q = (D - P * P) // Q
    else:
        raise PeriodNotFound("no repeated state within max_terms", max_terms=max_terms)
    conv = []
    p0, q0, p1, q1 = 1, 0, quotients[0], 1
    conv.append(Fraction(p1, q1))
    for a in quotients[1:]:
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        conv.append(Fraction(p1, q1))
    amax = max(quotients[1:] or quotients)
    return CFExpansion(tuple(quotients), (pre, per), tuple(conv), Fraction(1, amax + 2))


def parse_rational_matrix(obj) -> list[list[Fraction]]:
    """Accept nested lists of ints or "p/q" strings."""
    return [[as_fraction(v) for v in row] for row in obj]


def rational_matrix_json(M) -> list[list[str]]:
    M = QuadMatrix.coerce(M)
    return [[fraction_str(v) for v in row] for row in M.rational_rows()]
