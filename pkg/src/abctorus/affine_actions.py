"""Affine actions of Z x|_B Z^2 on the torus.

An action is determined by Phi(B) = A and Phi(e_i) = translation by rho e_i,
subject to A rho - rho B = C with C an integer matrix.  Group elements are
pairs (n, v) standing for v * B^n, so (n, v)(m, w) = (n + m, v + B^n w) and
Phi(n, v) = x -> A^n x + rho v.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import Inconsistent, IrrationalCoefficients, NoSolution, NotAnosov
from .exact_linalg import (IntMatrix2, QuadMatrix, QuadNum, as_int_matrix, eigen_data, outer,
                           sylvester_solve)

TRACE_DIFFER = "TraceDiffer"
TRACE_EQUAL_GENERIC = "TraceEqualGeneric"
TRACE_EQUAL_SAME = "TraceEqualSame"


@dataclass(frozen=True)
class ClassificationResult:
    case: str
    rho_particular: QuadMatrix
    kernel_basis: tuple
    commentary: dict = field(default_factory=dict)

    @property
    def kernel_dim(self) -> int:
        return len(self.kernel_basis)

    def to_json(self) -> dict:
        return {"case": self.case, "kernel_dim": self.kernel_dim,
                "rho_particular": self.rho_particular.to_json(),
                "kernel_basis": [K.to_json() for K in self.kernel_basis],
                "commentary": self.commentary}


def eigen_kernel_basis(A, B) -> tuple:
    """u_A (x) u_{B^t} and u_{A^-1} (x) u_{B^-t}."""
    eA, eBt = eigen_data(A), eigen_data(as_int_matrix(B).T)
    return (outer(eA.u, eBt.u), outer(eA.u_inv, eBt.u_inv))


def classify(A, B, C=0, basis: str = "auto") -> ClassificationResult:
    """Solve A rho - rho B = C completely.

    ``basis`` selects the kernel basis when A = B: "auto" gives {id, A},
    "eigen" gives the eigenvector outer products used for A != B.
    """
    A, B = as_int_matrix(A), as_int_matrix(B)
    for name, M in (("A", A), ("B", B)):
        if not M.is_anosov:
            raise NotAnosov(f"{name} is not Anosov", matrix=M.tolist())
    if isinstance(C, int):
        C = [[C, 0], [0, C]] if C else [[0, 0], [0, 0]]
    Cq = QuadMatrix.coerce(C)
    if not all(x.denominator == 1 for row in Cq.rational_rows() for x in row):
        raise ValueError("C must be an integer matrix")
    try:
        sol = sylvester_solve(A, B, Cq)
    except NoSolution as exc:
        raise Inconsistent("A rho - rho B = C has no solution", **exc.payload) from None
    if A.trace != B.trace:
        case = TRACE_DIFFER
    elif A == B:
        case = TRACE_EQUAL_SAME
    else:
        case = TRACE_EQUAL_GENERIC
    kb = sol.kernel_basis
    if case == TRACE_EQUAL_SAME and basis == "eigen":
        kb = eigen_kernel_basis(A, B)
    commentary = dict(sol.metadata)
    commentary["trace_A"], commentary["trace_B"] = A.trace, B.trace
    if kb:
        commentary["kernel_field_d"] = max(K.d for K in kb)
    return ClassificationResult(case, sol.particular, kb, commentary)


def _is_float(x) -> bool:
    return isinstance(x, (float, np.floating))


@dataclass(frozen=True)
class AbcAffineAction:
    """rho = rho_particular + c1 N1 + c2 N2.

    c1, c2 may be exact (int, Fraction, QuadNum) or floats; float coefficients
    put the action in float mode where only the numeric rotation matrix exists.
    """
    A: IntMatrix2
    B: IntMatrix2
    C: IntMatrix2
    rho_particular: QuadMatrix
    c1: object = 0
    c2: object = 0
    kernel_basis: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "A", as_int_matrix(self.A))
        object.__setattr__(self, "B", as_int_matrix(self.B))
        object.__setattr__(self, "C", as_int_matrix(self.C))
        object.__setattr__(self, "rho_particular", QuadMatrix.coerce(self.rho_particular))
        for name in ("c1", "c2"):
            v = getattr(self, name)
            if not _is_float(v):
                object.__setattr__(self, name, QuadNum.coerce(v))
        if len(self.kernel_basis) < 2 and (self._nonzero(self.c1) or self._nonzero(self.c2)):
            raise ValueError("kernel coefficients given but the kernel is trivial")
        if self.exact:
            lhs = self.A.to_quad() @ self.rho - self.rho @ self.B.to_quad()
            if lhs != self.C.to_quad():
                raise Inconsistent("A rho - rho B != C", residual=(lhs - self.C.to_quad()).to_numpy())
        else:
            r = self.rho_float
            res = self.A.to_numpy() @ r - r @ self.B.to_numpy() - self.C.to_numpy()
            if np.max(np.abs(res)) > 1e-9:
                raise Inconsistent("A rho - rho B != C in float mode", residual=res)

    @staticmethod
    def _nonzero(v) -> bool:
        return bool(v != 0)

    @classmethod
    def from_classification(cls, A, B, C, c1=0, c2=0, basis: str = "auto") -> "AbcAffineAction":
        res = classify(A, B, C, basis=basis)
        return cls(A, B, C if not isinstance(C, int) else [[C, 0], [0, C]], res.rho_particular, c1, c2, res.kernel_basis)

    @property
    def exact(self) -> bool:
        return not (_is_float(self.c1) or _is_float(self.c2))

    @property
    def rho(self) -> QuadMatrix:
        if not self.exact:
            raise IrrationalCoefficients("float coefficients: exact rho unavailable")
        r = self.rho_particular
        if self.kernel_basis:
            r = r + self.kernel_basis[0].scale(self.c1) + self.kernel_basis[1].scale(self.c2)
        return r

    @property
    def rho_float(self) -> np.ndarray:
        r = self.rho_particular.to_numpy()
        if self.kernel_basis:
            r = r + float(self.c1) * self.kernel_basis[0].to_numpy() + float(self.c2) * self.kernel_basis[1].to_numpy()
        return r

    def to_json(self) -> dict:
        def coef(v):
            return float(v) if _is_float(v) else v.to_json()
        return {"A": self.A.tolist(), "B": self.B.tolist(), "C": self.C.tolist(),
                "rho_particular": self.rho_particular.to_json(),
                "c1": coef(self.c1), "c2": coef(self.c2),
                "kernel_basis": [K.to_json() for K in self.kernel_basis]}

    @classmethod
    def from_json(cls, obj: dict) -> "AbcAffineAction":
        def coef(v):
            return float(v) if isinstance(v, float) else QuadNum.from_json(v)
        A, B = obj["A"], obj["B"]
        C = obj.get("C", [[0, 0], [0, 0]])
        if "kernel_basis" in obj:
            kb = tuple(QuadMatrix.from_json(K) for K in obj["kernel_basis"])
        else:
            kb = classify(A, B, C, basis=obj.get("basis", "auto")).kernel_basis
        if "rho_particular" in obj:
            rp = QuadMatrix.from_json(obj["rho_particular"])
        else:
            rp = classify(A, B, C).rho_particular
        return cls(A, B, C, rp, coef(obj.get("c1", "0")), coef(obj.get("c2", "0")), kb)


# ---------------------------------------------------------------------------
# Faithfulness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FaithfulnessReport:
    faithful: bool
    obstruction: tuple | None
    a_infinite_order: bool
    irrational_rank: int
    notes: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"faithful": self.faithful,
                "obstruction": list(self.obstruction) if self.obstruction else None,
                "a_infinite_order": self.a_infinite_order,
                "irrational_rank": self.irrational_rank, "notes": self.notes}


def has_infinite_order(M: IntMatrix2) -> bool:
    """An SL2(Z) matrix has finite order iff |tr| < 2 or M = +-id."""
    if abs(M.trace) < 2:
        return False
    return M not in (IntMatrix2.identity(), IntMatrix2([[-1, 0], [0, -1]]))


def _rank2(S: list[list[Fraction]]) -> int:
    if all(v == 0 for row in S for v in row):
        return 0
    return 2 if S[0][0] * S[1][1] - S[0][1] * S[1][0] != 0 else 1


def _primitive(v: Sequence[Fraction]) -> tuple[int, int]:
    L = math.lcm(*(Fraction(x).denominator for x in v))
    ints = [int(Fraction(x) * L) for x in v]
    g = math.gcd(*ints)
    ints = [x // g for x in ints]
    if ints[0] < 0 or (ints[0] == 0 and ints[1] < 0):
        ints = [-x for x in ints]
    return tuple(ints)


def obstruction_key(n: Sequence[int]):
    """Canonical order among annihilators: max-norm, then l1, then larger coordinates first."""
    return (max(abs(n[0]), abs(n[1])), abs(n[0]) + abs(n[1]), -n[0], -n[1])


def _solve_linear_congruence(a: int, b: int, m: int):
    """Solutions of a x = b (mod m) as (x0, modulus) or None."""
    g = math.gcd(a, m)
    if b % g:
        return None
    m2 = m // g
    if m2 == 1:
        return 0, 1
    return (b // g) * pow(a // g, -1, m2) % m2, m2


def _crt(c1, c2):
    if c1 is None or c2 is None:
        return None
    (x1, m1), (x2, m2) = c1, c2
    g = math.gcd(m1, m2)
    if (x2 - x1) % g:
        return None
    l = m1 // g * m2
    k = ((x2 - x1) // g) * pow(m1 // g, -1, m2 // g) % (m2 // g)
    return (x1 + m1 * k) % l, l


def annihilator_lattice_basis(R: list[list[Fraction]]) -> tuple[tuple[int, int], tuple[int, int]]:
    """Basis of {n in Z^2 : n R in Z^2} for a rational 2x2 matrix R."""
    L = math.lcm(*(Fraction(v).denominator for row in R for v in row))
    Ri = [[int(Fraction(v) * L) % L for v in row] for row in R]
    # vectors (0, n2): n2 * Ri[1][j] = 0 mod L for both j
    g2 = math.lcm(*(L // math.gcd(L, Ri[1][j]) for j in range(2)))
    for n1 in range(1, L + 1):
        cong = (0, 1)
        for j in range(2):
            cong = _crt(cong, _solve_linear_congruence(Ri[1][j], (-n1 * Ri[0][j]) % L, L))
        if cong is not None:
            return (n1, cong[0]), (0, g2)
    raise AssertionError("L e1 always annihilates")


def _lagrange_reduce(b1, b2):
    def dot(u, v):
        return u[0] * v[0] + u[1] * v[1]
    b1, b2 = list(b1), list(b2)
    if dot(b1, b1) > dot(b2, b2):
        b1, b2 = b2, b1
    while True:
        mu = round(Fraction(dot(b1, b2), dot(b1, b1)))
        b2 = [b2[0] - mu * b1[0], b2[1] - mu * b1[1]]
        if dot(b2, b2) >= dot(b1, b1):
            return tuple(b1), tuple(b2)
        b1, b2 = b2, b1


def minimal_annihilator(R: list[list[Fraction]]) -> tuple[int, int]:
    """Smallest nonzero n (in ``obstruction_key`` order) with n R integral."""
    b1, b2 = _lagrange_reduce(*annihilator_lattice_basis(R))
    cands = []
    for k1 in range(-3, 4):
        for k2 in range(-3, 4):
            n = (k1 * b1[0] + k2 * b2[0], k1 * b1[1] + k2 * b2[1])
            if n != (0, 0):
                cands.append(n)
    return min(cands, key=obstruction_key)


def annihilates(n: Sequence[int], rho: QuadMatrix) -> bool:
    """Exact test that n . rho_j is an integer for both columns j."""
    for j in range(2):
        v = n[0] * rho[0, j] + n[1] * rho[1, j]
        if v.b != 0 or v.a.denominator != 1:
            return False
    return True


def faithfulness_test(action: AbcAffineAction) -> FaithfulnessReport:
    """Exact density test for {rho p mod Z^2} together with infinite order of A."""
    if not action.exact:
        raise IrrationalCoefficients("faithfulness is decided only for exact coefficients",
                                     c1=str(action.c1), c2=str(action.c2))
    rho = action.rho
    R, S = rho.parts()
    rank = _rank2(S)
    inf = has_infinite_order(action.A)
    notes = {"criterion": "dense iff no nonzero integer n has n.rho_1, n.rho_2 integral",
             "field_d": rho.d}
    if rank == 2:
        obstruction = None
    elif rank == 1:
        col = 0 if (S[0][0] != 0 or S[1][0] != 0) else 1
        n0 = _primitive([S[1][col], -S[0][col]])
        nR = [n0[0] * R[0][j] + n0[1] * R[1][j] for j in range(2)]
        k = math.lcm(*(Fraction(x).denominator for x in nR))
        obstruction = (k * n0[0], k * n0[1])
        notes["reduction"] = "rank-one irrational part: annihilators lie on one integer line"
    else:
        obstruction = minimal_annihilator(R)
        notes["reduction"] = "rational rho: reduced basis of the annihilator lattice"
    if obstruction is not None and not annihilates(obstruction, rho):
        raise AssertionError("internal error: obstruction does not verify")
    return FaithfulnessReport(inf and obstruction is None, obstruction, inf, rank, notes)


# ---------------------------------------------------------------------------
# Group elements and their affine images
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AffineTorusMap:
    """x -> M x + t on the plane, read mod Z^2 on the torus."""
    M: IntMatrix2
    t: tuple

    def __matmul__(self, other: "AffineTorusMap") -> "AffineTorusMap":
        Mt = self.M.apply(other.t)
        return AffineTorusMap(self.M @ other.M, (Mt[0] + self.t[0], Mt[1] + self.t[1]))

    def inverse(self) -> "AffineTorusMap":
        Mi = self.M.inverse()
        ti = Mi.apply(self.t)
        return AffineTorusMap(Mi, (-ti[0], -ti[1]))

    def equal_mod_integers(self, other: "AffineTorusMap", atol: float = 0.0) -> bool:
        if self.M != other.M:
            return False
        for a, b in zip(self.t, other.t):
            diff = a - b
            if isinstance(diff, QuadNum):
                if diff.b != 0 or diff.a.denominator != 1:
                    return False
            elif abs(diff - round(diff)) > atol:
                return False
        return True

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return x @ self.M.to_numpy().T + np.array([float(v) for v in self.t])

    @property
    def translation_float(self) -> np.ndarray:
        return np.array([float(v) for v in self.t])


@dataclass(frozen=True)
class AbcGroup:
    """Z x|_B Z^2 with elements (n, v) and (n, v)(m, w) = (n + m, v + B^n w)."""
    B: IntMatrix2

    def mul(self, g, h):
        n, v = g
        m, w = h
        Bw = (self.B ** n).apply(w)
        return (n + m, (v[0] + Bw[0], v[1] + Bw[1]))

    def inv(self, g):
        n, v = g
        w = (self.B ** (-n)).apply(v)
        return (-n, (-w[0], -w[1]))


def act(action: AbcAffineAction, element) -> AffineTorusMap:
    """Affine map of the group element (n, v): x -> A^n x + rho v."""
    n, v = element
    M = action.A ** int(n)
    if action.exact:
        rho = action.rho
        t = (rho[0, 0] * v[0] + rho[0, 1] * v[1], rho[1, 0] * v[0] + rho[1, 1] * v[1])
    else:
        tv = action.rho_float @ np.asarray(v, dtype=float)
        t = (float(tv[0]), float(tv[1]))
    return AffineTorusMap(M, t)
