"""Exact integer linear algebra for K-groups of SFT Ruelle algebras.

Everything here works on python ints (arbitrary precision) and Fractions.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

from .errors import ValidationError


# ----------------------------------------------------------------- groups

@dataclass(frozen=True)
class AbelianGroup:
    """Z^free_rank + sum of Z/d_i, with d_i >= 2 and d_i | d_{i+1}."""

    free_rank: int = 0
    invariant_factors: tuple = ()

    def __post_init__(self):
        if self.free_rank < 0:
            raise ValidationError("negative free rank")
        object.__setattr__(self, "invariant_factors",
                           canonical_factors(self.invariant_factors))

    @property
    def torsion(self):
        return AbelianGroup(0, self.invariant_factors)

    def is_trivial(self):
        return self.free_rank == 0 and not self.invariant_factors

    def to_json(self):
        return {"free_rank": self.free_rank,
                "invariant_factors": list(self.invariant_factors)}

    def __str__(self):
        parts = []
        if self.free_rank:
            parts.append("Z" if self.free_rank == 1 else f"Z^{self.free_rank}")
        parts += [f"Z/{d}" for d in self.invariant_factors]
        return " + ".join(parts) if parts else "0"


def _factorize(n):
    out = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def canonical_factors(factors):
    """Rewrite any list of cyclic orders as an invariant-factor chain.

    Z/2 + Z/6 stays (2, 6); Z/6 + Z/4 becomes (2, 12). Zeros are not allowed
    here (free parts are counted separately), ones are dropped.
    """
    fs = [abs(int(d)) for d in factors]
    if any(d == 0 for d in fs):
        raise ValidationError("zero is not a torsion order")
    fs = [d for d in fs if d > 1]
    if not fs:
        return ()
    # collect prime powers then deal them out from the top
    per_prime = {}
    for d in fs:
        for p, e in _factorize(d).items():
            per_prime.setdefault(p, []).append(p ** e)
    length = max(len(v) for v in per_prime.values())
    chain = [1] * length
    for p, powers in per_prime.items():
        powers.sort()
        for i, q in enumerate(reversed(powers)):
            chain[length - 1 - i] *= q
    return tuple(chain)


def group_isomorphic(g: AbelianGroup, h: AbelianGroup) -> bool:
    return (g.free_rank == h.free_rank
            and g.invariant_factors == h.invariant_factors)


# ------------------------------------------------------------ Smith form

def _identity(n):
    return [[int(i == j) for j in range(n)] for i in range(n)]


def matmul(a, b):
    if not a:
        return []
    inner = len(b)
    cols = len(b[0]) if b else 0
    return [[sum(a[i][k] * b[k][j] for k in range(inner)) for j in range(cols)]
            for i in range(len(a))]


def det(m):
    """Bareiss fraction-free determinant."""
    n = len(m)
    if n == 0:
        return 1
    a = [list(map(int, r)) for r in m]
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


@dataclass
class SmithDecomposition:
    M: list
    U: list
    D: list
    V: list

    @property
    def diagonal(self):
        r = min(len(self.D), len(self.D[0]) if self.D else 0)
        return [self.D[i][i] for i in range(r)]

    @property
    def rank(self):
        return sum(1 for d in self.diagonal if d != 0)

    def verify(self):
        """U M V == D exactly, U and V unimodular, D a divisibility chain."""
        if matmul(matmul(self.U, self.M), self.V) != self.D:
            return False
        if abs(det(self.U)) != 1 or abs(det(self.V)) != 1:
            return False
        rows = len(self.D)
        cols = len(self.D[0]) if rows else 0
        for i in range(rows):
            for j in range(cols):
                if i != j and self.D[i][j] != 0:
                    return False
        diag = self.diagonal
        if any(d < 0 for d in diag):
            return False
        for x, y in zip(diag, diag[1:]):
            if x == 0 and y != 0:
                return False
            if x != 0 and y % x != 0:
                return False
        return True


def smith_normal_form(M) -> SmithDecomposition:
    """Smith normal form with transforms, U M V = D."""
    m = len(M)
    n = len(M[0]) if m else 0
    A = [[int(v) for v in row] for row in M]
    for row in A:
        if len(row) != n:
            raise ValidationError("ragged matrix")
    U = _identity(m)
    V = _identity(n)

    def swap_rows(i, j):
        A[i], A[j] = A[j], A[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for r in A:
            r[i], r[j] = r[j], r[i]
        for r in V:
            r[i], r[j] = r[j], r[i]

    def add_row(dst, src, c):  # row_dst += c row_src
        if c:
            A[dst] = [x + c * y for x, y in zip(A[dst], A[src])]
            U[dst] = [x + c * y for x, y in zip(U[dst], U[src])]

    def add_col(dst, src, c):
        if c:
            for r in A:
                r[dst] += c * r[src]
            for r in V:
                r[dst] += c * r[src]

    t = 0
    while t < min(m, n):
        # pivot: smallest nonzero |entry| in the remaining block
        best = None
        for i in range(t, m):
            for j in range(t, n):
                if A[i][j] and (best is None or abs(A[i][j]) < abs(A[best[0]][best[1]])):
                    best = (i, j)
        if best is None:
            break
        swap_rows(t, best[0])
        swap_cols(t, best[1])
        while True:
            p = A[t][t]
            dirty = False
            for i in range(t + 1, m):
                if A[i][t]:
                    add_row(i, t, -(A[i][t] // p))
                    if A[i][t]:
                        dirty = True
            for j in range(t + 1, n):
                if A[t][j]:
                    add_col(j, t, -(A[t][j] // p))
                    if A[t][j]:
                        dirty = True
            if dirty:
                # move the smallest leftover in row/col t to the pivot
                cand = [(abs(A[i][t]), i, t) for i in range(t, m) if A[i][t]]
                cand += [(abs(A[t][j]), t, j) for j in range(t, n) if A[t][j]]
                _, i, j = min(cand)
                swap_rows(t, i)
                swap_cols(t, j)
                continue
            # divisibility against the rest of the block
            bad = next(((i, j) for i in range(t + 1, m) for j in range(t + 1, n)
                        if A[i][j] % p), None)
            if bad is None:
                break
            add_row(t, bad[0], 1)
        if A[t][t] < 0:
            A[t] = [-x for x in A[t]]
            U[t] = [-x for x in U[t]]
        t += 1
    return SmithDecomposition([list(map(int, r)) for r in M], U, A, V)


def coker_ker(M):
    """(coker M, ker M) for M : Z^cols -> Z^rows."""
    rows = len(M)
    cols = len(M[0]) if rows else 0
    snf = smith_normal_form(M)
    diag = [d for d in snf.diagonal if d]
    r = len(diag)
    return (AbelianGroup(rows - r, tuple(diag)), AbelianGroup(cols - r))


# --------------------------------------------------------------- K-groups

def _check_square(A):
    n = len(A)
    if n == 0 or any(len(r) != n for r in A):
        raise ValidationError("transition matrix must be square and non-empty")
    if any(int(v) < 0 for r in A for v in r):
        raise ValidationError("transition matrix has negative entries")
    return n


def is_irreducible(A) -> bool:
    """Strong connectivity of the transition graph."""
    n = _check_square(A)
    if not any(A[i][j] for i in range(n) for j in range(n)):
        return False

    def reach(adj):
        seen = {0}
        stack = [0]
        while stack:
            i = stack.pop()
            for j in range(n):
                if adj(i, j) and j not in seen:
                    seen.add(j)
                    stack.append(j)
        return len(seen) == n

    return reach(lambda i, j: A[i][j] > 0) and reach(lambda i, j: A[j][i] > 0)


def require_irreducible(A):
    if not is_irreducible(A):
        raise ValidationError(f"matrix {A} is not irreducible")


def _transpose(A):
    return [list(r) for r in zip(*A)]


def _i_minus(A):
    n = len(A)
    return [[int(i == j) - int(A[i][j]) for j in range(n)] for i in range(n)]


@dataclass
class RuelleKGroups:
    K0_s: AbelianGroup
    K1_s: AbelianGroup
    K0_u: AbelianGroup
    K1_u: AbelianGroup

    def to_json(self):
        return {k: getattr(self, k).to_json() for k in ("K0_s", "K1_s", "K0_u", "K1_u")}


def ruelle_k_groups(A) -> RuelleKGroups:
    """K_0/K_1 of R^s and R^u through the Cuntz-Krieger formula."""
    require_irreducible(A)
    k0u, k1u = coker_ker(_i_minus(_transpose(A)))
    k0s, k1s = coker_ker(_i_minus(A))
    return RuelleKGroups(k0s, k1s, k0u, k1u)


def uct_dual(g0: AbelianGroup, g1: AbelianGroup):
    """(K^0, K^1) from (K_0, K_1): free parts stay, torsion moves up one degree."""
    k0 = AbelianGroup(g0.free_rank, g1.invariant_factors)
    k1 = AbelianGroup(g1.free_rank, g0.invariant_factors)
    return k0, k1


@dataclass
class DualityVerdict:
    matrix: list
    groups: RuelleKGroups
    checks: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c["ok"] for c in self.checks.values())

    def to_json(self):
        return {"matrix": self.matrix, "verdict": "PASS" if self.passed else "FAIL",
                "groups": self.groups.to_json(),
                "checks": {k: {"ok": v["ok"], "lhs": v["lhs"].to_json(),
                               "rhs": v["rhs"].to_json()} for k, v in self.checks.items()}}


def duality_verdict(A) -> DualityVerdict:
    """Compare K_i(R^s) with K^{i+1}(R^u) and K_i(R^u) with K^{i+1}(R^s)."""
    g = ruelle_k_groups(A)
    Ku0, Ku1 = uct_dual(g.K0_u, g.K1_u)  # K-homology of R^u
    Ks0, Ks1 = uct_dual(g.K0_s, g.K1_s)
    checks = {}

    def put(name, lhs, rhs):
        checks[name] = {"ok": group_isomorphic(lhs, rhs), "lhs": lhs, "rhs": rhs}

    put("K0(Rs)~K^1(Ru)", g.K0_s, Ku1)
    put("K1(Rs)~K^0(Ru)", g.K1_s, Ku0)
    put("K0(Ru)~K^1(Rs)", g.K0_u, Ks1)
    put("K1(Ru)~K^0(Rs)", g.K1_u, Ks0)
    # torsion of K_0 on both sides, via Ext of the dual
    put("tK0(Rs)~tK0(Ru)", g.K0_s.torsion, g.K0_u.torsion)
    # rank chain: rank K_0 = rank K_1 on each side, and across sides
    put("rank K0(Rs)=rank K1(Rs)", AbelianGroup(g.K0_s.free_rank), AbelianGroup(g.K1_s.free_rank))
    put("rank K0(Ru)=rank K0(Rs)", AbelianGroup(g.K0_u.free_rank), AbelianGroup(g.K0_s.free_rank))
    return DualityVerdict([list(map(int, r)) for r in A], g, checks)


# ----------------------------------------------------------------- ranks

def rational_rank(M):
    """Rank over Q by Fraction Gaussian elimination."""
    return len(_row_echelon(M))


def _row_echelon(M):
    rows = [[Fraction(v) for v in r] for r in M]
    out = []
    cols = len(rows[0]) if rows else 0
    c = 0
    while rows and c < cols:
        piv = next((r for r in rows if r[c] != 0), None)
        if piv is None:
            c += 1
            continue
        rows.remove(piv)
        piv = [v / piv[c] for v in piv]
        rows = [[a - r[c] * b for a, b in zip(r, piv)] for r in rows]
        out.append(piv)
        c += 1
    return out


def _column_basis(M):
    """Basis (list of column vectors) of the column space of M over Q."""
    n = len(M)
    cols = [[Fraction(M[i][j]) for i in range(n)] for j in range(len(M[0]))]
    basis = []
    for col in cols:
        if rational_rank([*basis, col]) > len(basis):
            basis.append(col)
    return basis


@dataclass
class DimensionGroupAction:
    A: list
    basis: list  # vectors spanning the eventual range V
    phi0: list   # matrix of A|_V in that basis


def eventual_range(A) -> DimensionGroupAction:
    n = len(A)
    P = _identity(n)
    for _ in range(n):
        P = matmul(P, A)
    basis = _column_basis(P)
    k = len(basis)
    # express A b_j in the basis b_1..b_k by solving B c = A b_j
    phi0 = [[Fraction(0)] * k for _ in range(k)]
    for j, b in enumerate(basis):
        img = [sum(Fraction(A[i][t]) * b[t] for t in range(n)) for i in range(n)]
        coeffs = _solve_in_basis(basis, img)
        for i in range(k):
            phi0[i][j] = coeffs[i]
    return DimensionGroupAction([list(r) for r in A], basis, phi0)


def _solve_in_basis(basis, v):
    k = len(basis)
    n = len(v)
    aug = [[basis[j][i] for j in range(k)] + [v[i]] for i in range(n)]
    ech = _row_echelon(aug)
    sol = [Fraction(0)] * k
    for r in reversed(ech):
        lead = next(i for i, x in enumerate(r) if x != 0)
        if lead == k:
            raise ValidationError("vector not in span")
        sol[lead] = r[k] - sum(r[j] * sol[j] for j in range(lead + 1, k))
    return sol


def pv_ranks(A):
    """Rational rank bookkeeping from the Pimsner-Voiculescu sequence.

    Returns {"U": (rank K0, rank K1), "S": (...)}; phi_1 acts on the zero
    space so only coker/ker of 1 - phi_0 contribute.
    """
    require_irreducible(A)
    out = {}
    for side, mat in (("U", _transpose(A)), ("S", [list(r) for r in A])):
        dg = eventual_range(mat)
        k = len(dg.basis)
        if k == 0:
            out[side] = (0, 0)
            continue
        one_minus = [[int(i == j) - dg.phi0[i][j] for j in range(k)] for i in range(k)]
        r = rational_rank(one_minus)
        coker_rank = k - r
        ker_rank = k - r
        out[side] = (coker_rank, ker_rank)
    return out


# ---------------------------------------------------------------- corpus

def random_irreducible(rng: random.Random, max_size=6, max_entry=2):
    while True:
        n = rng.randint(1, max_size)
        A = [[rng.randint(0, max_entry) for _ in range(n)] for _ in range(n)]
        if is_irreducible(A):
            return A


def make_corpus(seed=20240601, count=100, max_size=6):
    rng = random.Random(seed)
    return [random_irreducible(rng, max_size) for _ in range(count)]


def load_corpus():
    text = resources.files("swduality").joinpath("data/corpus.json").read_text()
    return json.loads(text)["matrices"]
