"""Operators on l^2 of homoclinic points: basic elements, u, alpha, W_G.

Operators are described at the point level: ``apply(x)`` returns the image
of the basis vector delta_x as a list of (point, coefficient).  Rows are
never truncated (images are computed exactly); truncation only enters
through the choice of columns, which is done with ``relevant_columns`` so
that columns where an operator can be nonzero are not missed.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .errors import UNDEFINED, ResourceError, ValidationError
from .linalg import WeightedMapOperator, exact_norm, power_norm
from .orbits import basis_closure, crossings, stably_equivalent, unstably_equivalent
from .partition import EpsilonPartition, ProjectionOperator, _profile

ANY = None  # marker: rows unrestricted


@dataclass(frozen=True)
class Region:
    """phi^n applied to X^kind(center, radius)."""
    kind: str          # "u" or "s"
    center: object
    radius: object
    n: int = 0

    def shifted(self, k):
        return Region(self.kind, self.center, self.radius, self.n + k)


def _merge(terms):
    acc = {}
    for p, c in terms:
        acc[p] = acc.get(p, 0.0) + c
    return [(p, c) for p, c in acc.items() if c]


class PointOperator:
    source_region = None
    range_region = None

    def apply(self, x):
        raise NotImplementedError

    def adjoint(self):
        raise NotImplementedError

    def __matmul__(self, other):
        return Product(self, other)

    def __sub__(self, other):
        return LinComb([(1.0, self), (-1.0, other)])

    def __add__(self, other):
        return LinComb([(1.0, self), (1.0, other)])

    def materialize(self, keys, allowed=ANY):
        if allowed is ANY:
            return WeightedMapOperator(
                {k: {r: c for r, c in _merge(self.apply(k))} for k in keys}, keys)
        return WeightedMapOperator.from_function(keys, self.apply, allowed)


class Product(PointOperator):
    def __init__(self, left, right):
        self.left, self.right = left, right

    def apply(self, x):
        out = []
        for y, c in self.right.apply(x):
            for z, d in self.left.apply(y):
                out.append((z, c * d))
        return _merge(out)

    def adjoint(self):
        return Product(self.right.adjoint(), self.left.adjoint())


class LinComb(PointOperator):
    def __init__(self, terms):
        self.terms = terms

    def apply(self, x):
        out = []
        for a, op in self.terms:
            out += [(y, a * c) for y, c in op.apply(x)]
        return _merge(out)

    def adjoint(self):
        return LinComb([(a, op.adjoint()) for a, op in self.terms])


class Zero(PointOperator):
    def apply(self, x):
        return []

    def adjoint(self):
        return self


class ShiftUnitary(PointOperator):
    """u^k: delta_x -> delta_{phi^k x}."""

    def __init__(self, m, k=1):
        self.m, self.k = m, k

    def apply(self, x):
        return [(self.m.iterate(x, self.k), 1.0)]

    def adjoint(self):
        return ShiftUnitary(self.m, -self.k)


class Conjugate(PointOperator):
    """u^n a u^-n."""

    def __init__(self, op, n):
        self.op, self.n = op, n
        self.m = op.m
        self.source_region = op.source_region.shifted(n) if op.source_region else None
        self.range_region = op.range_region.shifted(n) if op.range_region else None

    def apply(self, x):
        m, n = self.m, self.n
        return [(m.iterate(y, n), c) for y, c in self.op.apply(m.iterate(x, -n))]

    def adjoint(self):
        return Conjugate(self.op.adjoint(), self.n)


def alpha_s(a, n):
    """alpha_s^n(a) = u^n a u^-n."""
    return a if n == 0 else Conjugate(a, n)


def alpha_u(b, n):
    """alpha_u^n(b) = u^n b u^-n."""
    return b if n == 0 else Conjugate(b, n)


def bump_coefficient(m, center, delta, scale=1.0):
    """x -> scale * cos^2(pi/2 * d(x, center)/delta): continuous, zero on the edge."""
    df = float(delta)

    def coeff(x):
        return scale * _profile(m.dist_float(x, center) / df)
    return coeff


class _BasicElement(PointOperator):
    """Shared machinery of the weighted partial maps a and b."""

    def __init__(self, m, v, w, N, delta, coeff=None, label=""):
        self.m, self.v, self.w, self.N, self.delta = m, v, w, N, delta
        self.coeff = coeff if coeff is not None else bump_coefficient(m, w, delta)
        self.label = label

    def apply(self, x):
        if not self.in_source(x):
            return []
        y = self.h(x)
        if y is UNDEFINED:
            return []
        c = self.coeff(x)
        return [(y, c)] if c else []

    def adjoint(self):
        return _AdjointElement(self)

    def describe(self):
        m = self.m
        return {"type": type(self).__name__, "v": m.encode(self.v), "w": m.encode(self.w),
                "N": self.N, "delta": float(self.delta)}


class _AdjointElement(PointOperator):
    def __init__(self, e):
        self.e = e
        self.m = e.m
        self.source_region = e.range_region
        self.range_region = e.source_region

    def apply(self, y):
        e = self.e
        x = e.h_inv(y)
        if x is UNDEFINED or not e.in_source(x) or e.h(x) != y:
            return []
        c = e.coeff(x)
        return [(x, c)] if c else []

    def adjoint(self):
        return self.e


class BasicStableElement(_BasicElement):
    """a: delta_x -> coeff(x) delta_{h^s(x)} on X^u(w, delta), h^s(x) = phi^-N[phi^N x, phi^N v]."""

    def __init__(self, m, v, w, N, delta, coeff=None, label=""):
        if not stably_equivalent(m, v, w):
            raise ValidationError("stable element needs v ~s w")
        super().__init__(m, v, w, N, delta, coeff, label)
        self._vN = m.iterate(v, N)
        self._wN = m.iterate(w, N)
        self.source_region = Region("u", w, delta)
        self.range_region = Region("u", v, m.eps_X / 2)

    def in_source(self, x):
        return self.m.in_local_unstable(self.w, x, self.delta)

    def h(self, x):
        m = self.m
        z = m.bracket(m.iterate(x, self.N), self._vN)
        return UNDEFINED if z is UNDEFINED else m.iterate(z, -self.N)

    def h_inv(self, y):
        m = self.m
        z = m.bracket(m.iterate(y, self.N), self._wN)
        return UNDEFINED if z is UNDEFINED else m.iterate(z, -self.N)


class BasicUnstableElement(_BasicElement):
    """b: delta_x -> coeff(x) delta_{h^u(x)} on X^s(w, delta), h^u(x) = phi^N[phi^-N v, phi^-N x]."""

    def __init__(self, m, v, w, N, delta, coeff=None, label=""):
        if not unstably_equivalent(m, v, w):
            raise ValidationError("unstable element needs v ~u w")
        super().__init__(m, v, w, N, delta, coeff, label)
        self._vN = m.iterate(v, -N)
        self._wN = m.iterate(w, -N)
        self.source_region = Region("s", w, delta)
        self.range_region = Region("s", v, m.eps_X / 2)

    def in_source(self, x):
        return self.m.in_local_stable(self.w, x, self.delta)

    def h(self, x):
        m = self.m
        z = m.bracket(self._vN, m.iterate(x, -self.N))
        return UNDEFINED if z is UNDEFINED else m.iterate(z, self.N)

    def h_inv(self, y):
        m = self.m
        z = m.bracket(self._wN, m.iterate(y, -self.N))
        return UNDEFINED if z is UNDEFINED else m.iterate(z, self.N)


def as_operator(e, basis, strict=True) -> WeightedMapOperator:
    """The element as a weighted partial permutation on the basis."""
    allowed = set(basis.points)
    op = WeightedMapOperator.from_function(basis.points, e.apply, allowed)
    if strict and op.boundary():
        raise ResourceError(f"basis not closed under the element at {op.boundary()[0]!r}")
    return op


def close_under(basis, *elements, cap=20000):
    ops = [(getattr(e, "label", "") or type(e).__name__,
            lambda x, e=e: [y for y, _ in e.apply(x)]) for e in elements]
    return basis_closure(basis, ops, cap=cap)


def shift_unitary(basis) -> WeightedMapOperator:
    """u on the basis; columns whose image leaves the basis are marked boundary."""
    m = basis.model
    allowed = set(basis.points)
    return WeightedMapOperator.from_function(basis.points, lambda x: [(m.phi(x), 1.0)], allowed)


# ------------------------------------------------------- relevant columns

def _cross(m, ureg: Region, sreg: Region, limit, rng):
    return crossings(m, ureg.center, ureg.radius, ureg.n, sreg.center, sreg.radius, sreg.n,
                     limit=limit, rng=rng)


def relevant_columns(X, Y, limit=32, rng=None):
    """Columns x where X Y delta_x can be nonzero.

    Y x must lie in Range(Y) meet Source(X); that set is a crossing of a
    local stable and a local unstable piece.  Returns (columns, complete).
    """
    rng = rng or random.Random(0)
    r, s = Y.range_region, X.source_region
    if r is None or s is None:
        raise ValidationError("operator without support regions")
    if r.kind == s.kind:
        raise ValidationError("relevant columns need one stable and one unstable region")
    ureg, sreg = (r, s) if r.kind == "u" else (s, r)
    cs = _cross(X.m, ureg, sreg, limit, rng)
    Yt = Y.adjoint()
    cols = []
    seen = set()
    for z in cs.points:
        for x, _ in Yt.apply(z):
            if x not in seen:
                seen.add(x)
                cols.append(x)
    return cols, cs.complete


@dataclass
class NormResult:
    value: float
    power: float
    certified: bool
    columns: int
    complete: bool
    witness: object = None

    def to_json(self, m=None):
        return {"exact": self.value, "power": self.power, "certified": self.certified,
                "columns": self.columns, "complete": self.complete}


def _norm_on(op, cols):
    W = op.materialize(cols)
    ex = exact_norm(W)
    pw = power_norm(W)
    wit = None
    best = 0.0
    for k in W.interior():
        s = math.sqrt(math.fsum(v * v for v in W.columns[k].values()))
        if s > best:
            best, wit = s, k
    return ex, pw, wit


def product_norm(X, Y, limit=4096, rng=None):
    cols, complete = relevant_columns(X, Y, limit, rng)
    ex, pw, wit = _norm_on(Product(X, Y), cols)
    return NormResult(ex, pw.value, pw.certified, len(cols), complete, wit)


def product_rank(a, b, extra_columns=(), limit=4096):
    """Rank of ab on its relevant columns (plus any extra columns)."""
    cols, _ = relevant_columns(a, b, limit)
    cols = list(dict.fromkeys(list(cols) + list(extra_columns)))
    W = Product(a, b).materialize(cols)
    if W.is_partial_permutation():
        return sum(1 for k in W.interior() if W.columns[k])
    import numpy as np
    mat, _, _ = W.dense()
    return int(np.linalg.matrix_rank(mat)) if mat.size else 0


def decay_sequence(a, b, n_max=30, limit=4096):
    """||alpha_s^-n(a) b|| and ||b alpha_s^-n(a)|| for n = 0..n_max.

    The relevant sets here shrink with n, so they are enumerated completely
    and the values are exact rather than sampled.
    """
    fwd, back = [], []
    complete = True
    for n in range(n_max + 1):
        an = alpha_s(a, -n)
        r1 = product_norm(an, b, limit)
        r2 = product_norm(b, an, limit)
        complete = complete and r1.complete and r2.complete
        fwd.append(r1.value)
        back.append(r2.value)

    def first_zero(seq):
        for i in range(len(seq)):
            if all(v == 0.0 for v in seq[i:]):
                return i
        return None

    return {"forward": fwd, "backward": back, "N_forward": first_zero(fwd),
            "N_backward": first_zero(back), "complete": complete}


def commutator_norm(X, Y, limit=24, rng=None):
    """||XY - YX|| over the union of both products' relevant columns."""
    rng = rng or random.Random(0)
    c1, k1 = relevant_columns(X, Y, limit, rng)
    c2, k2 = relevant_columns(Y, X, limit, rng)
    cols = list(dict.fromkeys(c1 + c2))
    C = LinComb([(1.0, Product(X, Y)), (-1.0, Product(Y, X))])
    ex, pw, wit = _norm_on(C, cols)
    return NormResult(ex, pw.value, pw.certified, len(cols), k1 and k2, wit)


def quadrilateral(X, Y, x):
    """The four corners x, Yx, XYx, Xx (and YXx) around a commutator column."""
    m = X.m

    def img(op, p):
        got = op.apply(p) if p is not None else []
        return got[0][0] if got else None

    yx = img(Y, x)
    xyx = img(X, yx)
    xx = img(X, x)
    yxx = img(Y, xx)
    enc = (lambda p: None if p is None else m.encode(p))
    return {"x1": enc(x), "x2": enc(yx), "x3": enc(xyx), "x4": enc(xx), "x3_other": enc(yxx)}


def asymptotic_commutator(a, b, n_max=30, limit=24, seed=0):
    """Two sequences: ||[alpha_s^n(a), b]|| and ||[alpha_s^n(a), alpha_u^-n(b)]||."""
    rng = random.Random(seed)
    s1, s2 = [], []
    for n in range(n_max + 1):
        an = alpha_s(a, n)
        r1 = commutator_norm(an, b, limit, rng)
        r2 = commutator_norm(an, alpha_u(b, -n), limit, rng)
        s1.append(r1)
        s2.append(r2)
    last = s1[-1], s2[-1]
    quad = None
    for r, Y in ((last[0], b), (last[1], alpha_u(b, -n_max))):
        if r.witness is not None:
            quad = quadrilateral(alpha_s(a, n_max), Y, r.witness)
            break
    return {"first": s1, "second": s2, "quadrilateral": quad}


def first_below(values, thr):
    """Smallest n after which every value stays below thr."""
    for i in range(len(values)):
        if all(v < thr for v in values[i:]):
            return i
    return None


# ---------------------------------------------------------- two-sided rep

class TwoSidedTruncation:
    """Columns delta_x (x) e_n for n in [-window, window]."""

    def __init__(self, basis_points, window):
        self.points = list(basis_points)
        self.window = window

    def keys(self):
        return [(x, n) for n in range(-self.window, self.window + 1) for x in self.points]

    def inside(self, key):
        return -self.window <= key[1] <= self.window


class PiS(PointOperator):
    """pi_s(a): delta_x e_n -> alpha_s^n(a) delta_x e_n."""

    def __init__(self, a):
        self.a = a

    def apply(self, key):
        x, n = key
        return [((y, n), c) for y, c in alpha_s(self.a, n).apply(x)]

    def adjoint(self):
        return PiS(self.a.adjoint())


class PiU(PointOperator):
    """pi_u(b) = b (x) 1."""

    def __init__(self, b):
        self.b = b

    def apply(self, key):
        x, n = key
        return [((y, n), c) for y, c in self.b.apply(x)]

    def adjoint(self):
        return PiU(self.b.adjoint())


class PiSU(PointOperator):
    """pi_s(u) = 1 (x) B, B e_n = e_{n-1}."""

    def __init__(self, sign=1):
        self.sign = sign

    def apply(self, key):
        x, n = key
        return [((x, n - self.sign), 1.0)]

    def adjoint(self):
        return PiSU(-self.sign)


class PiUU(PointOperator):
    """pi_u(u) = u (x) B*."""

    def __init__(self, m, sign=1):
        self.m, self.sign = m, sign

    def apply(self, key):
        x, n = key
        return [((self.m.iterate(x, self.sign), n + self.sign), 1.0)]

    def adjoint(self):
        return PiUU(self.m, -self.sign)


def two_sided_commutator(t: TwoSidedTruncation, F, G):
    """max |entry| of [F, G] over columns whose images stay in the window (interior)."""
    C = LinComb([(1.0, Product(F, G)), (-1.0, Product(G, F))])
    worst = 0.0
    checked = 0
    for key in t.keys():
        imgs = Product(F, G).apply(key) + Product(G, F).apply(key)
        if not all(t.inside(k) for k, _ in imgs) or not t.inside(key):
            continue
        checked += 1
        for _, c in C.apply(key):
            worst = max(worst, abs(c))
    return {"max_abs": worst, "columns": checked}


def block_profile(a, b, window=30, limit=16, seed=0):
    """Per-block norms ||[alpha_s^n(a), b]|| for n in [-window, window]."""
    rng = random.Random(seed)
    out = []
    for n in range(-window, window + 1):
        r = commutator_norm(alpha_s(a, n), b, limit, rng)
        out.append(r)
    return out


# -------------------------------------------------------------------- W_G

class WG:
    """W_G(delta_y (x) xi) = <chi_G, xi> sum_k f_k(y) delta_[y,g_k] (x) delta_[g_k,y]."""

    def __init__(self, partition: EpsilonPartition):
        self.part = partition
        self.m = partition.model
        K = partition.K
        self.chi = {g: 1.0 / math.sqrt(K) for g in partition.centers}

    def V(self, y):
        m = self.m
        out = []
        for k, f in self.part.evaluate(y).items():
            g = self.part.centers[k]
            a, b = m.bracket(y, g), m.bracket(g, y)
            if a is UNDEFINED or b is UNDEFINED:
                continue
            out.append(((a, b), f))
        return out

    def inner_chi(self, vec: dict):
        return math.fsum(self.chi.get(z, 0.0) * c for z, c in vec.items())

    def apply(self, y, vec: dict):
        """W_G(delta_y (x) vec) with vec a sparse vector {point: coeff}."""
        s = self.inner_chi(vec)
        if s == 0.0:
            return []
        return [(pr, s * c) for pr, c in self.V(y)]

    def adjoint_pair(self, x, z):
        """W_G^*(delta_x (x) delta_z) = f_k([x,z]) delta_[x,z] (x) chi_G, g_k = [z,x]."""
        m = self.m
        g = m.bracket(z, x)
        if g is UNDEFINED:
            return None, 0.0
        k = self.part.center_index.get(g)
        if k is None:
            return None, 0.0
        y = m.bracket(x, z)
        if y is UNDEFINED or m.bracket(y, g) != x or m.bracket(g, y) != z:
            return None, 0.0
        return y, self.part.f(k, y)


def wg_star_w_residual(wg: WG, ys, zs):
    """||W*W - 1 (x) q_G|| on columns delta_y (x) delta_z."""
    cols = {}
    keys = []
    for y in ys:
        for z in zs:
            key = (y, z)
            keys.append(key)
            acc = {}
            for (a, b), c in wg.apply(y, {z: 1.0}):
                yy, f = wg.adjoint_pair(a, b)
                if yy is None or not f:
                    continue
                for g, val in wg.chi.items():
                    acc[(yy, g)] = acc.get((yy, g), 0.0) + c * f * val
            # subtract (1 (x) q_G)(delta_y (x) delta_z) = chi_G(z) delta_y (x) chi_G
            cz = wg.chi.get(z, 0.0)
            if cz:
                for g, val in wg.chi.items():
                    acc[(y, g)] = acc.get((y, g), 0.0) - cz * val
            cols[key] = {r: v for r, v in acc.items() if v}
    W = WeightedMapOperator(cols, keys)
    return exact_norm(W) if W.nnz() else 0.0


def wg_w_star_residual(wg: WG, p: ProjectionOperator, pairs):
    """||W W* - p_G|| on the tensor-basis columns."""
    cols = {}
    for (x, z) in pairs:
        acc = {}
        y, f = wg.adjoint_pair(x, z)
        if y is not None and f:
            for pr, c in wg.V(y):
                acc[pr] = acc.get(pr, 0.0) + f * c
        for pr, c in p.apply(x, z):
            acc[pr] = acc.get(pr, 0.0) - c
        cols[(x, z)] = {r: v for r, v in acc.items() if v}
    W = WeightedMapOperator(cols, list(pairs))
    return exact_norm(W) if W.nnz() else 0.0


def wg_adjoint_oracle(wg: WG, ys):
    """Compare the adjoint formula with the transpose of the materialized V."""
    worst = 0.0
    for y in ys:
        for (a, b), c in wg.V(y):
            yy, f = wg.adjoint_pair(a, b)
            if yy != y:
                return math.inf
            worst = max(worst, abs(f - c))
    return worst


def wg_conjugation(wg: WG, wg_phi: WG, ys):
    """max entry of (u x u) W_G (u x u)^* - W_phi(G) on columns delta_y (x) chi_phi(G) and delta_y (x) delta_z."""
    m = wg.m
    worst = 0.0
    for y in ys:
        vecs = [dict(wg_phi.chi)] + [{z: 1.0} for z in list(wg_phi.chi)[:3]]
        for vec in vecs:
            pulled = {m.phi_inv(z): c for z, c in vec.items()}
            lhs = {}
            for (a, b), c in wg.apply(m.phi_inv(y), pulled):
                key = (m.phi(a), m.phi(b))
                lhs[key] = lhs.get(key, 0.0) + c
            rhs = {}
            for pr, c in wg_phi.apply(y, vec):
                rhs[pr] = rhs.get(pr, 0.0) + c
            for k in set(lhs) | set(rhs):
                worst = max(worst, abs(lhs.get(k, 0.0) - rhs.get(k, 0.0)))
    return worst


def wg_intertwine(wg: WG, a, n_max=30, limit=16, seed=0, extra_radius=None):
    """||(1 (x) alpha_s^n(a)) W_G - W_G (alpha_s^n(a) (x) 1)|| on the chi_G sector.

    On delta_y (x) chi_G the operator is y -> (1 (x) alpha^n(a)) V delta_y -
    V alpha^n(a) delta_y, and its norm equals the full norm because
    1 (x) <chi_G| is a co-isometry onto that sector.
    """
    m = wg.m
    rng = random.Random(seed)
    seq, witnesses, cert = [], [], []
    src = a.source_region
    grow = extra_radius if extra_radius is not None else m.eps_X / 8
    for n in range(n_max + 1):
        an = alpha_s(a, n)
        ureg = Region("u", src.center, src.radius + grow, n)
        sreg = Region("s", src.center, m.eps_X / 2, 0)
        ys = crossings(m, ureg.center, ureg.radius, ureg.n, sreg.center, sreg.radius, sreg.n,
                       limit=limit, rng=rng).points
        cols = {}
        for y in ys:
            acc = {}
            for (p1, p2), f in wg.V(y):
                for q, c in an.apply(p2):
                    acc[(p1, q)] = acc.get((p1, q), 0.0) + f * c
            for y2, c in an.apply(y):
                for pr, f in wg.V(y2):
                    acc[pr] = acc.get(pr, 0.0) - c * f
            cols[y] = {r: v for r, v in acc.items() if v}
        W = WeightedMapOperator(cols, ys)
        ex = exact_norm(W) if W.nnz() else 0.0
        pw = power_norm(W) if W.nnz() else None
        seq.append(ex)
        cert.append(pw.value if pw else 0.0)
        wit = None
        best = 0.0
        for y, col in cols.items():
            for (p1, p2), v in col.items():
                if abs(v) > best:
                    best = abs(v)
                    k = wg.part.center_index.get(m.bracket(p2, p1))
                    wit = {"k": k, "y": m.encode(y)}
        witnesses.append(wit)
    return {"sequence": seq, "power": cert, "witnesses": witnesses}


# ------------------------------------------------------------ instances

def _near_points(m, basis, x, radius, exclude_self=True):
    """Basis points within `radius` of x (float prefilter, exact order)."""
    import numpy as np
    r = float(radius)
    cache = getattr(basis, "_float_cache", None)
    if cache is None and hasattr(m, "D"):
        cache = np.array([p.floats for p in basis.points])
        basis._float_cache = cache
    if cache is not None:
        fx = np.array(x.floats)
        d = np.abs((cache - fx + 0.5) % 1.0 - 0.5).max(axis=1)
        idx = np.nonzero(d <= r)[0]
        cand = [basis.points[i] for i in idx]
    else:
        cand = [y for y in basis.points if m.dist_float(x, y) <= r]
    out = [y for y in cand if not (exclude_self and y == x)]
    return sorted(out, key=m.sort_key)


def random_stable_element(m, basis, rng, delta, near, w=None):
    """a with w from the basis and v = [w, y] for a basis point y near w (v among the closest)."""
    for _ in range(200):
        w0 = w if w is not None else rng.choice(basis.points)
        cands = []
        for y in _near_points(m, basis, w0, near):
            v = m.bracket(w0, y)
            if v is not UNDEFINED and v != w0:
                cands.append((m.dist_float(v, w0), m.sort_key(v), v))
        if cands:
            cands.sort(key=lambda t: t[:2])
            v = rng.choice(cands[:3])[2]
            return BasicStableElement(m, v, w0, 0, delta)
        if w is not None:
            break
    raise ResourceError("no stable element found near the chosen points")


def random_unstable_element(m, basis, rng, delta, near, w=None):
    """b with w from the basis and v = [y, w] for a basis point y near w."""
    for _ in range(200):
        w0 = w if w is not None else rng.choice(basis.points)
        cands = []
        for y in _near_points(m, basis, w0, near):
            v = m.bracket(y, w0)
            if v is not UNDEFINED and v != w0:
                cands.append((m.dist_float(v, w0), m.sort_key(v), v))
        if cands:
            cands.sort(key=lambda t: t[:2])
            v = rng.choice(cands[:3])[2]
            return BasicUnstableElement(m, v, w0, 0, delta)
        if w is not None:
            break
    raise ResourceError("no unstable element found near the chosen points")


def interacting_pair(m, basis, rng, delta, near):
    """(a, b) with b centred next to a, so that ab and ba are not trivially zero."""
    a = random_stable_element(m, basis, rng, delta, near)
    ws = [a.w] + _near_points(m, basis, a.w, near)
    rng.shuffle(ws)
    for w in ws[:20]:
        try:
            return a, random_unstable_element(m, basis, rng, delta, near, w=w)
        except ResourceError:
            continue
    raise ResourceError("no unstable element next to the stable one")
