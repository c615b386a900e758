"""Periodic orbits, asymptotic equivalence and homoclinic bases."""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, floor, gcd

from .errors import UNDEFINED, ResourceError, ValidationError
from .quadratic import QuadraticNumber
from .sft import SftModel, SftPoint, _same_below, _same_from
from .torus import TorusModel, TorusPoint

DEFAULT_MAX_PERIOD = 12


@dataclass(frozen=True)
class PeriodicOrbit:
    points: tuple
    period: int

    def __contains__(self, x):
        return x in self.points

    def to_json(self, m):
        return {"period": self.period, "points": [m.encode(p) for p in self.points]}


def _orbit_of(m, x, limit):
    pts = [x]
    y = m.phi(x)
    while y != x:
        pts.append(y)
        if len(pts) > limit:
            raise ValidationError("point is not periodic within the limit")
        y = m.phi(y)
    return PeriodicOrbit(tuple(pts), len(pts))


def periodic_points(m, period: int, max_period: int = DEFAULT_MAX_PERIOD):
    """All orbits whose period divides `period`, ordered deterministically."""
    if period < 1:
        raise ValidationError("period must be positive")
    if period > max_period:
        raise ResourceError(f"period {period} exceeds configured bound {max_period}")
    if isinstance(m, SftModel):
        pts = _sft_periodic(m, period)
    elif isinstance(m, TorusModel):
        pts = _torus_periodic(m, period)
    else:
        raise ValidationError("unsupported model")
    seen = set()
    orbits = []
    for x in sorted(pts, key=m.sort_key):
        if x in seen:
            continue
        orb = _orbit_of(m, x, period)
        # rotate so the smallest point leads
        seen.update(orb.points)
        orbits.append(orb)
    orbits.sort(key=lambda o: (o.period, m.sort_key(o.points[0])))
    return orbits


def _sft_periodic(m: SftModel, n):
    A = m.A
    out = []

    def dfs(w):
        if len(w) == n:
            if A.allowed(w[-1], w[0]):
                out.append(m.periodic(tuple(w)))
            return
        for s in A.succ[w[-1]]:
            w.append(s)
            dfs(w)
            w.pop()

    for s in range(m.n):
        dfs([s])
    return set(out)


def _torus_periodic(m: TorusModel, n):
    P = m.power(n)
    N = [[P[0][0] - 1, P[0][1]], [P[1][0], P[1][1] - 1]]
    det = N[0][0] * N[1][1] - N[0][1] * N[1][0]
    if det == 0:
        raise ValidationError("phi^n - I is singular")
    cnt = abs(det)
    adj = [[N[1][1], -N[0][1]], [-N[1][0], N[0][0]]]
    pts = set()
    # N^-1 k for k in a fundamental box of the lattice N Z^2 covers all solutions
    for k1 in range(cnt):
        for k2 in range(cnt):
            x = Fraction(adj[0][0] * k1 + adj[0][1] * k2, det)
            y = Fraction(adj[1][0] * k1 + adj[1][1] * k2, det)
            pts.add(m.point(x, y))
        if len(pts) == cnt:
            break
    if len(pts) != cnt:
        raise ResourceError("torus periodic enumeration incomplete")
    return pts


def select_orbits(m, specs, max_period=DEFAULT_MAX_PERIOD):
    """Pick orbits by {"period": n, "index": i} among orbits of exact period n."""
    out = []
    for s in specs:
        n, i = int(s["period"]), int(s.get("index", 0))
        exact = [o for o in periodic_points(m, n, max_period) if o.period == n]
        if i >= len(exact):
            raise ValidationError(f"no orbit #{i} of exact period {n}")
        out.append(exact[i])
    return out


# ------------------------------------------------------- equivalences

def stably_equivalent(m, x, y) -> bool:
    if isinstance(m, SftModel):
        return _same_from(x, y, max(x.end, y.end))
    return _on_line(m, x, y, stable=True)


def unstably_equivalent(m, x, y) -> bool:
    if isinstance(m, SftModel):
        return _same_below(x, y, min(x.offset, y.offset) - 1)
    return _on_line(m, x, y, stable=False)


def _line_map(m: TorusModel, stable):
    """Integer matrix N and denominator den with v = N (a1, b1, a2, b2) / den.

    Writing the coordinates of x - y as a_i + b_i sqrt(D), x - y lies in
    R e + Z^2 exactly when this rational v is an integer vector (v is the
    lattice offset that kills the complementary eigen-component).
    """
    cache = m.__dict__.setdefault("_line_maps", {})
    if stable not in cache:
        coef = m._alpha if stable else m._beta
        D = m.D
        c1a, c1b = coef[0].a, coef[0].b
        c2a, c2b = coef[1].a, coef[1].b
        # target = c1 d1 + c2 d2, split into rational (t1) and sqrt(D) (t2) parts
        T = [[c1a, D * c1b, c2a, D * c2b],
             [c1b, c1a, c2b, c2a]]
        det = c1a * c2b - c2a * c1b
        if det == 0:
            raise ValidationError("degenerate eigen-coordinates")
        inv = [[c2b / det, -c2a / det], [-c1b / det, c1a / det]]
        L = [[inv[r][0] * T[0][k] + inv[r][1] * T[1][k] for k in range(4)] for r in range(2)]
        den = 1
        for row in L:
            for v in row:
                den = den * v.denominator // gcd(den, v.denominator)
        N = [[int(v * den) for v in row] for row in L]
        cache[stable] = (N, den)
    return cache[stable]


def _on_line(m: TorusModel, x, y, stable):
    """Is x - y in R e + Z^2, e the stable (unstable) eigenvector?"""
    N, den = _line_map(m, stable)
    d1, d2 = x.x - y.x, x.y - y.y
    r1, r2 = d1.r, d2.r
    for row in N:
        num = (row[0] * d1.p + row[1] * d1.q) * r2 + (row[2] * d2.p + row[3] * d2.q) * r1
        if num % (den * r1 * r2):
            return False
    return True


# ----------------------------------------------------- homoclinic basis

@dataclass
class HomoclinicBasis:
    model: object
    P: list
    Q: list
    points: list
    size_bound: int
    boundary: set = field(default_factory=set)
    index: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.index:
            self.index = {p: i for i, p in enumerate(self.points)}

    def __len__(self):
        return len(self.points)

    def __contains__(self, x):
        return x in self.index

    @property
    def p_points(self):
        return [x for o in self.P for x in o.points]

    @property
    def q_points(self):
        return [x for o in self.Q for x in o.points]

    def interior(self):
        return [p for p in self.points if p not in self.boundary]

    def dump(self):
        m = self.model
        return [m.encode(p) for p in self.points]


def _check_disjoint(P, Q):
    ps = {x for o in P for x in o.points}
    qs = {x for o in Q for x in o.points}
    if ps & qs:
        raise ValidationError("P and Q must be disjoint")
    if not ps or not qs:
        raise ValidationError("P and Q must be non-empty")


def enumerate_homoclinic(m, P, Q, size_bound: int) -> HomoclinicBasis:
    """All points of X^h(P,Q) up to the size bound, sorted deterministically.

    SFT size: canonical split points inside [-W, W], W = size_bound.
    Torus size: sup-norm of the lattice translate v.
    """
    _check_disjoint(P, Q)
    if size_bound < 0:
        raise ValidationError("size bound must be nonnegative")
    ps = [x for o in P for x in o.points]
    qs = [x for o in Q for x in o.points]
    pts = set()
    if isinstance(m, SftModel):
        W = size_bound
        A = m.A
        for q in qs:
            lq = len(q.left)
            left = tuple(q.at(-W - lq + t) for t in range(lq))
            for p in ps:
                lp = len(p.right)
                right = tuple(p.at(W + t) for t in range(lp))
                for core in _words_between(A, left[-1], right[0], 2 * W):
                    pts.add(SftPoint(left, core, right, -W))
    elif isinstance(m, TorusModel):
        b = size_bound
        for p in ps:
            for q in qs:
                for v1 in range(-b, b + 1):
                    for v2 in range(-b, b + 1):
                        pts.add(homoclinic_torus_point(m, p, q, v1, v2))
    else:
        raise ValidationError("unsupported model")
    ordered = sorted(pts, key=m.sort_key)
    return HomoclinicBasis(m, list(P), list(Q), ordered, size_bound)


def homoclinic_torus_point(m: TorusModel, p, q, v1, v2):
    """The point p + s e_s equal to q + v + t e_u (mod Z^2)."""
    d1 = p.x - q.x - v1
    d2 = p.y - q.y - v2
    _, be = m.components(d1, d2)
    return TorusPoint(p.x - be * m.e_s[0], p.y - be * m.e_s[1])


def _words_between(A, before, after, length):
    """Admissible words w of `length` with before->w[0] and w[-1]->after allowed."""
    if length == 0:
        if A.allowed(before, after):
            yield ()
        return
    n = A.n
    good_last = [A.allowed(s, after) for s in range(n)]
    reach = [good_last]
    for _ in range(length - 1):
        prev = reach[-1]
        reach.append([any(prev[t] for t in A.succ[s]) for s in range(n)])
    # reach[k][s]: from symbol s placed at position length-1-k one can finish
    w = []

    def rec(last):
        pos = len(w)
        if pos == length:
            yield tuple(w)
            return
        for s in A.succ[last]:
            if reach[length - 1 - pos][s]:
                w.append(s)
                yield from rec(s)
                w.pop()

    yield from rec(before)


def basis_closure(basis: HomoclinicBasis, ops, cap: int = 20000, depth=None,
                  on_cap: str = "error") -> HomoclinicBasis:
    """Close the basis under point maps.

    `ops` is a list of (name, fn); fn returns a point, a list of points, or
    None/UNDEFINED.  With on_cap="mark" growth stops at the cap (or depth)
    and points whose images were left out are flagged as boundary.
    """
    m = basis.model
    pts = list(basis.points)
    known = set(pts)
    boundary = set(basis.boundary)
    frontier = deque((p, 0) for p in pts)
    while frontier:
        x, lvl = frontier.popleft()
        for name, fn in ops:
            imgs = fn(x)
            if imgs is None or imgs is UNDEFINED:
                continue
            if not isinstance(imgs, (list, tuple)):
                imgs = [imgs]
            for y in imgs:
                if y in known:
                    continue
                if (depth is not None and lvl >= depth) or len(pts) >= cap:
                    if on_cap == "error" and len(pts) >= cap:
                        raise ResourceError(
                            f"basis closure exceeded growth cap {cap} under map '{name}'")
                    boundary.add(x)
                    continue
                known.add(y)
                pts.append(y)
                frontier.append((y, lvl + 1))
    ordered = sorted(pts, key=m.sort_key)
    return HomoclinicBasis(m, basis.P, basis.Q, ordered, basis.size_bound, boundary)


def check_homoclinic(basis: HomoclinicBasis):
    """Every point asymptotic to P forward, Q backward, and not periodic."""
    m = basis.model
    ps, qs = basis.p_points, basis.q_points
    bad = []
    # a periodic point stably equivalent to P lies on P (and likewise for Q)
    orbit_pts = set(ps) | set(qs)
    for x in basis.points:
        ok_s = any(stably_equivalent(m, x, p) for p in ps)
        ok_u = any(unstably_equivalent(m, x, q) for q in qs)
        if isinstance(m, SftModel):
            periodic = x.is_periodic()
        else:
            periodic = x in orbit_pts
        if not (ok_s and ok_u) or periodic:
            bad.append(x)
    return bad


# ------------------------------------------------------------ crossings

@dataclass
class CrossingSet:
    points: list
    complete: bool
    estimate: int


def sft_radius_index(r):
    """k with X^u/X^s(x, r) meaning agreement on |i| < k (2^-k <= r)."""
    k = 0
    while Fraction(1, 2 ** k) > r:
        k += 1
    return k


def crossings(m, cu, ru, nu, cs, rs, ns, limit=64, rng=None):
    """Points of phi^nu(X^u(cu, ru)) meet phi^ns(X^s(cs, rs)).

    When the set has at most `limit` elements it is enumerated completely,
    otherwise `limit` members are sampled (seeded rng).
    """
    rng = rng or random.Random(0)
    if isinstance(m, SftModel):
        return _sft_crossings(m, cu, ru, nu, cs, rs, ns, limit, rng)
    return _torus_crossings(m, cu, ru, nu, cs, rs, ns, limit, rng)


def _sft_crossings(m, cu, ru, nu, cs, rs, ns, limit, rng):
    ku, ks = sft_radius_index(ru), sft_radius_index(rs)
    a = ku - nu          # indices < a follow phi^nu(cu)
    b = -ks - ns         # indices > b follow phi^ns(cs)
    U = m.iterate(cu, nu)
    S = m.iterate(cs, ns)
    A = m.A
    if b + 1 <= a - 1:
        if any(U.at(i) != S.at(i) for i in range(b + 1, a)):
            return CrossingSet([], True, 0)
        j = b + 1
        return CrossingSet([_splice_checked(m, U, S, j)], True, 1)
    gap = b - a + 1          # free indices a..b
    if b + 1 == a:
        if not A.allowed(U.at(a - 1), S.at(a)):
            return CrossingSet([], True, 0)
        return CrossingSet([_splice_checked(m, U, S, a)], True, 1)
    s0, s1 = U.at(a - 1), S.at(b + 1)
    total = A.paths(s0, s1, gap + 2)
    if total == 0:
        return CrossingSet([], True, 0)
    if total <= limit:
        words = list(_words_between(A, s0, s1, gap))
        complete = True
    else:
        words = {_random_word(A, s0, s1, gap, rng) for _ in range(limit)}
        words = sorted(words)
        complete = False
    out = []
    for w in words:
        lo = min(U.offset, a)
        hi = max(S.end, b + 1)
        core = [U.at(i) for i in range(lo, a)] + list(w) + [S.at(i) for i in range(b + 1, hi)]
        pl = len(U.left)
        left = tuple(U.left[(t + lo - U.offset) % pl] for t in range(pl))
        right = tuple(S.at(hi + t) for t in range(len(S.right)))
        out.append(SftPoint(left, core, right, lo))
    return CrossingSet(out, complete, total)


def _splice_checked(m, U, S, j):
    from .sft import splice
    return splice(U, S, j)


def _random_word(A, s0, s1, gap, rng):
    """Uniform admissible word of length gap between s0 and s1."""
    n = A.n
    # cnt[k][s] = number of ways to finish from symbol s with k symbols still to place
    cnt = [[int(A.allowed(s, s1)) for s in range(n)]]
    for _ in range(gap):
        prev = cnt[-1]
        cnt.append([sum(prev[t] for t in A.succ[s]) for s in range(n)])
    w = []
    last = s0
    for pos in range(gap):
        rem = gap - pos - 1
        choices = [(t, cnt[rem][t]) for t in A.succ[last] if cnt[rem][t]]
        tot = sum(c for _, c in choices)
        r = rng.randrange(tot)
        for t, c in choices:
            if r < c:
                w.append(t)
                last = t
                break
            r -= c
    return tuple(w)


def _torus_crossings(m: TorusModel, cu, ru, nu, cs, rs, ns, limit, rng):
    Pu, Ps = m.power(nu), m.power(ns)
    bu = (cu.x * Pu[0][0] + cu.y * Pu[0][1], cu.x * Pu[1][0] + cu.y * Pu[1][1])
    bs = (cs.x * Ps[0][0] + cs.y * Ps[0][1], cs.x * Ps[1][0] + cs.y * Ps[1][1])
    base = (bu[0] - bs[0], bu[1] - bs[1])
    lu, ls = float(abs(m.lam_u)), float(abs(m.lam_s))
    eu = [float(c) for c in m.e_u]
    es = [float(c) for c in m.e_s]
    supu, sups = max(map(abs, eu)), max(map(abs, es))
    Amax = float(ru) * lu ** nu / supu * (1 + 1e-9) + 1e-12
    Bmax = float(rs) * ls ** ns / sups * (1 + 1e-9) + 1e-12
    bf = (float(base[0]), float(base[1]))
    # v = base - alpha e_u - beta e_s, |alpha| <= Amax, |beta| <= Bmax
    corners = [(bf[0] - sa * Amax * eu[0] - sb * Bmax * es[0]) for sa in (-1, 1) for sb in (-1, 1)]
    v1lo, v1hi = floor(min(corners)), ceil(max(corners))
    rows = []
    total = 0
    for v1 in range(v1lo, v1hi + 1):
        # alpha = (bf0 - v1 - beta es0)/eu0 ; need |alpha| <= Amax
        lo_b, hi_b = -Bmax, Bmax
        if es[0] != 0:
            r1 = (bf[0] - v1 - Amax * eu[0]) / es[0]
            r2 = (bf[0] - v1 + Amax * eu[0]) / es[0]
            lo_b, hi_b = max(lo_b, min(r1, r2)), min(hi_b, max(r1, r2))
        elif abs((bf[0] - v1) / eu[0]) > Amax:
            continue
        if lo_b > hi_b:
            continue

        def v2_at(beta):
            alpha = (bf[0] - v1 - beta * es[0]) / eu[0]
            return bf[1] - alpha * eu[1] - beta * es[1]

        a2, b2 = v2_at(lo_b), v2_at(hi_b)
        tol = 1e-7 * (1 + abs(bf[1]))
        lo2, hi2 = ceil(min(a2, b2) - tol), floor(max(a2, b2) + tol)
        if lo2 <= hi2:
            rows.append((v1, lo2, hi2))
            total += hi2 - lo2 + 1
    if total <= limit * 4:
        cands = [(v1, v2) for v1, lo2, hi2 in rows for v2 in range(lo2, hi2 + 1)]
        complete = True
    else:
        weights = [hi2 - lo2 + 1 for _, lo2, hi2 in rows]
        picks = set()
        tries = 0
        while len(picks) < limit * 2 and tries < limit * 20:
            tries += 1
            v1, lo2, hi2 = rng.choices(rows, weights)[0]
            picks.add((v1, rng.randint(lo2, hi2)))
        cands = sorted(picks)
        complete = False
    out = []
    for v1, v2 in cands:
        d1, d2 = base[0] - v1, base[1] - v2
        al, be = m.components(d1, d2)
        z = TorusPoint(bu[0] - al * m.e_u[0], bu[1] - al * m.e_u[1])
        if not m.in_local_unstable(cu, m.iterate(z, -nu), ru):
            continue
        if not m.in_local_stable(cs, m.iterate(z, -ns), rs):
            continue
        out.append(z)
        if not complete and len(out) >= limit:
            break
    out = sorted(set(out), key=m.sort_key)
    if complete and len(out) > limit:
        out = out[:limit]
        complete = False
    return CrossingSet(out, complete, total)
