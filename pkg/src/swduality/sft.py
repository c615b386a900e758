"""Shifts of finite type on eventually periodic sequences.

A point is (L)^inf . core . (R)^inf; the core occupies indices
[offset, offset + len(core)).  For i below offset the symbol is
L[(i - offset) mod |L|], above the core it is R[(i - end) mod |R|].
Symbols are 0..n-1.
"""

from __future__ import annotations

import random
from collections import deque
from fractions import Fraction
from math import lcm

from .dynamics import SmaleModel
from .errors import UNDEFINED, ValidationError
from .ktheory import is_irreducible


def _primitive(w):
    n = len(w)
    for p in range(1, n + 1):
        if n % p == 0 and w == w[:p] * (n // p):
            return w[:p]
    return w


class SftPoint:
    __slots__ = ("left", "core", "right", "offset", "_h")

    def __init__(self, left, core, right, offset, _canonical=False):
        left, core, right = tuple(left), tuple(core), tuple(right)
        if not left or not right:
            raise ValidationError("tail cycles must be non-empty")
        if not _canonical:
            left, core, right, offset = _canonicalize(left, core, right, int(offset))
        self.left, self.core, self.right, self.offset = left, core, right, offset
        self._h = None

    @property
    def end(self):
        return self.offset + len(self.core)

    def at(self, i):
        o = self.offset
        if i < o:
            return self.left[(i - o) % len(self.left)]
        e = o + len(self.core)
        if i >= e:
            return self.right[(i - e) % len(self.right)]
        return self.core[i - o]

    def word(self, a, b):
        """Symbols at indices a..b-1."""
        return tuple(self.at(i) for i in range(a, b))

    def shifted(self, n):
        """phi^n: the left shift applied n times."""
        if not self.core and self.left == self.right:
            p = len(self.right)
            rot = tuple(self.right[(i + n) % p] for i in range(p))
            return SftPoint(rot, (), rot, 0, True)
        return SftPoint(self.left, self.core, self.right, self.offset - n, True)

    def is_periodic(self):
        return not self.core and self.left == self.right

    def _key(self):
        return (self.left, self.core, self.right, self.offset)

    def __eq__(self, other):
        return isinstance(other, SftPoint) and self._key() == other._key()

    def __hash__(self):
        if self._h is None:
            self._h = hash(self._key())
        return self._h

    def __repr__(self):
        lw = "".join(map(str, self.left))
        cw = "".join(map(str, self.core))
        rw = "".join(map(str, self.right))
        return f"SftPoint(({lw})^ {cw} ({rw})^ @{self.offset})"

    def to_json(self):
        return {"left": list(self.left), "core": list(self.core),
                "right": list(self.right), "offset": self.offset}


def _canonicalize(left, core, right, offset):
    left, right = _primitive(left), _primitive(right)
    # pull trailing core symbols into the right cycle
    while core and core[-1] == right[-1]:
        core = core[:-1]
        right = (right[-1],) + right[:-1]
    # pull leading core symbols into the left cycle
    while core and core[0] == left[0]:
        core = core[1:]
        left = left[1:] + (left[0],)
        offset += 1
    if not core:
        steps = 0
        bound = len(left) + len(right)
        while left[-1] == right[-1] and steps < bound:
            left = (left[-1],) + left[:-1]
            right = (right[-1],) + right[:-1]
            offset -= 1
            steps += 1
        if left == right:
            p = len(right)
            # periodic: index 0 carries right[(0 - offset) mod p]
            rot = tuple(right[(i - offset) % p] for i in range(p))
            return rot, (), rot, 0
    return left, core, right, offset


def splice(past, future, j):
    """Point equal to `past` on indices < j and to `future` on indices >= j."""
    lo = min(past.offset, j)
    hi = max(future.end, j)
    core = [past.at(i) for i in range(lo, j)] + [future.at(i) for i in range(j, hi)]
    pl = len(past.left)
    left = tuple(past.left[(t + lo - past.offset) % pl] for t in range(pl))
    right = tuple(future.at(hi + t) for t in range(len(future.right)))
    return SftPoint(left, core, right, lo)


class TransitionMatrix:
    def __init__(self, entries):
        rows = [[int(v) for v in r] for r in entries]
        if not is_irreducible(rows):
            raise ValidationError(f"transition matrix {rows} must be irreducible")
        self.entries = rows
        self.n = len(rows)
        self.succ = [[j for j in range(self.n) if rows[i][j]] for i in range(self.n)]
        self.pred = [[i for i in range(self.n) if rows[i][j]] for j in range(self.n)]

    def allowed(self, a, b):
        return self.entries[a][b] > 0

    def word_ok(self, w):
        return all(self.entries[a][b] for a, b in zip(w, w[1:]))

    def paths(self, a, b, length):
        """Number of admissible words of `length` symbols from a to b."""
        if length <= 0:
            return 0
        vec = [int(i == a) for i in range(self.n)]
        for _ in range(length - 1):
            vec = [sum(vec[i] for i in self.pred[j]) for j in range(self.n)]
        return vec[b]

    def shortest(self, a, b, min_len=1):
        """Shortest word from a to b with at least min_len transitions (BFS)."""
        q = deque([(a, (a,))])
        seen = {(a, 0)}
        while q:
            v, w = q.popleft()
            steps = len(w) - 1
            if v == b and steps >= min_len:
                return w
            for u in self.succ[v]:
                key = (u, min(steps + 1, min_len))
                if key not in seen:
                    seen.add(key)
                    q.append((u, w + (u,)))
        return None


class SftModel(SmaleModel):
    kind = "sft"

    def __init__(self, entries, name=None):
        self.A = TransitionMatrix(entries)
        self.n = self.A.n
        self.name = name or f"sft{entries}"
        self.eps_X = Fraction(1, 2)
        self.lam = 2
        self.lipschitz = 2

    # -- construction
    def point(self, left, core, right, offset=0):
        left, core, right = tuple(left), tuple(core), tuple(right)
        for s in left + core + right:
            if not 0 <= s < self.n:
                raise ValidationError(f"symbol {s} outside alphabet 0..{self.n - 1}")
        A = self.A
        seq = left + left[:1]
        if not A.word_ok(seq):
            raise ValidationError("left cycle not admissible")
        if not A.word_ok(right + right[:1]):
            raise ValidationError("right cycle not admissible")
        if not A.word_ok((left[-1],) + core + (right[0],)):
            raise ValidationError("core or seams not admissible")
        return SftPoint(left, core, right, offset)

    def periodic(self, word):
        return self.point(word, (), word, 0)

    # -- dynamics
    def phi(self, x):
        return x.shifted(1)

    def phi_inv(self, x):
        return x.shifted(-1)

    def iterate(self, x, n):
        return x.shifted(n)

    def agreement(self, x, y):
        """Smallest k with x_k != y_k or x_-k != y_-k (None when equal)."""
        if x == y:
            return None
        k = 0
        while True:
            if x.at(k) != y.at(k) or x.at(-k) != y.at(-k):
                return k
            k += 1

    def dist(self, x, y):
        k = self.agreement(x, y)
        return Fraction(0) if k is None else Fraction(1, 2 ** k)

    def dist_float(self, x, y):
        k = self.agreement(x, y)
        return 0.0 if k is None else 2.0 ** -k

    def bracket(self, x, y):
        if x.at(0) != y.at(0):
            return UNDEFINED
        return splice(y, x, 0)

    # fast local-set membership; same sets as the bracket definition
    @staticmethod
    def _radius_k(eps):
        # d <= eps  <=>  2^-k <= eps  <=>  k >= ceil(log2(1/eps))
        k = 0
        while Fraction(1, 2 ** k) > eps:
            k += 1
        return k

    def in_local_stable(self, x, y, eps):
        k = self._radius_k(eps)
        return _same_from(x, y, 1 - k) if k > 0 else _same_from(x, y, 0)

    def in_local_unstable(self, x, y, eps):
        k = self._radius_k(eps)
        return _same_below(x, y, k - 1) if k > 0 else _same_below(x, y, 0)

    # -- samplers
    def _cycle_through(self, v, rng, extra):
        """A cycle word starting at v: random walk then shortest return."""
        w = [v]
        for _ in range(extra):
            w.append(rng.choice(self.A.succ[w[-1]]))
        back = self.A.shortest(w[-1], v, 1)
        return tuple(w) + back[1:-1]

    def _walk(self, start, length, rng, backwards=False):
        w = [start]
        nbr = self.A.pred if backwards else self.A.succ
        for _ in range(length):
            w.append(rng.choice(nbr[w[-1]]))
        return w[::-1] if backwards else w

    def point_with_window(self, word, a, rng, spread=6):
        """Random eventually periodic point carrying `word` at indices a..."""
        word = tuple(word)
        back = self._walk(word[0], rng.randint(0, spread), rng, backwards=True)
        fwd = self._walk(word[-1], rng.randint(0, spread), rng)
        core = tuple(back[:-1]) + word + tuple(fwd[1:])
        start = a - (len(back) - 1)
        left = self._cycle_through(core[0], rng, rng.randint(0, 3))
        rc = self._cycle_through(core[-1], rng, rng.randint(0, 3))
        right = rc[1:] + rc[:1]
        return self.point(left, core, right, start)

    def random_point(self, rng):
        w = self._walk(rng.randrange(self.n), rng.randint(0, 8), rng)
        return self.point_with_window(w, -rng.randint(0, len(w) - 1), rng)

    def random_near(self, x, rng):
        r = rng.randint(0, 4)
        return self.point_with_window(x.word(-r, r + 1), -r, rng)

    # -- oracle helpers
    def brute_force_intersection(self, x, y, eps):
        """Points z with z in X^s(x, eps) and z in X^u(y, eps), by direct scan.

        Candidates are splices at every admissible cut in the overlap window;
        membership is decided coordinate-wise on a window that covers both
        tails, without calling the bracket.
        """
        k = self._radius_k(eps)
        found = []
        for j in range(1 - k, k + 1):
            if not self.A.allowed(y.at(j - 1), x.at(j)):
                continue
            z = splice(y, x, j)
            W = _window_bound(x, y, z)
            ok = all(z.at(i) == x.at(i) for i in range(1 - k, W))
            ok = ok and all(z.at(i) == y.at(i) for i in range(-W, k))
            ok = ok and self.dist(z, x) <= eps and self.dist(z, y) <= eps
            if ok and z not in found:
                found.append(z)
        return found

    # -- encoding
    def encode(self, x):
        return x.to_json()

    def decode(self, obj):
        return self.point(obj["left"], obj["core"], obj["right"], obj["offset"])

    def sort_key(self, x):
        return (len(x.core), x.offset, x.core, x.left, x.right)

    def describe(self):
        return {"kind": "sft", "matrix": self.A.entries}


def _window_bound(*pts):
    span = max(max(abs(p.offset), abs(p.end)) for p in pts)
    per = lcm(*[len(p.left) for p in pts]) + lcm(*[len(p.right) for p in pts])
    return span + per + 1


def _same_from(x, y, start):
    """x_i == y_i for all i >= start (one common period past both cores)."""
    end = max(x.end, y.end, start) + lcm(len(x.right), len(y.right))
    return all(x.at(i) == y.at(i) for i in range(start, end))


def _same_below(x, y, stop):
    """x_i == y_i for all i <= stop."""
    lo = min(x.offset, y.offset, stop + 1) - lcm(len(x.left), len(y.left))
    return all(x.at(i) == y.at(i) for i in range(lo, stop + 1))
