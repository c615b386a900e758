"""Hyperbolic toral automorphisms with exact coordinates in Q(sqrt D)."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction
from math import ceil

from .dynamics import SmaleModel
from .errors import UNDEFINED, ValidationError
from .quadratic import QuadraticNumber, squarefree_part

HALF = Fraction(1, 2)


class TorusPoint:
    __slots__ = ("x", "y", "_h", "_f")

    def __init__(self, x: QuadraticNumber, y: QuadraticNumber, _reduced=False):
        if not _reduced:
            x, y = x.frac(), y.frac()
        self.x, self.y = x, y
        self._h = None
        self._f = None

    def __eq__(self, other):
        return isinstance(other, TorusPoint) and self.x == other.x and self.y == other.y

    def __hash__(self):
        if self._h is None:
            self._h = hash((self.x, self.y))
        return self._h

    @property
    def floats(self):
        if self._f is None:
            self._f = (float(self.x), float(self.y))
        return self._f

    def __repr__(self):
        return f"TorusPoint({self.x!r}, {self.y!r})"

    def to_json(self):
        return {"x": self.x.to_json(), "y": self.y.to_json()}


def _mat_mul(a, b):
    return [[a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]]]


class TorusModel(SmaleModel):
    kind = "torus"

    def __init__(self, matrix, name=None):
        (a, b), (c, d) = [[int(v) for v in r] for r in matrix]
        det = a * d - b * c
        if det not in (1, -1):
            raise ValidationError("torus matrix must have determinant +-1")
        tr = a + d
        disc = tr * tr - 4 * det
        if disc <= 0:
            raise ValidationError("torus matrix is not hyperbolic")
        s, D = squarefree_part(disc)
        if D == 1:
            raise ValidationError("torus matrix is not hyperbolic (rational eigenvalues)")
        self.M = [[a, b], [c, d]]
        self.Minv = [[d * det, -b * det], [-c * det, a * det]]
        self.D = D
        self.name = name or f"torus{self.M}"
        root = QuadraticNumber(0, s, 1, D)
        lp = (root + tr) / 2
        lm = (-root + tr) / 2
        lu, ls = (lp, lm) if abs(lp) > 1 else (lm, lp)
        self.lam_u, self.lam_s = lu, ls
        self.lam = abs(lu)
        # eigenvectors (lambda - d, c); c != 0 for hyperbolic integer matrices
        self.e_u = (lu - d, QuadraticNumber.of(c, D))
        self.e_s = (ls - d, QuadraticNumber.of(c, D))
        eu, es = self.e_u, self.e_s
        self._det_e = eu[0] * es[1] - eu[1] * es[0]
        inv = self._det_e.inverse()
        # Delta = alpha e_u + beta e_s
        self._alpha = (es[1] * inv, -es[0] * inv)
        self._beta = (-eu[1] * inv, eu[0] * inv)
        self.eps_X = self.separation() / 4
        self.lipschitz = max(abs(a) + abs(b), abs(c) + abs(d),
                             abs(self.Minv[0][0]) + abs(self.Minv[0][1]),
                             abs(self.Minv[1][0]) + abs(self.Minv[1][1]))
        self._powers = {0: [[1, 0], [0, 1]]}

    # -- linear algebra helpers
    def components(self, v1, v2):
        """(alpha, beta) with (v1, v2) = alpha e_u + beta e_s."""
        al = self._alpha[0] * v1 + self._alpha[1] * v2
        be = self._beta[0] * v1 + self._beta[1] * v2
        return al, be

    @staticmethod
    def _sup(v):
        return max(abs(v[0]), abs(v[1]))

    def adapted_norm(self, v1, v2):
        al, be = self.components(v1, v2)
        return max(abs(al) * self._sup(self.e_u), abs(be) * self._sup(self.e_s))

    def separation(self):
        """Minimal adapted norm of a nonzero integer vector."""
        best = None
        R = 1
        while True:
            for v in itertools.product(range(-R, R + 1), repeat=2):
                if v == (0, 0):
                    continue
                n = self.adapted_norm(QuadraticNumber.of(v[0], self.D),
                                      QuadraticNumber.of(v[1], self.D))
                if best is None or n < best:
                    best = n
            # sup norm <= 2 * adapted norm, so vectors beyond 2*best cannot win
            if R >= 2 * float(best) + 1:
                return best
            R = ceil(2 * float(best)) + 1

    def projection_bound(self):
        """C with ||beta e_s|| and ||alpha e_u|| <= C ||Delta|| in the sup norm."""
        cs = (abs(self._beta[0]) + abs(self._beta[1])) * self._sup(self.e_s)
        cu = (abs(self._alpha[0]) + abs(self._alpha[1])) * self._sup(self.e_u)
        return cs if cs > cu else cu

    def power(self, n):
        if n not in self._powers:
            base = self.M if n > 0 else self.Minv
            P = [[1, 0], [0, 1]]
            for _ in range(abs(n)):
                P = _mat_mul(P, base)
            self._powers[n] = P
        return self._powers[n]

    # -- points
    def q(self, v):
        return QuadraticNumber.of(v, self.D)

    def point(self, x, y):
        return TorusPoint(self.q(x), self.q(y))

    def _apply(self, P, p: TorusPoint):
        x, y = p.x, p.y
        return TorusPoint(x * P[0][0] + y * P[0][1], x * P[1][0] + y * P[1][1])

    def phi(self, p):
        return self._apply(self.M, p)

    def phi_inv(self, p):
        return self._apply(self.Minv, p)

    def iterate(self, p, n):
        if n == 0:
            return p
        return self._apply(self.power(n), p)

    def delta(self, p, q):
        """Minimal lattice representative of p - q, each coordinate in [-1/2, 1/2)."""
        return (p.x - q.x).centered(), (p.y - q.y).centered()

    def dist(self, p, q):
        d1, d2 = self.delta(p, q)
        d1, d2 = abs(d1), abs(d2)
        return d1 if d1 >= d2 else d2

    def dist_float(self, p, q):
        (a, b), (c, d) = p.floats, q.floats
        u = abs((a - c + 0.5) % 1.0 - 0.5)
        v = abs((b - d + 0.5) % 1.0 - 0.5)
        return max(u, v)

    def bracket(self, p, q):
        d1, d2 = self.delta(p, q)
        if abs(d1) > self.eps_X or abs(d2) > self.eps_X:
            return UNDEFINED
        be = self._beta[0] * d1 + self._beta[1] * d2
        return TorusPoint(p.x - be * self.e_s[0], p.y - be * self.e_s[1])

    def translate(self, p, v1, v2):
        return TorusPoint(p.x + v1, p.y + v2)

    def along_stable(self, p, t):
        return TorusPoint(p.x + t * self.e_s[0], p.y + t * self.e_s[1])

    def along_unstable(self, p, t):
        return TorusPoint(p.x + t * self.e_u[0], p.y + t * self.e_u[1])

    # -- samplers
    def _rand_q(self, rng, scale):
        r = rng.randint(1, 60)
        p = rng.randint(-3 * r, 3 * r)
        qq = rng.randint(-r, r)
        return QuadraticNumber(p, qq, r, self.D) * scale

    def random_point(self, rng):
        return TorusPoint(self._rand_q(rng, 1), self._rand_q(rng, 1))

    def random_near(self, p, rng):
        eps = self.eps_X
        # coordinates bounded by 3r/r + sqrt(5) ~ 5.3 before scaling
        scale = eps * Fraction(1, 6)
        t1 = self._rand_q(rng, scale)
        t2 = self._rand_q(rng, scale)
        return TorusPoint(p.x + t1, p.y + t2)

    def random_pair_within(self, radius, rng):
        """A pair (x, y) whose geometric sup-distance is below `radius`."""
        x = self.random_point(rng)
        f = Fraction(rng.randint(1, 999), 1000)
        t1 = QuadraticNumber.of(Fraction(rng.randint(-1000, 1000), 1000), self.D) * radius * f
        t2 = QuadraticNumber.of(Fraction(rng.randint(-1000, 1000), 1000), self.D) * radius * f
        return x, TorusPoint(x.x + t1, x.y + t2)

    # -- encoding
    def encode(self, p):
        return p.to_json()

    def decode(self, obj):
        D = self.D
        return TorusPoint(QuadraticNumber(*obj["x"], D=D), QuadraticNumber(*obj["y"], D=D))

    def sort_key(self, p):
        return (p.floats, p.x.to_json(), p.y.to_json())

    def describe(self):
        return {"kind": "torus", "matrix": self.M, "D": self.D}
