"""Exact arithmetic in Q(sqrt D).

A value is stored as integers (p, q, r) meaning (p + q*sqrt(D)) / r with
r > 0 and gcd(p, q, r) = 1.  Comparisons are exact (sign via p^2 vs D q^2).
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd, isqrt

from .errors import ValidationError


def squarefree_part(n: int) -> tuple:
    """n = s^2 * d with d square-free; returns (s, d)."""
    if n <= 0:
        raise ValidationError("need a positive integer")
    s, d, p = 1, n, 2
    while p * p <= d:
        while d % (p * p) == 0:
            d //= p * p
            s *= p
        p += 1
    return s, d


class QuadraticNumber:
    __slots__ = ("p", "q", "r", "D", "_f")

    def __init__(self, p=0, q=0, r=1, D=5, _normal=False):
        if not _normal:
            if r == 0:
                raise ZeroDivisionError("zero denominator")
            if r < 0:
                p, q, r = -p, -q, -r
            g = gcd(gcd(p, q), r)
            if g > 1:
                p, q, r = p // g, q // g, r // g
        self.p, self.q, self.r, self.D = p, q, r, D
        self._f = None

    # -- construction helpers
    @classmethod
    def of(cls, x, D):
        if isinstance(x, QuadraticNumber):
            if x.D != D and x.q:
                raise ValidationError("mixing different quadratic fields")
            return x if x.D == D else cls(x.p, 0, x.r, D, True)
        if isinstance(x, int):
            return cls(x, 0, 1, D, True)
        if isinstance(x, Fraction):
            return cls(x.numerator, 0, x.denominator, D, True)
        if isinstance(x, float):
            f = Fraction(x)
            return cls(f.numerator, 0, f.denominator, D, True)
        raise TypeError(f"cannot coerce {type(x).__name__}")

    @classmethod
    def sqrt(cls, D):
        return cls(0, 1, 1, D, True)

    @property
    def a(self):
        return Fraction(self.p, self.r)

    @property
    def b(self):
        return Fraction(self.q, self.r)

    def is_rational(self):
        return self.q == 0

    def _co(self, other):
        if isinstance(other, QuadraticNumber):
            if other.D != self.D and other.q and self.q:
                raise ValidationError("mixing different quadratic fields")
            return other
        return QuadraticNumber.of(other, self.D)

    # -- arithmetic
    def __add__(self, other):
        o = self._co(other)
        if o.r == self.r:
            return QuadraticNumber(self.p + o.p, self.q + o.q, self.r, self.D)
        return QuadraticNumber(self.p * o.r + o.p * self.r, self.q * o.r + o.q * self.r,
                               self.r * o.r, self.D)

    __radd__ = __add__

    def __neg__(self):
        return QuadraticNumber(-self.p, -self.q, self.r, self.D, True)

    def __sub__(self, other):
        return self + (-self._co(other))

    def __rsub__(self, other):
        return self._co(other) - self

    def __mul__(self, other):
        if isinstance(other, int):
            return QuadraticNumber(self.p * other, self.q * other, self.r, self.D)
        o = self._co(other)
        D = self.D
        return QuadraticNumber(self.p * o.p + D * self.q * o.q, self.p * o.q + self.q * o.p,
                               self.r * o.r, D)

    __rmul__ = __mul__

    def conjugate(self):
        return QuadraticNumber(self.p, -self.q, self.r, self.D, True)

    def norm(self) -> Fraction:
        return Fraction(self.p * self.p - self.D * self.q * self.q, self.r * self.r)

    def inverse(self):
        n = self.p * self.p - self.D * self.q * self.q
        if n == 0:
            raise ZeroDivisionError("division by zero in Q(sqrt D)")
        # 1/((p+q s)/r) = r (p - q s) / (p^2 - D q^2)
        return QuadraticNumber(self.r * self.p, -self.r * self.q, n, self.D)

    def __truediv__(self, other):
        if isinstance(other, int):
            return QuadraticNumber(self.p, self.q, self.r * other, self.D)
        return self * self._co(other).inverse()

    def __rtruediv__(self, other):
        return self._co(other) * self.inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out, base = QuadraticNumber(1, 0, 1, self.D, True), self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # -- order
    def sign(self) -> int:
        p, q = self.p, self.q
        if q == 0:
            return (p > 0) - (p < 0)
        if p == 0:
            return (q > 0) - (q < 0)
        if (p > 0) == (q > 0):
            return 1 if p > 0 else -1
        # opposite signs: compare p^2 with D q^2
        lhs, rhs = p * p, self.D * q * q
        if p > 0:
            return 1 if lhs > rhs else -1
        return 1 if rhs > lhs else -1

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def _cmp(self, other):
        return (self - other).sign()

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __eq__(self, other):
        if isinstance(other, QuadraticNumber):
            return (self.p == other.p and self.q == other.q and self.r == other.r
                    and (self.q == 0 or self.D == other.D))
        if isinstance(other, (int, Fraction)):
            return self.q == 0 and Fraction(self.p, self.r) == other
        return NotImplemented

    def __hash__(self):
        if self.q == 0:
            return hash(Fraction(self.p, self.r))
        return hash((self.p, self.q, self.r, self.D))

    # -- rounding
    def floor(self) -> int:
        # floor((p + q sqrt D)/r) = floor(floor(p + q sqrt D) / r)
        p, q = self.p, self.q
        if q >= 0:
            n = p + isqrt(self.D * q * q)
        else:
            s = isqrt(self.D * q * q)
            n = p - s if s * s == self.D * q * q else p - s - 1
        return n // self.r

    def frac(self):
        """Representative in [0, 1)."""
        f = self.floor()
        if f == 0:
            return self
        return QuadraticNumber(self.p - f * self.r, self.q, self.r, self.D, True)

    def centered(self):
        """Representative in [-1/2, 1/2)."""
        return (self + Fraction(1, 2)).frac() - Fraction(1, 2)

    def __float__(self):
        if self._f is None:
            if self.q == 0:
                self._f = self.p / self.r
            else:
                # 64 guard bits through an exact integer square root
                k = 64
                s = isqrt(self.D * self.q * self.q << (2 * k))
                n = (self.p << k) + (s if self.q > 0 else -s)
                self._f = float(Fraction(n, self.r << k))
        return self._f

    def __repr__(self):
        if self.q == 0:
            return f"Q({Fraction(self.p, self.r)})"
        return f"Q(({self.p}{self.q:+d}*sqrt{self.D})/{self.r})"

    def to_json(self):
        return [self.p, self.q, self.r]
