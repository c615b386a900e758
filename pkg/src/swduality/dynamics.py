"""The Smale-space contract and the axiom checker.

Concrete models live in :mod:`swduality.sft` and :mod:`swduality.torus`.
A model provides phi, phi_inv, dist (exact), bracket (exact, or UNDEFINED),
eps_X, lam and a few samplers used by the checks.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .errors import UNDEFINED, ValidationError


class SmaleModel:
    kind = "abstract"
    eps_X = None        # exact
    lam = None          # exact expansion constant
    lipschitz = None    # Lipschitz constant of phi and phi^-1 for dist

    # --- required by subclasses
    def phi(self, x):
        raise NotImplementedError

    def phi_inv(self, x):
        raise NotImplementedError

    def iterate(self, x, n: int):
        step = self.phi if n >= 0 else self.phi_inv
        for _ in range(abs(n)):
            x = step(x)
        return x

    def dist(self, x, y):
        raise NotImplementedError

    def bracket(self, x, y):
        raise NotImplementedError

    def random_point(self, rng: random.Random):
        raise NotImplementedError

    def random_near(self, x, rng: random.Random):
        """A point at random distance <= eps_X from x."""
        raise NotImplementedError

    def encode(self, x):
        raise NotImplementedError

    def decode(self, obj):
        raise NotImplementedError

    def sort_key(self, x):
        raise NotImplementedError

    # --- derived
    @property
    def eps_X_float(self):
        return float(self.eps_X)

    def dist_float(self, x, y):
        return float(self.dist(x, y))

    def in_local_stable(self, x, y, eps):
        """y in X^s(x, eps): d(x,y) <= eps and [y,x] = x."""
        if self.dist(x, y) > eps:
            return False
        z = self.bracket(y, x)
        return z is not UNDEFINED and z == x

    def in_local_unstable(self, x, y, eps):
        """y in X^u(x, eps): d(x,y) <= eps and [x,y] = x."""
        if self.dist(x, y) > eps:
            return False
        z = self.bracket(x, y)
        return z is not UNDEFINED and z == x

    def describe(self):
        return {"kind": self.kind}


def bracket(m: SmaleModel, x, y):
    return m.bracket(x, y)


def dist(m: SmaleModel, x, y):
    return m.dist(x, y)


def iterate(m: SmaleModel, x, n: int):
    return m.iterate(x, n)


# ---------------------------------------------------------------- axioms

AXIOMS = ("idempotent", "left_absorb", "right_absorb", "equivariant",
          "contract_stable", "contract_unstable")


@dataclass
class AxiomReport:
    model: str
    samples: int
    seed: int
    checked: dict = field(default_factory=lambda: {a: 0 for a in AXIOMS})
    violations: dict = field(default_factory=lambda: {a: 0 for a in AXIOMS})
    skipped_undefined: int = 0
    witnesses: list = field(default_factory=list)

    @property
    def total_violations(self):
        return sum(self.violations.values())

    @property
    def passed(self):
        return self.total_violations == 0

    def to_json(self):
        return {"model": self.model, "samples": self.samples, "seed": self.seed,
                "checked": dict(self.checked), "violations": dict(self.violations),
                "skipped_undefined": self.skipped_undefined,
                "witnesses": self.witnesses[:5]}


def check_axioms(m: SmaleModel, samples: int, seed: int) -> AxiomReport:
    """Sample triples with defined brackets and test every bracket axiom.

    Undefined brackets are skipped and counted, never treated as failures.
    """
    if samples < 0:
        raise ValidationError("samples must be nonnegative")
    rng = random.Random(seed)
    rep = AxiomReport(m.kind, samples, seed)
    lam = m.lam

    def bad(axiom, *pts):
        rep.violations[axiom] += 1
        if len(rep.witnesses) < 20:
            rep.witnesses.append({"axiom": axiom, "points": [m.encode(p) for p in pts]})

    for _ in range(samples):
        x = m.random_point(rng)
        y = m.random_near(x, rng)
        z = m.random_near(x, rng)

        rep.checked["idempotent"] += 1
        if m.bracket(x, x) != x:
            bad("idempotent", x)

        xz = m.bracket(x, z)
        yz = m.bracket(y, z)
        xy = m.bracket(x, y)
        if xz is UNDEFINED:
            rep.skipped_undefined += 1
            continue
        if yz is not UNDEFINED:
            lhs = m.bracket(x, yz)
            if lhs is UNDEFINED:
                rep.skipped_undefined += 1
            else:
                rep.checked["left_absorb"] += 1
                if lhs != xz:
                    bad("left_absorb", x, y, z)
        if xy is not UNDEFINED:
            lhs = m.bracket(xy, z)
            if lhs is UNDEFINED:
                rep.skipped_undefined += 1
            else:
                rep.checked["right_absorb"] += 1
                if lhs != xz:
                    bad("right_absorb", x, y, z)
            fx, fy = m.phi(x), m.phi(y)
            rhs = m.bracket(fx, fy)
            if rhs is UNDEFINED:
                rep.skipped_undefined += 1
            else:
                rep.checked["equivariant"] += 1
                if m.phi(xy) != rhs:
                    bad("equivariant", x, y)

        # contraction on local stable / unstable pairs through x
        eps = m.eps_X
        s1, s2 = m.bracket(x, y), m.bracket(x, z)      # same future as x
        if s1 is not UNDEFINED and s2 is not UNDEFINED:
            if m.in_local_stable(x, s1, eps) and m.in_local_stable(x, s2, eps):
                rep.checked["contract_stable"] += 1
                if m.dist(m.phi(s1), m.phi(s2)) * lam > m.dist(s1, s2):
                    bad("contract_stable", x, s1, s2)
        u1, u2 = m.bracket(y, x), m.bracket(z, x)      # same past as x
        if u1 is not UNDEFINED and u2 is not UNDEFINED:
            if m.in_local_unstable(x, u1, eps) and m.in_local_unstable(x, u2, eps):
                rep.checked["contract_unstable"] += 1
                if m.dist(m.phi_inv(u1), m.phi_inv(u2)) * lam > m.dist(u1, u2):
                    bad("contract_unstable", x, u1, u2)
    return rep


class SwappedBracket(SmaleModel):
    """Mutation wrapper: bracket arguments swapped.  Used by tests only."""

    def __init__(self, base: SmaleModel):
        self.base = base
        self.kind = base.kind + "+swapped"
        self.eps_X, self.lam, self.lipschitz = base.eps_X, base.lam, base.lipschitz

    def __getattr__(self, name):
        return getattr(self.base, name)

    def phi(self, x):
        return self.base.phi(x)

    def phi_inv(self, x):
        return self.base.phi_inv(x)

    def dist(self, x, y):
        return self.base.dist(x, y)

    def bracket(self, x, y):
        return self.base.bracket(y, x)

    def random_point(self, rng):
        return self.base.random_point(rng)

    def random_near(self, x, rng):
        return self.base.random_near(x, rng)

    def encode(self, x):
        return self.base.encode(x)


class ScaledMetric(SwappedBracket):
    """Mutation wrapper: distances multiplied by a constant, rest untouched."""

    def __init__(self, base: SmaleModel, factor=10):
        super().__init__(base)
        self.kind = base.kind + f"+metric*{factor}"
        self.factor = factor

    def bracket(self, x, y):
        return self.base.bracket(x, y)

    def dist(self, x, y):
        return self.base.dist(x, y) * self.factor


def uniqueness_scan(m, pairs: int, seed: int, radius_exp: int = 2):
    """Check that a brute-force search of X^s(x,e) meet X^u(y,e) finds exactly [x,y].

    Only for SFT models: the candidates are all points sharing x's future
    and y's past on a window, enumerated by hand rather than through the
    bracket.  e = 2^-radius_exp <= eps_X/2.
    Returns (pairs_checked, mismatches, witnesses).
    """
    from .sft import SftModel
    if not isinstance(m, SftModel):
        raise ValidationError("uniqueness scan is implemented for SFT models")
    rng = random.Random(seed)
    eps = m.eps_X / 2
    checked = mismatches = 0
    wit = []
    attempts = 0
    while checked < pairs and attempts < 50 * pairs:
        attempts += 1
        x = m.random_point(rng)
        y = m.random_near(x, rng)
        found = m.brute_force_intersection(x, y, eps)
        if not found:
            continue
        checked += 1
        z = m.bracket(x, y)
        if found != [z]:
            mismatches += 1
            wit.append({"x": m.encode(x), "y": m.encode(y),
                        "scan": [m.encode(p) for p in found]})
    return checked, mismatches, wit
