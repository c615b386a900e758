"""eps-partitions (F, G), the projection p_G and its homotopy to the phi-conjugate."""

from __future__ import annotations

import math
import random
from fractions import Fraction

import numpy as np

from .errors import UNDEFINED, CertificationError, ResourceError, ValidationError
from .linalg import WeightedMapOperator, exact_norm, power_norm
from .sft import SftModel
from .torus import TorusModel


# --------------------------------------------------------------- eps'_X

def eps_prime_candidate(m):
    """Model-specific analysis of eps'_X."""
    base = getattr(m, "base", m)
    if isinstance(base, SftModel):
        # the splice bracket agrees with x on i >= 0 and with y on i <= 0
        return base.eps_X / 2
    if isinstance(base, TorusModel):
        C = base.projection_bound()
        cand = base.eps_X / (C * 2)
        half = base.eps_X / 2
        return cand if cand < half else half
    raise ValidationError("no eps' analysis for this model")


def random_pair_within(m, radius, rng):
    """A pair whose geometric distance is below `radius`, from the model's own geometry."""
    base = getattr(m, "base", m)
    if isinstance(base, SftModel):
        k = 0
        while Fraction(1, 2 ** (k + 1)) >= radius:
            k += 1
        # agree on |i| <= k  =>  d <= 2^-(k+1) < radius
        x = base.random_point(rng)
        r = k + rng.randint(0, 3)
        y = base.point_with_window(x.word(-r, r + 1), -r, rng)
        return x, y
    return base.random_pair_within(radius, rng)


def epsilon_X_prime(m, samples=2000, seed=0, certify=True):
    """eps'_X with a sampled certificate.

    Each sampled pair (x, y) must satisfy d(x,y) < eps' under the model
    metric, have a defined bracket, and both d(x,[x,y]) and d(y,[x,y])
    below eps_X / 2.  Any failure raises CertificationError.
    """
    cand = eps_prime_candidate(m)
    if not certify:
        return cand
    rng = random.Random(seed)
    half = m.eps_X / 2
    for _ in range(samples):
        x, y = random_pair_within(m, cand, rng)
        if not m.dist(x, y) < cand:
            raise CertificationError(
                f"sampled pair violates d(x,y) < eps' under the model metric: {m.encode(x)}, {m.encode(y)}")
        z = m.bracket(x, y)
        if z is UNDEFINED:
            raise CertificationError("bracket undefined below eps'")
        if not (m.dist(x, z) < half and m.dist(y, z) < half):
            raise CertificationError(f"eps' bound fails at {m.encode(x)}, {m.encode(y)}")
    return cand


# ----------------------------------------------------------- partitions

def _profile(t):
    """cos^2 bump on [0, 1), zero at 1; C^1 with vanishing derivative at the edge."""
    if t >= 1.0:
        return 0.0
    c = math.cos(0.5 * math.pi * t)
    return c * c


class EpsilonPartition:
    """Centers G with functions f_k = b_k / sqrt(sum_j b_j^2)."""

    def __init__(self, model, epsilon, rho, centers):
        self.model = model
        self.epsilon = epsilon
        self.rho = rho
        self.centers = list(centers)
        if len(set(self.centers)) != len(self.centers):
            raise ValidationError("partition centers must be distinct")
        self.center_index = {g: k for k, g in enumerate(self.centers)}
        self._cache = {}
        self._setup_lookup()

    @property
    def K(self):
        return len(self.centers)

    # lookup of centers within rho
    def _setup_lookup(self):
        m = self.model
        if isinstance(m, SftModel):
            k = 0
            while Fraction(1, 2 ** k) > self.rho:
                k += 1
            self._m = k          # d < rho=2^-k  <=>  agree on |i| <= k
            self._buckets = {}
            for i, g in enumerate(self.centers):
                self._buckets.setdefault(g.word(-k, k + 1), []).append(i)
        else:
            self._rf = float(self.rho)
            self._nc = max(1, int(1.0 / self._rf))
            self._buckets = {}
            for i, g in enumerate(self.centers):
                self._buckets.setdefault(self._cell(g.floats), []).append(i)

    def _cell(self, f):
        n = self._nc
        return (int(f[0] * n) % n, int(f[1] * n) % n)

    def raw_bumps(self, x):
        """{k: b_k(x)} for the centers with b_k(x) > 0."""
        m = self.model
        out = {}
        if isinstance(m, SftModel):
            k = self._m
            for i in self._buckets.get(x.word(-k, k + 1), ()):
                d = m.dist_float(x, self.centers[i])
                b = _profile(d / float(self.rho))
                if b > 0:
                    out[i] = b
            return out
        fx = x.floats
        cx, cy = self._cell(fx)
        n = self._nc
        r = self._rf
        seen = set()
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                key = ((cx + dx) % n, (cy + dy) % n)
                if key in seen:
                    continue
                seen.add(key)
                for i in self._buckets.get(key, ()):
                    g = self.centers[i].floats
                    u = abs((fx[0] - g[0] + 0.5) % 1.0 - 0.5)
                    v = abs((fx[1] - g[1] + 0.5) % 1.0 - 0.5)
                    if u < r and v < r:
                        b = _profile(u / r) * _profile(v / r)
                        if b > 0:
                            out[i] = b
        return out

    def evaluate(self, x):
        """{k: f_k(x)} over the nonzero values."""
        got = self._cache.get(x)
        if got is not None:
            return got
        raw = self.raw_bumps(x)
        tot = math.fsum(b * b for b in raw.values())
        if tot <= 0:
            val = {}
        else:
            s = math.sqrt(tot)
            val = {k: b / s for k, b in sorted(raw.items())}
        if len(self._cache) < 200000:
            self._cache[x] = val
        return val

    def f(self, k, x):
        return self.evaluate(x).get(k, 0.0)

    def unity_residual(self, x):
        vals = self.evaluate(x)
        return abs(math.fsum(v * v for v in vals.values()) - 1.0)

    def describe(self):
        m = self.model
        return {"K": self.K, "epsilon": float(self.epsilon), "rho": float(self.rho),
                "centers_head": [m.encode(g) for g in self.centers[:5]]}


class PushedPartition(EpsilonPartition):
    """(F o phi^-1, phi(G))."""

    def __init__(self, base: EpsilonPartition):
        self.base = base
        self.model = base.model
        self.epsilon = base.epsilon
        self.rho = base.rho
        self.centers = [self.model.phi(g) for g in base.centers]
        self.center_index = {g: k for k, g in enumerate(self.centers)}
        self._cache = {}

    def evaluate(self, x):
        return self.base.evaluate(self.model.phi_inv(x))


class HomotopyPartition(EpsilonPartition):
    """Centers G u phi(G); f = sqrt(1-s) f_k and sqrt(s) f_k o phi^-1."""

    def __init__(self, base: EpsilonPartition, s: Fraction):
        self.base = base
        self.pushed = PushedPartition(base)
        self.s = Fraction(s)
        self.model = base.model
        self.epsilon = base.epsilon
        self.rho = base.rho
        self.centers = base.centers + self.pushed.centers
        if len(set(self.centers)) != len(self.centers):
            raise ValidationError("homotopy needs G and phi(G) disjoint")
        self.center_index = {g: k for k, g in enumerate(self.centers)}
        self._cache = {}
        self._a = math.sqrt(float(1 - self.s))
        self._b = math.sqrt(float(self.s))

    def evaluate(self, x):
        K = self.base.K
        out = {}
        if self._a:
            for k, v in self.base.evaluate(x).items():
                out[k] = self._a * v
        if self._b:
            for k, v in self.pushed.evaluate(x).items():
                out[K + k] = self._b * v
        return out


def build_partition(m, basis, epsilon=None, require_phi_disjoint=True, eps_prime=None):
    """Choose centers from the basis and build an eps-partition.

    Bump radius rho = eps/2, or eps/(2L) with L the Lipschitz constant of phi
    when phi(G) must also carry an eps-partition.
    """
    ep = eps_prime if eps_prime is not None else epsilon_X_prime(m, samples=200)
    if epsilon is None:
        epsilon = ep
    if epsilon > ep:
        raise ValidationError(f"epsilon {float(epsilon)} exceeds eps'_X {float(ep)}")
    if epsilon <= 0:
        raise ValidationError("epsilon must be positive")
    rho = epsilon / 2
    if require_phi_disjoint:
        rho = epsilon / (2 * m.lipschitz)
    if isinstance(m, SftModel):
        centers = _sft_centers(m, basis, rho, require_phi_disjoint)
    else:
        centers = _torus_centers(m, basis, rho, require_phi_disjoint)
    if len(centers) < 2:
        raise ResourceError("a single center cannot carry a partition of unity")
    return EpsilonPartition(m, epsilon, rho, centers)


def _sft_centers(m, basis, rho, phi_disjoint):
    k = 0
    while Fraction(1, 2 ** k) > rho:
        k += 1
    if k == 0:
        raise ValidationError("bump radius too large: one ball would cover the whole space")
    words = _admissible_words(m.A, 2 * k + 1)
    by_word = {}
    for x in basis.points:
        by_word.setdefault(x.word(-k, k + 1), []).append(x)
    chosen = []
    chosen_set = set()
    for w in words:
        cands = by_word.get(w, [])
        picked = 0
        for x in cands:
            if phi_disjoint and (m.phi(x) in chosen_set or m.phi_inv(x) in chosen_set):
                continue
            chosen.append(x)
            chosen_set.add(x)
            picked += 1
            if picked == 2:
                break
        if picked == 0:
            raise ResourceError(
                f"no basis point in cylinder {w}; enlarge the homoclinic size bound")
    return chosen


def _admissible_words(A, length):
    out = []

    def rec(w):
        if len(w) == length:
            out.append(tuple(w))
            return
        for s in A.succ[w[-1]]:
            w.append(s)
            rec(w)
            w.pop()

    for s in range(A.n):
        rec([s])
    return out


def _torus_centers(m, basis, rho, phi_disjoint, cover=0.75):
    """Greedy cover of the torus by sup-balls of radius cover*rho.

    The torus is cut into cells of side about rho/4; a center certifies a cell
    when the whole cell lies inside its cover ball.  Cells are visited in
    row-major order and each uncovered one gets the candidate closest to a
    point ahead of it, so covers overlap little.  A cell no candidate can
    certify means the basis is too sparse.
    """
    rf = float(rho)
    nc = int(math.ceil(4.0 / rf))
    c = 1.0 / nc
    reach = cover * rf - c / 2 - 1e-12      # max center-to-cell-center offset
    span = int(math.ceil(reach / c)) + 1
    pts = basis.points
    fl = np.array([p.floats for p in pts])
    cell_of = np.floor(fl * nc).astype(int) % nc
    buckets = {}
    for i, (a, b) in enumerate(cell_of):
        buckets.setdefault((int(a), int(b)), []).append(i)
    covered = np.zeros((nc, nc), dtype=bool)
    chosen = []
    chosen_set = set()

    def wrap(d):
        return np.abs((d + 0.5) % 1.0 - 0.5)

    def mark(i):
        gx, gy = fl[i]
        rows = [k % nc for k in range(math.ceil((gx - reach) / c - 0.5),
                                      math.floor((gx + reach) / c - 0.5) + 1)]
        cols = [k % nc for k in range(math.ceil((gy - reach) / c - 0.5),
                                      math.floor((gy + reach) / c - 0.5) + 1)]
        covered[np.ix_(rows, cols)] = True

    for a in range(nc):
        for b in range(nc):
            if covered[a, b]:
                continue
            cx, cy = (a + 0.5) * c, (b + 0.5) * c
            idx = [i for da in range(-span, span + 1) for db in range(-span, span + 1)
                   for i in buckets.get(((a + da) % nc, (b + db) % nc), ())]
            if idx:
                arr = fl[idx]
                ok = (wrap(arr[:, 0] - cx) <= reach) & (wrap(arr[:, 1] - cy) <= reach)
                tx, ty = cx + 0.8 * reach, cy + 0.8 * reach
                score = np.maximum(wrap(arr[:, 0] - tx), wrap(arr[:, 1] - ty))
                order = [idx[j] for j in np.argsort(score, kind="stable") if ok[j]]
            else:
                order = []
            pick = None
            for i in order:
                x = pts[i]
                if x in chosen_set:
                    continue
                if phi_disjoint and (m.phi(x) in chosen_set or m.phi_inv(x) in chosen_set):
                    continue
                pick = i
                break
            if pick is None:
                raise ResourceError(
                    f"cover infeasible near ({cx:.4f}, {cy:.4f}); enlarge the homoclinic size bound")
            chosen.append(pts[pick])
            chosen_set.add(pts[pick])
            mark(pick)
    return chosen


def cover_radius_check(part: EpsilonPartition, samples, seed):
    """Max over sampled x of the distance to the nearest center (float)."""
    m = part.model
    rng = random.Random(seed)
    worst = 0.0
    for _ in range(samples):
        x = m.random_point(rng)
        raw = part.raw_bumps(x)
        if not raw:
            return math.inf
        worst = max(worst, min(m.dist_float(x, part.centers[k]) for k in raw))
    return worst


def unity_check(part: EpsilonPartition, samples, seed):
    """(max |sum f^2 - 1|, support violations) over random points."""
    m = part.model
    rng = random.Random(seed)
    worst, bad = 0.0, 0
    half = part.epsilon / 2
    for _ in range(samples):
        x = m.random_point(rng)
        vals = part.evaluate(x)
        worst = max(worst, abs(math.fsum(v * v for v in vals.values()) - 1.0))
        for k in vals:
            if not m.dist(x, part.centers[k]) < half:
                bad += 1
    return worst, bad


# -------------------------------------------------------------- p_G

class ProjectionOperator:
    """p_G acting on pairs (w, z) of homoclinic points."""

    def __init__(self, partition: EpsilonPartition):
        self.partition = partition
        self.model = partition.model

    def center_of(self, w, z):
        """k with w in X^u(g_k, eps) and z in X^s(g_k, eps), or None."""
        m = self.model
        g = m.bracket(z, w)
        if g is UNDEFINED:
            return None
        k = self.partition.center_index.get(g)
        if k is None:
            return None
        eps = self.partition.epsilon
        if m.in_local_unstable(g, w, eps) and m.in_local_stable(g, z, eps):
            return k
        return None

    def apply(self, w, z):
        m = self.model
        k = self.center_of(w, z)
        if k is None:
            return []
        xi = m.bracket(w, z)
        if xi is UNDEFINED:
            return []
        vals = self.partition.evaluate(xi)
        fk = vals.get(k, 0.0)
        if fk == 0.0:
            return []
        out = []
        for i, fi in vals.items():
            g = self.partition.centers[i]
            a, b = m.bracket(w, g), m.bracket(g, z)
            if a is UNDEFINED or b is UNDEFINED:
                continue
            out.append(((a, b), fk * fi))
        return out

    def fiber(self, xi, active_only=True):
        """Pairs ([xi, g_i], [g_i, xi]) of the p_G block over xi."""
        m = self.model
        part = self.partition
        out = []
        if active_only:
            idx = list(part.evaluate(xi))
        else:
            idx = self.member_centers(xi)
        for i in idx:
            g = part.centers[i]
            a, b = m.bracket(xi, g), m.bracket(g, xi)
            if a is UNDEFINED or b is UNDEFINED:
                continue
            if self.center_of(a, b) == i:
                out.append((a, b))
        return out

    def member_centers(self, xi):
        """Centers g with [xi,g] in X^u(g,eps) and [g,xi] in X^s(g,eps)."""
        m = self.model
        part = self.partition
        out = []
        eps_f = float(part.epsilon) * 2.5
        for i, g in enumerate(part.centers):
            if m.dist_float(xi, g) > eps_f:
                continue
            a, b = m.bracket(xi, g), m.bracket(g, xi)
            if a is UNDEFINED or b is UNDEFINED:
                continue
            if self.center_of(a, b) == i:
                out.append(i)
        return out


def pg_apply(p: ProjectionOperator, w, z):
    return p.apply(w, z)


def tensor_basis(p: ProjectionOperator, xis, extra_pairs=(), inactive_per_fiber=2, cap=2000):
    """Seed pairs from fibers over the given points, closed under p_G images."""
    pairs = []
    seen = set()

    def add(pr):
        if pr not in seen:
            seen.add(pr)
            pairs.append(pr)

    for xi in xis:
        for pr in p.fiber(xi, active_only=True):
            add(pr)
        if inactive_per_fiber:
            active = set(p.partition.evaluate(xi))
            extra = [i for i in p.member_centers(xi) if i not in active][:inactive_per_fiber]
            m = p.model
            for i in extra:
                g = p.partition.centers[i]
                add((m.bracket(xi, g), m.bracket(g, xi)))
        if len(pairs) > cap:
            raise ResourceError(f"tensor basis exceeds {cap} pairs")
    for pr in extra_pairs:
        add(pr)
    # closure: images and images of images
    frontier = list(pairs)
    for _ in range(2):
        nxt = []
        for (w, z) in frontier:
            for pr, _ in p.apply(w, z):
                if pr not in seen:
                    add(pr)
                    nxt.append(pr)
        frontier = nxt
        if len(pairs) > cap:
            raise ResourceError(f"tensor basis exceeds {cap} pairs")
    return pairs


def pg_matrix(p: ProjectionOperator, pairs) -> WeightedMapOperator:
    allowed = set(pairs)

    def fn(pr):
        return p.apply(*pr)

    op = WeightedMapOperator.from_function(pairs, fn, allowed)
    esc = op.boundary()
    if esc:
        raise ResourceError(f"p_G image escapes the tensor basis at pair {esc[0]!r}")
    return op


def interior_pairs(op: WeightedMapOperator):
    """Columns whose image and image-of-image stay inside the truncation."""
    out = []
    for k in op.interior():
        ok = True
        for r in op.columns[k]:
            c = op.columns.get(r)
            if c is None:
                ok = False
                break
            if any(op.columns.get(s) is None for s in c):
                ok = False
                break
        if ok:
            out.append(k)
    return out


def projection_residuals(op: WeightedMapOperator):
    """(||p^2 - p||, ||p* - p||_max, interior count)."""
    inner = interior_pairs(op)
    sub = op.restrict(inner)
    sq = op @ sub
    res = sq - sub
    idem = exact_norm(res) if res.interior() else 0.0
    asym = 0.0
    ent = op.entries()
    for (r, k), v in ent.items():
        w = ent.get((k, r), 0.0)
        asym = max(asym, abs(v - w))
    return idem, asym, len(inner)


def fiber_rank_check(p: ProjectionOperator, op: WeightedMapOperator, block=400):
    """Trace of p_G versus eigenvalues near 1 on a dense block of whole fibers."""
    m = p.model
    fibers = {}
    for (w, z) in op.interior():
        if op.columns[(w, z)]:
            fibers.setdefault(m.bracket(w, z), []).append((w, z))
    trace = sum(op.columns[k].get(k, 0.0) for k in op.interior())
    keys = []
    nfib = 0
    for xi in sorted(fibers, key=m.sort_key):
        members = set(fibers[xi])
        for k in list(members):
            members.update(op.columns[k])
        if len(keys) + len(members) > block:
            break
        keys.extend(sorted(members, key=lambda pr: (m.sort_key(pr[0]), m.sort_key(pr[1]))))
        nfib += 1
    idx = {k: i for i, k in enumerate(keys)}
    mat = np.zeros((len(keys), len(keys)))
    for k in keys:
        for r, v in op.columns[k].items():
            if r in idx:
                mat[idx[r], idx[k]] = v
    ev = np.linalg.eigvalsh(mat) if len(keys) else np.zeros(0)
    near_one = int(np.sum(np.abs(ev - 1.0) < 1e-8))
    return {"fibers": len(fibers), "trace": trace, "block_size": len(keys),
            "block_fibers": nfib, "block_eigs_near_one": near_one}


# ------------------------------------------------------------ homotopy

def conjugated_column(p: ProjectionOperator, w, z):
    """(u x u) p_G (u* x u*) applied to delta_w x delta_z."""
    m = p.model
    out = []
    for (a, b), c in p.apply(m.phi_inv(w), m.phi_inv(z)):
        out.append(((m.phi(a), m.phi(b)), c))
    return out


def homotopy_path(part: EpsilonPartition, steps: int, xis, cap=2000):
    """Projection checks along s = j/steps for the family interpolating G and phi(G).

    Returns a dict with per-step residuals, endpoint comparisons and the
    adjacent-step gaps (operator norms of differences).
    """
    m = part.model
    p0 = ProjectionOperator(part)
    p1_conj = None
    fams = [HomotopyPartition(part, Fraction(j, steps)) for j in range(steps + 1)]
    # the tensor basis: fibers of the combined family at s = 1/2
    mid = ProjectionOperator(fams[steps // 2])
    pairs = tensor_basis(mid, xis, inactive_per_fiber=0, cap=cap)
    # include images for every s (support is the same for 0 < s < 1, endpoints are sub-blocks)
    mats = []
    residuals = []
    for fam in fams:
        op = pg_matrix(ProjectionOperator(fam), pairs)
        idem, asym, n_int = projection_residuals(op)
        residuals.append({"s": str(fam.s), "idempotency": idem, "symmetry": asym,
                          "interior": n_int})
        mats.append(op)
    gaps = []
    for a, b in zip(mats, mats[1:]):
        gaps.append(exact_norm(b - a))
    # endpoints
    base_op = WeightedMapOperator.from_function(pairs, lambda pr: p0.apply(*pr), set(pairs))
    d0 = _max_entry_diff(mats[0], base_op)
    conj = WeightedMapOperator.from_function(pairs, lambda pr: conjugated_column(p0, *pr),
                                             set(pairs))
    d1 = _max_entry_diff(mats[-1], conj)
    pushed = ProjectionOperator(PushedPartition(part))
    push_op = WeightedMapOperator.from_function(pairs, lambda pr: pushed.apply(*pr), set(pairs))
    d1b = _max_entry_diff(mats[-1], push_op)
    return {"pairs": len(pairs), "steps": steps, "residuals": residuals, "gaps": gaps,
            "endpoint0_diff": d0, "endpoint1_conj_diff": d1, "endpoint1_pushed_diff": d1b,
            "operators": mats}


def _max_entry_diff(a: WeightedMapOperator, b: WeightedMapOperator):
    if a.boundary() or b.boundary():
        return math.inf
    ea, eb = a.entries(), b.entries()
    keys = set(ea) | set(eb)
    return max((abs(ea.get(k, 0.0) - eb.get(k, 0.0)) for k in keys), default=0.0)
