import random
from fractions import Fraction

import numpy as np
import pytest

from swduality.dynamics import SwappedBracket, check_axioms
from swduality.errors import UNDEFINED, ValidationError
from swduality.orbits import crossings, periodic_points, stably_equivalent, unstably_equivalent
from swduality.torus import TorusModel

M = np.array([[1.0, 1.0], [1.0, 0.0]])
EVALS, EVECS = np.linalg.eig(M)
IU = int(np.argmax(abs(EVALS)))
E_U, E_S = EVECS[:, IU], EVECS[:, 1 - IU]


def wrap(v):
    return (np.asarray(v) + 0.5) % 1.0 - 0.5


def float_bracket(p, q):
    # [p, q] = p + s e_s = q + t e_u with the short lattice representative of p - q
    d = wrap(np.subtract(p, q))
    t, s = np.linalg.solve(np.column_stack([E_U, -E_S]), d)
    return np.mod(np.asarray(q) + t * E_U, 1.0)


def test_phi_on_rational_point(golden_torus):
    m = golden_torus
    x = m.point(Fraction(1, 5), Fraction(2, 5))
    assert m.phi(x) == m.point(Fraction(3, 5), Fraction(1, 5))
    assert m.phi_inv(m.phi(x)) == x
    assert m.iterate(x, -3) == m.phi_inv(m.phi_inv(m.phi_inv(x)))


def test_periodic_counts(golden_torus):
    got = [sum(len(o.points) for o in periodic_points(golden_torus, n)) for n in range(1, 7)]
    assert got == [1, 1, 4, 5, 11, 16]


@pytest.mark.parametrize("A", [[[2, 1], [1, 1]], [[3, 1], [2, 1]]])
def test_periodic_counts_general(A):
    m = TorusModel(A)
    An = np.eye(2, dtype=int)
    for n in range(1, 5):
        An = An @ np.array(A)
        expect = abs(round(np.linalg.det(An - np.eye(2))))
        assert sum(len(o.points) for o in periodic_points(m, n)) == expect


def test_non_hyperbolic_rejected():
    with pytest.raises(ValidationError):
        TorusModel([[1, 1], [0, 1]])
    with pytest.raises(ValidationError):
        TorusModel([[2, 0], [0, 1]])


def test_eps_x_closed_form(golden_torus):
    assert abs(float(golden_torus.eps_X) - (5 + 5 ** 0.5) / 40) < 1e-15


def test_bracket_matches_float_solve(golden_torus, rng):
    m = golden_torus
    n = 0
    for _ in range(300):
        x = m.random_point(rng)
        y = m.random_near(x, rng)
        z = m.bracket(x, y)
        if z is UNDEFINED:
            continue
        n += 1
        zf = float_bracket(x.floats, y.floats)
        assert np.max(abs(wrap(np.subtract(z.floats, zf)))) < 1e-12
    assert n > 250


def test_bracket_undefined_far_apart(golden_torus):
    m = golden_torus
    assert m.bracket(m.point(0, 0), m.point(Fraction(1, 2), 0)) is UNDEFINED


def test_axioms(golden_torus):
    rep = check_axioms(golden_torus, 1500, seed=5)
    assert rep.total_violations == 0


def test_swapped_bracket_caught(golden_torus):
    assert check_axioms(SwappedBracket(golden_torus), 300, seed=5).total_violations > 0


GRID = np.array([(a, b) for a in range(-16, 17) for b in range(-16, 17)], dtype=float)


def _line_residual(d, e):
    # sup-distance of d from R e + Z^2, scanning lattice shifts up to 16
    v = np.asarray(d) - GRID
    t = v @ e / (e @ e)
    return float(np.min(np.max(abs(v - np.outer(t, e)), axis=1)))


def test_homoclinic_points_float_oracle(small_torus_basis):
    m = small_torus_basis.model
    ps = small_torus_basis.p_points
    qs = small_torus_basis.q_points
    b = small_torus_basis.size_bound
    assert len(small_torus_basis) == len(ps) * len(qs) * (2 * b + 1) ** 2
    for x in small_torus_basis.points[::7]:
        assert min(_line_residual(np.subtract(x.floats, p.floats), E_S) for p in ps) < 1e-9
        assert min(_line_residual(np.subtract(x.floats, q.floats), E_U) for q in qs) < 1e-9


def test_equivalence_against_float_oracle(golden_torus, small_torus_basis, rng):
    m = golden_torus
    pts = small_torus_basis.points
    for _ in range(200):
        x, y = rng.choice(pts), rng.choice(pts)
        d = np.subtract(x.floats, y.floats)
        assert stably_equivalent(m, x, y) == (_line_residual(d, E_S) < 1e-9)
        assert unstably_equivalent(m, x, y) == (_line_residual(d, E_U) < 1e-9)
    p = small_torus_basis.p_points[0]
    assert stably_equivalent(m, p, m.along_stable(p, Fraction(1, 3)))
    assert not unstably_equivalent(m, p, m.along_stable(p, Fraction(1, 3)))


@pytest.mark.parametrize("nu, ns", [(0, 0), (1, 0), (0, -1), (2, -1)])
def test_torus_crossings_against_basis_scan(golden_torus, torus_basis, nu, ns):
    m = golden_torus
    r = random.Random(nu - 10 * ns)
    ru = rs = m.eps_X / 2
    pts = torus_basis.points
    F = np.array([p.floats for p in pts])
    Minv = np.array([[0, 1], [1, -1]])
    hits = 0
    for _ in range(6):
        cu = r.choice(pts)
        target = m.iterate(cu, nu - ns)
        cs = min((p for p in pts if p != target), key=lambda p: m.dist_float(p, target))
        cs_ = crossings(m, cu, ru, nu, cs, rs, ns, limit=10 ** 6)
        assert cs_.complete
        # float prefilter on phi^-nu z, then the exact membership tests
        back = np.mod(F @ np.linalg.matrix_power(Minv, nu).T, 1.0)
        gap = np.max(abs(wrap(back - cu.floats)), axis=1)
        near = [pts[i] for i in np.nonzero(gap <= float(ru) + 1e-9)[0]]
        brute = [z for z in near
                 if m.in_local_unstable(cu, m.iterate(z, -nu), ru)
                 and m.in_local_stable(cs, m.iterate(z, -ns), rs)]
        assert set(brute) <= set(cs_.points)
        hits += len(brute)
        for z in cs_.points:
            assert m.in_local_unstable(cu, m.iterate(z, -nu), ru)
            assert m.in_local_stable(cs, m.iterate(z, -ns), rs)
    assert hits > 0
