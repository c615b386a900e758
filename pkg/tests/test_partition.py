import math
import random
from fractions import Fraction

import numpy as np
import pytest

from swduality.dynamics import ScaledMetric
from swduality.errors import CertificationError, ResourceError, ValidationError
from swduality.orbits import enumerate_homoclinic, select_orbits
from swduality.partition import (
    ProjectionOperator, build_partition, cover_radius_check, epsilon_X_prime, fiber_rank_check,
    homotopy_path, pg_matrix, projection_residuals, tensor_basis, unity_check)
from swduality.sft import SftModel, splice


@pytest.fixture(scope="module")
def small_shift():
    m = SftModel([[1, 1], [1, 1]])
    P = select_orbits(m, [{"period": 1, "index": 0}])
    Q = select_orbits(m, [{"period": 1, "index": 1}])
    B = enumerate_homoclinic(m, P, Q, 4)
    return m, B, build_partition(m, B, epsilon=Fraction(1, 4), require_phi_disjoint=False)


@pytest.fixture(scope="module")
def shift2_partition(shift2, shift2_basis):
    return build_partition(shift2, shift2_basis)


def test_eps_prime_values(shift2, golden_torus):
    assert epsilon_X_prime(shift2, 500, seed=1) == Fraction(1, 4)
    ep = epsilon_X_prime(golden_torus, 500, seed=1)
    assert 0 < ep <= golden_torus.eps_X / 2


@pytest.mark.parametrize("fixture", ["shift2", "golden_torus"])
def test_scaled_metric_breaks_certificate(fixture, request):
    m = request.getfixturevalue(fixture)
    with pytest.raises(CertificationError):
        epsilon_X_prime(ScaledMetric(m, 10), 200, seed=1)


def test_epsilon_above_eps_prime_rejected(shift2, shift2_basis):
    with pytest.raises(ValidationError):
        build_partition(shift2, shift2_basis, epsilon=Fraction(1, 2))


def test_small_basis_is_a_resource_error(shift2):
    P = select_orbits(shift2, [{"period": 1, "index": 0}])
    Q = select_orbits(shift2, [{"period": 1, "index": 1}])
    with pytest.raises(ResourceError):
        build_partition(shift2, enumerate_homoclinic(shift2, P, Q, 2))


def test_partition_of_unity(shift2_partition):
    worst, bad = unity_check(shift2_partition, 1000, seed=4)
    assert worst <= 1e-12 and bad == 0
    assert cover_radius_check(shift2_partition, 300, seed=4) < float(shift2_partition.epsilon) / 2


def test_torus_partition_of_unity(golden_torus, torus_basis):
    part = build_partition(golden_torus, torus_basis)
    worst, bad = unity_check(part, 500, seed=2)
    assert worst <= 1e-12 and bad == 0
    cent = set(part.centers)
    assert not any(golden_torus.phi(g) in cent for g in part.centers)


def test_phi_disjoint_centers(shift2, shift2_partition):
    cent = set(shift2_partition.centers)
    assert not any(shift2.phi(g) in cent for g in shift2_partition.centers)


def _oracle_column(m, part, w, z):
    # center by exhaustive search, images by explicit splicing
    eps = part.epsilon
    ks = [k for k, g in enumerate(part.centers)
          if m.in_local_unstable(g, w, eps) and m.in_local_stable(g, z, eps)]
    assert len(ks) <= 1
    if not ks:
        return {}
    xi = splice(z, w, 0)
    vals = part.evaluate(xi)
    fk = vals.get(ks[0], 0.0)
    out = {}
    for i, fi in vals.items():
        g = part.centers[i]
        a, b = splice(g, xi, 0), splice(xi, g, 0)
        if fk * fi:
            out[(a, b)] = fk * fi
    return out


def test_projection_columns_against_exhaustive_oracle(small_shift):
    m, B, part = small_shift
    p = ProjectionOperator(part)
    rng = random.Random(7)
    nonzero = 0
    for _ in range(400):
        w = rng.choice(B.points)
        if rng.random() < 0.5:
            # w, z sharing a center: splice a random point onto each side of one
            g = rng.choice(part.centers)
            w = splice(g, rng.choice(B.points), rng.randint(1, 4))
            z = splice(rng.choice(B.points), g, rng.randint(-4, 0))
        else:
            z = rng.choice(B.points)
        got = {}
        for pr, c in p.apply(w, z):
            got[pr] = got.get(pr, 0.0) + c
        want = _oracle_column(m, part, w, z)
        assert set(got) == set(want)
        assert all(abs(got[k] - want[k]) < 1e-15 for k in want)
        nonzero += bool(want)
    assert nonzero > 50


def test_dense_fiber_projection(small_shift):
    # sum over fibers of v v^T with v = sum_i f_i(xi) e_([xi,g_i],[g_i,xi])
    m, B, part = small_shift
    p = ProjectionOperator(part)
    xis = B.points[::9]
    pairs = tensor_basis(p, xis, inactive_per_fiber=0)
    op = pg_matrix(p, pairs)
    idx = {pr: i for i, pr in enumerate(pairs)}
    dense = np.zeros((len(pairs), len(pairs)))
    for (r, k), v in op.entries().items():
        dense[idx[r], idx[k]] = v
    oracle = np.zeros_like(dense)
    fibers = {m.bracket(w, z) for (w, z) in pairs}
    for xi in fibers:
        v = np.zeros(len(pairs))
        for i, fi in part.evaluate(xi).items():
            g = part.centers[i]
            pr = (splice(g, xi, 0), splice(xi, g, 0))
            if pr in idx and p.center_of(*pr) == i:
                v[idx[pr]] = fi
        oracle += np.outer(v, v)
    assert np.max(abs(dense - oracle)) < 1e-14
    assert np.max(abs(dense @ dense - dense)) < 1e-12
    idem, asym, n = projection_residuals(op)
    assert idem < 1e-12 and asym == 0 and n > 0


def test_fiber_rank(shift2_partition, shift2_basis):
    p = ProjectionOperator(shift2_partition)
    pairs = tensor_basis(p, shift2_basis.points[::400])
    op = pg_matrix(p, pairs)
    chk = fiber_rank_check(p, op)
    assert abs(chk["trace"] - chk["fibers"]) < 1e-9
    assert chk["block_eigs_near_one"] == chk["block_fibers"] > 0


def test_homotopy_endpoints(shift2_partition, shift2_basis):
    res = homotopy_path(shift2_partition, 8, shift2_basis.points[::900])
    assert res["endpoint0_diff"] <= 1e-12
    assert res["endpoint1_conj_diff"] <= 1e-12
    assert res["endpoint1_pushed_diff"] <= 1e-12
    for r in res["residuals"]:
        assert r["idempotency"] <= 1e-9 and r["symmetry"] == 0
    assert max(res["gaps"]) < 1.0
    assert all(math.isfinite(g) for g in res["gaps"])
