import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swduality.errors import TruncationEscape
from swduality.linalg import WeightedMapOperator, dual_norm, exact_norm, power_norm


def from_dense(a):
    cols = {j: {i: float(a[i, j]) for i in range(a.shape[0]) if a[i, j]} for j in range(a.shape[1])}
    keys = range(max(a.shape))
    return WeightedMapOperator({k: cols.get(k, {}) for k in keys}, keys)


matrices = st.integers(1, 7).flatmap(
    lambda n: st.lists(st.lists(st.sampled_from([0, 0, 0, 1, -1, 0.5, 2.25, -3]),
                                min_size=n, max_size=n), min_size=n, max_size=n))


@settings(max_examples=150, deadline=None)
@given(matrices)
def test_norms_agree_with_numpy(rows):
    a = np.array(rows, dtype=float)
    op = from_dense(a)
    ref = float(np.linalg.norm(a, 2)) if a.any() else 0.0
    ex, pw = dual_norm(op)
    assert abs(ex - ref) <= 1e-10 * max(1, ref)
    if pw.certified:
        assert abs(pw.value - ref) <= 1e-6 * max(1, ref)


def test_power_iteration_certifies_on_gapped_matrix():
    a = np.diag([3.0, 1.0, 0.5])
    a[0, 1] = 0.1
    est = power_norm(from_dense(a))
    assert est.certified
    assert abs(est.value - np.linalg.norm(a, 2)) < 1e-10


def test_partial_permutation_norm_is_max_coefficient():
    op = WeightedMapOperator({0: {1: 0.3}, 1: {2: -0.7}, 2: {}, 3: {0: 0.1}})
    assert op.is_partial_permutation()
    assert exact_norm(op) == 0.7
    assert not WeightedMapOperator({0: {1: 1.0}, 1: {1: 1.0}}).is_partial_permutation()


@settings(max_examples=80, deadline=None)
@given(matrices, matrices)
def test_product_and_adjoint_match_dense(r1, r2):
    n = min(len(r1), len(r2))
    a = np.array(r1, dtype=float)[:n, :n]
    b = np.array(r2, dtype=float)[:n, :n]
    A, B = from_dense(a), from_dense(b)
    ab, _, _ = (A @ B).dense(range(n))
    got = np.zeros((n, n))
    for (r, k), v in (A @ B).entries().items():
        got[r, k] = v
    assert np.allclose(got, a @ b)
    adj = np.zeros((n, n))
    for (r, k), v in A.adjoint().entries().items():
        adj[r, k] = v
    assert np.allclose(adj, a.T)


def test_escape_propagates_through_products():
    inner = WeightedMapOperator({0: {1: 1.0}, 1: None})
    outer = WeightedMapOperator({0: {0: 2.0}, 1: {1: 1.0}})
    prod = inner @ outer
    assert prod.column(1) is None and prod.column(0) == {1: 2.0}
    assert prod.boundary() == [1]
    assert (outer - prod).column(1) is None


def test_adjoint_refuses_escaped_columns():
    with pytest.raises(TruncationEscape):
        WeightedMapOperator({0: None, 1: {0: 1.0}}).adjoint()


def test_from_function_marks_escapes():
    op = WeightedMapOperator.from_function([0, 1, 2], lambda k: [((k + 1), 0.5)])
    assert op.interior() == [0, 1] and op.boundary() == [2]
    assert exact_norm(op) == 0.5


def test_cancellation_drops_entries():
    op = WeightedMapOperator.from_function([0, 1], lambda k: [(0, 1.0), (0, -1.0)])
    assert op.nnz() == 0 and exact_norm(op) == 0.0
