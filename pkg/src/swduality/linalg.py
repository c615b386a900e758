"""Sparse operators on truncated bases and their norms.

A WeightedMapOperator stores, for each column key of its domain, either a
dict {row key: coefficient} or None when the image left the truncation.
Norms are only ever taken over columns that are known (interior).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import TruncationEscape


class WeightedMapOperator:
    def __init__(self, columns: dict, domain=None):
        self.columns = columns            # key -> {row: coeff} | None
        self.domain = list(domain) if domain is not None else list(columns)

    @classmethod
    def from_function(cls, keys, fn, allowed=None):
        """Evaluate fn(key) -> [(row, coeff)] on each key.

        Rows outside `allowed` (default: the keys themselves) mark the column
        as escaped (None) instead of being dropped.
        """
        keys = list(keys)
        allowed = set(keys) if allowed is None else allowed
        cols = {}
        for k in keys:
            col = {}
            ok = True
            for r, c in fn(k):
                if r not in allowed:
                    ok = False
                    break
                if c:
                    col[r] = col.get(r, 0.0) + c
            cols[k] = {r: c for r, c in col.items() if c} if ok else None
        return cls(cols, keys)

    # -- structure
    def interior(self):
        return [k for k in self.domain if self.columns.get(k) is not None]

    def boundary(self):
        return [k for k in self.domain if self.columns.get(k) is None]

    def column(self, k):
        return self.columns.get(k)

    def nnz(self):
        return sum(len(c) for c in self.columns.values() if c)

    def is_partial_permutation(self):
        rows = set()
        for k in self.interior():
            col = self.columns[k]
            if len(col) > 1:
                return False
            for r in col:
                if r in rows:
                    return False
                rows.add(r)
        return True

    # -- algebra
    def __matmul__(self, other: "WeightedMapOperator"):
        cols = {}
        for k in other.domain:
            c = other.columns.get(k)
            if c is None:
                cols[k] = None
                continue
            acc = {}
            ok = True
            for r, a in c.items():
                inner = self.columns.get(r)
                if inner is None:
                    ok = False
                    break
                for s, b in inner.items():
                    acc[s] = acc.get(s, 0.0) + a * b
            cols[k] = {s: v for s, v in acc.items() if v} if ok else None
        return WeightedMapOperator(cols, other.domain)

    def lincomb(self, alpha, other, beta):
        cols = {}
        keys = list(dict.fromkeys(self.domain + other.domain))
        for k in keys:
            a, b = self.columns.get(k, {}), other.columns.get(k, {})
            if a is None or b is None:
                cols[k] = None
                continue
            acc = {r: alpha * v for r, v in a.items()}
            for r, v in b.items():
                acc[r] = acc.get(r, 0.0) + beta * v
            cols[k] = {r: v for r, v in acc.items() if v}
        return WeightedMapOperator(cols, keys)

    def __sub__(self, other):
        return self.lincomb(1.0, other, -1.0)

    def __add__(self, other):
        return self.lincomb(1.0, other, 1.0)

    def scaled(self, c):
        return WeightedMapOperator({k: (None if v is None else {r: c * x for r, x in v.items()})
                                    for k, v in self.columns.items()}, self.domain)

    def adjoint(self):
        """Exact transpose; only defined when no column escaped."""
        if self.boundary():
            raise TruncationEscape("adjoint of an operator with escaped columns")
        cols = {k: {} for k in self.domain}
        for k in self.domain:
            for r, v in self.columns[k].items():
                cols.setdefault(r, {})[k] = v
        return WeightedMapOperator(cols, list(cols))

    def restrict(self, keys):
        keys = list(keys)
        return WeightedMapOperator({k: self.columns.get(k) for k in keys}, keys)

    def max_abs(self):
        return max((abs(v) for k in self.interior() for v in self.columns[k].values()),
                   default=0.0)

    def entries(self):
        return {(r, k): v for k in self.interior() for r, v in self.columns[k].items()}

    def dense(self, keys=None):
        keys = self.interior() if keys is None else list(keys)
        rows = {}
        for k in keys:
            for r in self.columns[k]:
                rows.setdefault(r, len(rows))
        out = np.zeros((len(rows), len(keys)))
        for j, k in enumerate(keys):
            for r, v in self.columns[k].items():
                out[rows[r], j] = v
        return out, list(rows), keys

    def triplets(self, encode=repr):
        return sorted([encode(r), encode(k), v] for (r, k), v in self.entries().items())

    # -- norms
    def norm(self, method="exact"):
        if method == "exact":
            return exact_norm(self)
        if method == "power":
            return power_norm(self).value
        raise ValueError(method)


@dataclass
class NormEstimate:
    value: float
    certified: bool
    iterations: int
    residual: float


def _components(op: WeightedMapOperator, keys):
    """Connected components of the bipartite column/row graph."""
    parent = {}

    def find(a):
        while parent.setdefault(a, a) != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for k in keys:
        find(("c", k))
        for r in op.columns[k]:
            union(("c", k), ("r", r))
    groups = {}
    for k in keys:
        groups.setdefault(find(("c", k)), []).append(k)
    return list(groups.values())


def exact_norm(op: WeightedMapOperator, keys=None) -> float:
    """Partial permutations: max |coeff|.  Otherwise dense SVD per component."""
    keys = op.interior() if keys is None else list(keys)
    keys = [k for k in keys if op.columns[k]]
    if not keys:
        return 0.0
    sub = op.restrict(keys)
    if sub.is_partial_permutation():
        return sub.max_abs()
    best = 0.0
    for comp in _components(op, keys):
        mat, _, _ = op.dense(comp)
        if mat.size == 0:
            continue
        if min(mat.shape) == 1:
            s = float(np.linalg.norm(mat))
        else:
            s = float(np.linalg.svd(mat, compute_uv=False)[0])
        best = max(best, s)
    return best


def power_norm(op: WeightedMapOperator, keys=None, max_iter=200, tol=1e-12) -> NormEstimate:
    """Power iteration on T^T T for each connected component.

    Certified when, on every component, two runs from different starts both
    reach a relative Rayleigh residual ||T^T T v - rho v|| / rho below tol
    and land on the same value.
    """
    keys = op.interior() if keys is None else list(keys)
    keys = [k for k in keys if op.columns[k]]
    if not keys:
        return NormEstimate(0.0, True, 0, 0.0)
    best, certified, iters, worst = 0.0, True, 0, 0.0
    for comp in _components(op, keys):
        rows = {}
        ri, ci, vals = [], [], []
        for j, k in enumerate(comp):
            for r, v in op.columns[k].items():
                ri.append(rows.setdefault(r, len(rows)))
                ci.append(j)
                vals.append(v)
        ri, ci, vals = np.array(ri), np.array(ci), np.array(vals)
        nrow, ncol = len(rows), len(comp)

        def T(x):
            out = np.zeros(nrow)
            np.add.at(out, ri, vals * x[ci])
            return out

        def Tt(y):
            out = np.zeros(ncol)
            np.add.at(out, ci, vals * y[ri])
            return out

        # two deterministic starts: a start that happens to be an eigenvector
        # of a lower singular value converges at once with a tiny residual, so
        # a single residual is not evidence of the top value
        gen = np.random.default_rng(ncol)
        runs = [_power_run(T, Tt, v0, max_iter, tol)
                for v0 in (np.linspace(1.0, 2.0, ncol), gen.standard_normal(ncol))]
        rho = max(r[0] for r in runs)
        res = max(r[1] for r in runs)
        it = max(r[2] for r in runs)
        if abs(runs[0][0] - runs[1][0]) > 1e-9 * max(rho, 1e-300):
            res = math.inf
        certified = certified and res < tol
        iters = max(iters, it)
        worst = max(worst, res)
        best = max(best, math.sqrt(max(rho, 0.0)))
    return NormEstimate(best, certified, iters, worst)


def _power_run(T, Tt, v, max_iter, tol):
    v = v / np.linalg.norm(v)
    rho, res, it = 0.0, math.inf, 0
    for it in range(1, max_iter + 1):
        w = Tt(T(v))
        rho = float(v @ w)
        if rho <= 0:
            res = 0.0
            break
        res = float(np.linalg.norm(w - rho * v)) / rho
        if res < tol:
            break
        v = w / np.linalg.norm(w)
    return rho, res, it


def dual_norm(op: WeightedMapOperator, keys=None):
    """(exact, power estimate) pair for cross-checking."""
    return exact_norm(op, keys), power_norm(op, keys)
