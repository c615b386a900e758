"""Suite runners: config in, VerificationReport out."""

from __future__ import annotations

import hashlib
import json
import math
import random
import time
from contextlib import contextmanager

from . import ktheory as kt
from .config import SUITES, echo, require
from .dynamics import check_axioms, uniqueness_scan
from .errors import CertificationError, ConfigError, ResourceError, ValidationError
from .linalg import exact_norm, power_norm
from .operators import (
    WG, Conjugate, PiS, PiSU, PiU, PiUU, Product, ShiftUnitary, TwoSidedTruncation,
    alpha_s, asymptotic_commutator, block_profile, decay_sequence, first_below,
    interacting_pair, product_rank, random_stable_element, random_unstable_element,
    shift_unitary, two_sided_commutator, wg_adjoint_oracle, wg_conjugation, wg_intertwine,
    wg_star_w_residual, wg_w_star_residual)
from .orbits import (
    HomoclinicBasis, check_homoclinic, enumerate_homoclinic, periodic_points, select_orbits)
from .partition import (
    ProjectionOperator, PushedPartition, build_partition, cover_radius_check, epsilon_X_prime,
    fiber_rank_check, homotopy_path, pg_matrix, projection_residuals, tensor_basis, unity_check)
from .report import VerificationReport
from .sft import SftModel
from .torus import TorusModel


class Context:
    """Lazily built objects shared by the checks of one suite run."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.seed = cfg["seed"]
        self._cache = {}

    def _get(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    @property
    def model(self):
        def build():
            require(self.cfg, "model", "kind", "matrix")
            mc = self.cfg["model"]
            if mc["kind"] == "sft":
                return SftModel(mc["matrix"])
            return TorusModel(mc["matrix"])
        return self._get("model", build)

    @property
    def orbits(self):
        def build():
            require(self.cfg, "orbits", "P", "Q")
            oc = self.cfg["orbits"]
            return (select_orbits(self.model, oc["P"], oc["max_period"]),
                    select_orbits(self.model, oc["Q"], oc["max_period"]))
        return self._get("orbits", build)

    @property
    def basis(self):
        def build():
            P, Q = self.orbits
            return enumerate_homoclinic(self.model, P, Q, self.cfg["basis"]["size_bound"])
        return self._get("basis", build)

    @property
    def eps_prime(self):
        pc = self.cfg["partition"]
        return self._get("eps_prime", lambda: epsilon_X_prime(
            self.model, samples=pc["eps_prime_samples"], seed=self.seed,
            certify=pc["eps_prime_samples"] > 0))

    @property
    def partition(self):
        pc = self.cfg["partition"]
        return self._get("partition", lambda: build_partition(
            self.model, self.basis, pc["epsilon"], pc["require_phi_disjoint"],
            eps_prime=self.eps_prime))

    def rng(self, tag):
        return random.Random(f"{self.seed}:{tag}")


@contextmanager
def timed(rep, name):
    t = time.perf_counter()
    try:
        yield
    finally:
        rep.timings[name] = rep.timings.get(name, 0.0) + time.perf_counter() - t


def _digest(obj):
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()


# ------------------------------------------------------------------ suites

def suite_axioms(ctx, rep):
    ac = ctx.cfg["axioms"]
    m = ctx.model
    if ac["samples"] == 0:
        rep.skip("bracket_axioms", "0 samples requested: nothing to check")
    else:
        with timed(rep, "bracket_axioms"):
            ar = check_axioms(m, ac["samples"], ctx.seed)
        rep.check("bracket_axioms", ar.passed, ar.to_json())
    if ac["uniqueness_pairs"] == 0:
        rep.skip("uniqueness_scan", "0 pairs requested")
    elif not isinstance(m, SftModel):
        rep.skip("uniqueness_scan", "brute-force membership scan needs a symbolic model")
    else:
        with timed(rep, "uniqueness_scan"):
            checked, bad, wit = uniqueness_scan(m, ac["uniqueness_pairs"], ctx.seed)
        rep.check("uniqueness_scan", bad == 0 and checked == ac["uniqueness_pairs"],
                  {"pairs": checked, "mismatches": bad}, witnesses=wit[:5])


def suite_homoclinic(ctx, rep):
    m = ctx.model
    maxp = ctx.cfg["orbits"]["max_period"]
    with timed(rep, "periodic_points"):
        counts = {}
        for n in range(1, min(6, maxp) + 1):
            counts[str(n)] = sum(len(o.points) for o in periodic_points(m, n, maxp))
        P, Q = ctx.orbits
    rep.check("periodic_points", True, {
        "points_with_period_dividing_n": counts,
        "P": [o.to_json(m) for o in P], "Q": [o.to_json(m) for o in Q]})
    with timed(rep, "enumerate"):
        B = ctx.basis
        bad = check_homoclinic(B)
    rep.check("homoclinic_membership", not bad and len(B) > 0,
              {"size": len(B), "size_bound": B.size_bound, "bad": len(bad)},
              witnesses=[m.encode(x) for x in bad[:5]])
    with timed(rep, "phi_invariance"):
        imgs = [m.phi(x) for x in B.points] + [m.phi_inv(x) for x in B.points]
        img_basis = HomoclinicBasis(m, B.P, B.Q, imgs, B.size_bound)
        bad = check_homoclinic(img_basis)
    rep.check("phi_invariance", not bad, {"images_checked": len(imgs), "bad": len(bad)})
    with timed(rep, "determinism"):
        again = enumerate_homoclinic(m, P, Q, B.size_bound)
    dump = B.dump()
    rep.check("deterministic_enumeration", again.dump() == dump,
              {"sha256": _digest(dump), "first": dump[:3]})


def suite_partition(ctx, rep):
    pc = ctx.cfg["partition"]
    m = ctx.model
    try:
        with timed(rep, "eps_prime"):
            ep = ctx.eps_prime
    except CertificationError as e:
        rep.check("eps_prime_certificate", False, reason=str(e))
        return
    rep.check("eps_prime_certificate", True,
              {"eps_prime": str(ep), "value": float(ep), "samples": pc["eps_prime_samples"]})
    with timed(rep, "build"):
        part = ctx.partition
    rep.check("build_partition", True, part.describe())
    if pc["unity_samples"]:
        with timed(rep, "unity"):
            worst, viol = unity_check(part, pc["unity_samples"], ctx.seed)
        rep.check("partition_of_unity", worst <= pc["unity_tol"] and viol == 0,
                  {"max_residual": worst, "support_violations": viol,
                   "samples": pc["unity_samples"]})
    else:
        rep.skip("partition_of_unity", "0 samples requested")
    if pc["cover_samples"]:
        with timed(rep, "cover"):
            cov = cover_radius_check(part, pc["cover_samples"], ctx.seed + 1)
        rep.check("cover_radius", cov < float(part.rho),
                  {"max_distance_to_center": cov, "rho": float(part.rho)})
    else:
        rep.skip("cover_radius", "0 samples requested")
    if pc["require_phi_disjoint"]:
        overlap = [g for g in part.centers if m.phi(g) in part.center_index]
        rep.check("phi_disjoint_centers", not overlap, {"overlaps": len(overlap)})
    else:
        rep.skip("phi_disjoint_centers", "not required by config")


def suite_projection(ctx, rep):
    pr = ctx.cfg["projection"]
    with timed(rep, "build"):
        part = ctx.partition
    p = ProjectionOperator(part)
    B = ctx.basis
    xis = ctx.rng("fibers").sample(B.points, min(pr["fibers"], len(B)))
    try:
        with timed(rep, "projection"):
            pairs = tensor_basis(p, xis, cap=pr["max_pairs"])
            op = pg_matrix(p, pairs)
            idem, asym, n_int = projection_residuals(op)
            rank = fiber_rank_check(p, op)
    except ResourceError as e:
        rep.check("projection", False, reason=str(e))
        return
    rep.check("projection", idem <= pr["tol"] and asym == 0.0 and n_int > 0,
              {"pairs": len(pairs), "interior": n_int, "idempotency": idem, "symmetry": asym})
    # each fiber block is a rank-one projection: trace = #fibers = #eigenvalues at 1
    rep.check("fiber_rank", abs(rank["trace"] - rank["fibers"]) < 1e-9
              and rank["block_eigs_near_one"] == rank["block_fibers"], rank)
    if pr["homotopy_fibers"] == 0:
        rep.skip("homotopy", "0 fibers requested")
        return
    with timed(rep, "homotopy"):
        h = homotopy_path(part, pr["homotopy_steps"], xis[:pr["homotopy_fibers"]],
                          cap=pr["max_pairs"])
    worst = max(r["idempotency"] for r in h["residuals"])
    sym = max(r["symmetry"] for r in h["residuals"])
    gap = max(h["gaps"]) if h["gaps"] else 0.0
    rep.check("homotopy_projections", worst <= pr["tol"] and sym == 0.0,
              {"steps": h["steps"], "pairs": h["pairs"], "max_idempotency": worst,
               "max_symmetry": sym})
    rep.check("homotopy_endpoints",
              h["endpoint0_diff"] <= pr["endpoint_tol"] and h["endpoint1_conj_diff"] <= pr["endpoint_tol"],
              {"start_vs_pG": h["endpoint0_diff"], "end_vs_conjugate": h["endpoint1_conj_diff"],
               "end_vs_pushed": h["endpoint1_pushed_diff"]})
    rep.check("homotopy_continuity", gap <= pr["continuity_bound"],
              {"max_adjacent_gap": gap, "bound": pr["continuity_bound"]})


def _desk_pair(ctx, delta, near, tries=200):
    """First seeded interacting pair whose product ab is nonzero."""
    m, B = ctx.model, ctx.basis
    for t in range(tries):
        a, b = interacting_pair(m, B, ctx.rng(f"desk{t}"), delta, near)
        if product_rank(a, b):
            return a, b
    raise ResourceError("no interacting desk pair found; enlarge the basis or 'near'")


def _element_checks(ctx, rep, a):
    oc = ctx.cfg["operators"]
    m, B = ctx.model, ctx.basis
    with timed(rep, "elements"):
        W = Product(a, ShiftUnitary(m, 0)).materialize(B.points, allowed=set(B.points))
        inner = [k for k in W.interior() if W.columns[k]]
        sub = W.restrict(inner)
        ex = exact_norm(sub)
        pw = power_norm(sub).value
        coeffs = [abs(a.coeff(x)) for x in inner]
    rep.check("element_partial_permutation",
              sub.is_partial_permutation() and abs(ex - pw) <= oc["norm_agreement"]
              and ex == max(coeffs, default=0.0),
              {"support_columns": len(inner), "escaped": len(W.boundary()),
               "exact_norm": ex, "power_norm": pw})
    with timed(rep, "shift_unitary"):
        U = shift_unitary(B)
        pts = ctx.rng("unitary").sample(U.interior(), min(oc["unitary_points"], len(U.interior())))
        ok_u = all(U.columns[x] == {m.phi(x): 1.0} for x in pts) and U.is_partial_permutation()
        # u a u* against the conjugation formula, on points where the formula is nonzero
        src = [m.phi(x) for x in inner][:oc["unitary_points"]]
        uau = Product(ShiftUnitary(m, 1), Product(a, ShiftUnitary(m, -1)))
        mism = 0
        for x in src + pts:
            y = m.phi_inv(x)
            want = []
            if a.in_source(y):
                c = a.coeff(y)
                if c:
                    want = [(m.phi(a.h(y)), c)]
            if uau.apply(x) != want or Conjugate(a, 1).apply(x) != want:
                mism += 1
    rep.check("shift_unitary", ok_u and mism == 0,
              {"interior": len(U.interior()), "boundary": len(U.boundary()),
               "checked": len(pts), "conjugation_checked": len(src) + len(pts),
               "conjugation_mismatches": mism})


def suite_operators(ctx, rep):
    oc = ctx.cfg["operators"]
    m, B = ctx.model, ctx.basis
    delta, near, nmax = oc["delta"], oc["near"], oc["n_max"]
    a, b = _desk_pair(ctx, delta, near)
    rep.check("desk_pair", True, {"a": a.describe(), "b": b.describe()})
    _element_checks(ctx, rep, a)

    if oc["rank_pairs"]:
        with timed(rep, "rank"):
            rng = ctx.rng("rank")
            counts = {}
            worst = 0
            for i in range(oc["rank_pairs"]):
                if i % 2:
                    x = random_stable_element(m, B, rng, delta, near)
                    y = random_unstable_element(m, B, rng, delta, near)
                else:
                    x, y = interacting_pair(m, B, rng, delta, near)
                r1, r2 = product_rank(x, y), product_rank(y, x)
                worst = max(worst, r1, r2)
                counts[f"{r1},{r2}"] = counts.get(f"{r1},{r2}", 0) + 1
        rep.check("product_rank", worst <= 1,
                  {"pairs": oc["rank_pairs"], "max_rank": worst, "rank_counts": counts})
    else:
        rep.skip("product_rank", "0 pairs requested")

    if oc["decay_pairs"]:
        with timed(rep, "decay"):
            rng = ctx.rng("decay")
            Ns, bad, incomplete = [], 0, 0
            for _ in range(oc["decay_pairs"]):
                x, y = interacting_pair(m, B, rng, delta, near)
                d = decay_sequence(x, y, nmax)
                if d["N_forward"] is None or d["N_backward"] is None:
                    bad += 1
                if not d["complete"]:
                    incomplete += 1
                Ns.append([d["N_forward"], d["N_backward"]])
        rep.check("decay_exact_zero", bad == 0 and incomplete == 0,
                  {"pairs": oc["decay_pairs"], "n_max": nmax, "not_vanishing": bad,
                   "incomplete_enumerations": incomplete, "N": Ns})
    else:
        rep.skip("decay_exact_zero", "0 pairs requested")

    with timed(rep, "asymptotic_commutator"):
        ac = asymptotic_commutator(a, b, nmax, limit=oc["sample_limit"], seed=ctx.seed)
    thr = oc["threshold"]
    s1 = [r.value for r in ac["first"]]
    s2 = [r.value for r in ac["second"]]
    agree = max(abs(r.value - r.power) for r in ac["first"] + ac["second"])
    rep.check("asymptotic_commutator", s1[-1] < thr and s2[-1] < thr,
              {"first": s1, "second": s2, "first_below": first_below(s1, thr),
               "second_below": first_below(s2, thr),
               "columns": [r.columns for r in ac["first"]]},
              witnesses=[ac["quadrilateral"]] if ac["quadrilateral"] else None)
    rep.check("norm_evaluators_agree", agree <= oc["norm_agreement"], {"max_difference": agree})

    with timed(rep, "two_sided"):
        pts = ctx.rng("two_sided").sample(B.points, min(6, len(B))) + [a.w, a.v, b.w, b.v]
        t = TwoSidedTruncation(pts, oc["window"])
        zeros = {
            "[pi_s(a), pi_u(u)]": two_sided_commutator(t, PiS(a), PiUU(m)),
            "[pi_u(b), pi_s(u)]": two_sided_commutator(t, PiU(b), PiSU()),
            "[pi_s(u), pi_u(u)]": two_sided_commutator(t, PiSU(), PiUU(m)),
        }
        prof = block_profile(a, b, oc["window"], limit=oc["sample_limit"], seed=ctx.seed)
    rep.check("two_sided_u_commutators", all(z["max_abs"] == 0.0 and z["columns"] > 0
                                             for z in zeros.values()), zeros)
    vals = [r.value for r in prof]
    rep.check("two_sided_profile", vals[0] < thr and vals[-1] < thr,
              {"window": oc["window"], "profile": vals, "left_edge": vals[0],
               "right_edge": vals[-1]})


def suite_wg(ctx, rep):
    wc = ctx.cfg["wg"]
    oc = ctx.cfg["operators"]
    m, B = ctx.model, ctx.basis
    with timed(rep, "build"):
        part = ctx.partition
        wg = WG(part)
        wgp = WG(PushedPartition(part))
    chi_norm = math.sqrt(math.fsum(v * v for v in wg.chi.values()))
    rep.check("chi_unit_vector", abs(chi_norm - 1.0) <= wc["tol"], {"norm": chi_norm, "K": part.K})
    rng = ctx.rng("wg")
    ys = rng.sample(B.points, min(wc["ys"], len(B)))
    zs = part.centers[: wc["zs"] // 2] + rng.sample(B.points, wc["zs"] - wc["zs"] // 2)
    with timed(rep, "identities"):
        r1 = wg_star_w_residual(wg, ys, zs)
        p = ProjectionOperator(part)
        pairs = tensor_basis(p, ys[: wc["fibers"]], cap=ctx.cfg["projection"]["max_pairs"])
        r2 = wg_w_star_residual(wg, p, pairs)
        adj = wg_adjoint_oracle(wg, ys)
        conj = wg_conjugation(wg, wgp, ys[:4])
    rep.check("wstar_w", r1 <= wc["tol"], {"residual": r1, "columns": len(ys) * len(zs)})
    rep.check("w_wstar", r2 <= wc["tol"], {"residual": r2, "pairs": len(pairs)})
    rep.check("adjoint_formula", adj <= wc["tol"], {"max_difference": adj})
    rep.check("conjugation", conj <= wc["conj_tol"], {"max_difference": conj})
    delta = wc["delta"] if wc["delta"] is not None else oc["delta"]
    a = random_stable_element(m, B, ctx.rng("wg_element"), delta, oc["near"])
    with timed(rep, "intertwine"):
        it = wg_intertwine(wg, a, wc["n_max"], limit=wc["sample_limit"], seed=ctx.seed)
    seq = it["sequence"]
    agree = max(abs(x - y) for x, y in zip(seq, it["power"]))
    rep.check("intertwine", seq[-1] < wc["threshold"],
              {"element": a.describe(), "sequence": seq,
               "first_below": first_below(seq, wc["threshold"]),
               "evaluator_difference": agree}, witnesses=it["witnesses"][-3:])


def _random_int_matrix(rng, max_size, max_entry):
    r, c = rng.randint(1, max_size), rng.randint(1, max_size)
    return [[rng.randint(-max_entry, max_entry) for _ in range(c)] for _ in range(r)]


def suite_ktheory(ctx, rep):
    kc = ctx.cfg["ktheory"]
    A = kc["matrix"]
    if A is None:
        if ctx.cfg["model"]["kind"] == "sft" and ctx.cfg["model"]["matrix"]:
            A = ctx.cfg["model"]["matrix"]
        else:
            raise ConfigError("ktheory.matrix is required unless the model is an SFT")
    with timed(rep, "groups"):
        g = kt.ruelle_k_groups(A)
    got = g.to_json()
    exp = kc["expected"]
    if exp:
        mism = {}
        for k, want in exp.items():
            wg_ = kt.AbelianGroup(want.get("free_rank", 0), tuple(want.get("invariant_factors", [])))
            if not kt.group_isomorphic(getattr(g, k), wg_):
                mism[k] = {"expected": want, "got": got[k]}
        rep.check("k_groups", not mism, {"matrix": A, "groups": got,
                                         "pretty": {k: str(getattr(g, k)) for k in got},
                                         "mismatches": mism})
    else:
        rep.check("k_groups", True, {"matrix": A, "groups": got,
                                     "pretty": {k: str(getattr(g, k)) for k in got}},
                  reason="no expected values configured; computed only")
    if kc["snf_random"]:
        with timed(rep, "snf"):
            rng = ctx.rng("snf")
            bad = []
            for i in range(kc["snf_random"]):
                M = _random_int_matrix(rng, kc["snf_max_size"], kc["snf_max_entry"])
                if not kt.smith_normal_form(M).verify():
                    bad.append(M)
        rep.check("snf_self_check", not bad, {"matrices": kc["snf_random"], "failures": len(bad)},
                  witnesses=bad[:3])
    else:
        rep.skip("snf_self_check", "0 matrices requested")


def _corpus(spec):
    return kt.load_corpus() if spec == "builtin" else spec


def suite_duality(ctx, rep):
    corpus = _corpus(ctx.cfg["duality"]["corpus"])
    with timed(rep, "verdicts"):
        verdicts = [kt.duality_verdict(A) for A in corpus]
    failed = [v.to_json() for v in verdicts if not v.passed]
    rep.check("duality_corpus", not failed and bool(corpus),
              {"matrices": len(corpus), "passed": len(corpus) - len(failed)}, witnesses=failed[:3])


def suite_pv(ctx, rep):
    pc = ctx.cfg["pv"]
    corpus = _corpus(pc["corpus"])
    rows, bad_eq, bad_cross = [], [], []
    with timed(rep, "ranks"):
        for A in list(corpus) + list(pc["extra"]):
            r = kt.pv_ranks(A)
            g = kt.ruelle_k_groups(A)
            if r["U"] != r["S"]:
                bad_eq.append(A)
            if r["U"] != (g.K0_u.free_rank, g.K1_u.free_rank) or \
                    r["S"] != (g.K0_s.free_rank, g.K1_s.free_rank):
                bad_cross.append(A)
            rows.append({"matrix": A, "U": list(r["U"]), "S": list(r["S"])})
    rep.check("pv_ranks_equal", not bad_eq, {"matrices": len(rows)}, witnesses=bad_eq[:3])
    rep.check("pv_cross_method", not bad_cross, {"matrices": len(rows)}, witnesses=bad_cross[:3])
    swap = [[0, 1], [1, 0]]
    r = kt.pv_ranks(swap)
    rep.check("pv_swap", r["U"] == (1, 1) and r["S"] == (1, 1),
              {"U": list(r["U"]), "S": list(r["S"])})
    rep.check("pv_table", True, {"rows": rows[: len(pc["extra"]) + 5]})


RUNNERS = {
    "axioms": suite_axioms, "homoclinic": suite_homoclinic, "partition": suite_partition,
    "projection": suite_projection, "operators": suite_operators, "wg": suite_wg,
    "ktheory": suite_ktheory, "duality": suite_duality, "pv": suite_pv,
}
assert tuple(RUNNERS) == SUITES


def run(cfg, suite) -> VerificationReport:
    """Run one suite.  ConfigError / ResourceError / ValidationError propagate."""
    if suite not in RUNNERS:
        raise ConfigError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    rep = VerificationReport(suite, echo(cfg))
    ctx = Context(cfg)
    with timed(rep, "total"):
        RUNNERS[suite](ctx, rep)
    return rep
