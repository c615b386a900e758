"""Acceptance criteria 1-12, each printing one PASS/FAIL line.

The suites run once per session through the same entry point as the CLI;
criterion 12 reruns them in fresh interpreters and compares the reports
byte for byte with timings removed.
"""

import json
import os
import pathlib
import subprocess
import sys
import time

import pytest

from swduality import config, ktheory
from swduality.suites import run

ROOT = pathlib.Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
MODELS = ("full_2shift", "golden_sft", "golden_torus")
MODEL_SUITES = ("axioms", "homoclinic", "partition", "projection", "operators", "wg")
KT_CONFIGS = ("three_shift_ktheory", "fibonacci_ktheory", "twisted_pair_ktheory")
CORPUS_SUITES = ("duality", "pv")


def _jobs():
    jobs = [(c, s) for c in MODELS for s in MODEL_SUITES]
    jobs += [(c, "ktheory") for c in KT_CONFIGS]
    jobs += [("corpus", s) for s in CORPUS_SUITES]
    return jobs


@pytest.fixture(scope="module")
def runs():
    out = {}
    t0 = time.perf_counter()
    for name, suite in _jobs():
        cfg = config.load(CONFIGS / f"{name}.json")
        start = time.perf_counter()
        rep = run(cfg, suite)
        out[(name, suite)] = {"report": rep.to_json(), "text": rep.dumps(),
                              "wall": time.perf_counter() - start}
    out["__total__"] = time.perf_counter() - t0
    return out


@pytest.fixture
def verdict(capsys):
    def say(n, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {n} {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, f"criterion {n}: {detail}"
    return say


def check(runs, name, suite, check_name):
    for c in runs[(name, suite)]["report"]["checks"]:
        if c["name"] == check_name:
            return c
    raise KeyError(check_name)


def test_criterion_01_axioms(runs, verdict):
    parts, ok = [], True
    for name in MODELS:
        c = check(runs, name, "axioms", "bracket_axioms")
        v = c["values"]
        t = runs[(name, "axioms")]["report"]["timings"]["bracket_axioms"]
        bad = sum(v["violations"].values())
        ok &= v["samples"] >= 10000 and bad == 0 and t < 30 and c["status"] == "PASS"
        parts.append(f"{name}: {v['samples']} samples, {bad} violations, {t:.1f}s")
    verdict(1, ok, "; ".join(parts))


def test_criterion_02_uniqueness(runs, verdict):
    v = check(runs, "full_2shift", "axioms", "uniqueness_scan")["values"]
    verdict(2, v["pairs"] >= 1000 and v["mismatches"] == 0,
            f"{v['pairs']} pairs, {v['mismatches']} mismatches")


def test_criterion_03_projection(runs, verdict):
    parts, ok = [], True
    for name in MODELS:
        rep = runs[(name, "projection")]["report"]
        pr = check(runs, name, "projection", "projection")["values"]
        hp = check(runs, name, "projection", "homotopy_projections")["values"]
        he = check(runs, name, "projection", "homotopy_endpoints")["values"]
        fr = check(runs, name, "projection", "fiber_rank")["values"]
        end = max(he.values())
        t = rep["timings"]["total"]
        ok &= (pr["idempotency"] <= 1e-9 and pr["symmetry"] == 0 and pr["pairs"] <= 2000
               and hp["steps"] == 32 and hp["max_idempotency"] <= 1e-9
               and hp["max_symmetry"] == 0 and end <= 1e-12 and t < 120
               and fr["block_eigs_near_one"] == fr["block_fibers"])
        parts.append(f"{name}: idem {pr['idempotency']:.1e} sym {pr['symmetry']} "
                     f"pairs {pr['pairs']} homotopy {hp['steps']} steps endpoint {end:.1e} "
                     f"{t:.1f}s")
    verdict(3, ok, "; ".join(parts))


def test_criterion_04_rank(runs, verdict):
    parts, ok = [], True
    for name in MODELS:
        v = check(runs, name, "operators", "product_rank")["values"]
        ok &= v["pairs"] >= 200 and v["max_rank"] <= 1
        parts.append(f"{name}: {v['pairs']} pairs, max rank {v['max_rank']}")
    verdict(4, ok, "; ".join(parts))


def test_criterion_05_decay(runs, verdict):
    parts, ok = [], True
    for name in MODELS:
        v = check(runs, name, "operators", "decay_exact_zero")["values"]
        Ns = [n for pair in v["N"] for n in pair]
        good = (v["pairs"] >= 50 and len(v["N"]) == v["pairs"] and v["not_vanishing"] == 0
                and v["incomplete_enumerations"] == 0
                and all(n is not None and n <= 30 for n in Ns))
        ok &= good
        parts.append(f"{name}: {v['pairs']} pairs, max N {max(Ns) if Ns else None}")
    verdict(5, ok, "; ".join(parts))


def test_criterion_06_commutators(runs, verdict):
    parts, ok = [], True
    for name in MODELS:
        v = check(runs, name, "operators", "asymptotic_commutator")["values"]
        agree = check(runs, name, "operators", "norm_evaluators_agree")["values"]["max_difference"]
        f30, s30 = v["first"][30], v["second"][30]
        ok &= f30 < 1e-6 and s30 < 1e-6 and agree <= 1e-10
        parts.append(f"{name}: n=30 {f30:.1e}/{s30:.1e} evaluators {agree:.0e}")
    verdict(6, ok, "; ".join(parts))


def test_criterion_07_two_sided(runs, verdict):
    parts, ok = [], True
    for name in MODELS:
        z = check(runs, name, "operators", "two_sided_u_commutators")["values"]
        p = check(runs, name, "operators", "two_sided_profile")["values"]
        zero = all(e["max_abs"] == 0.0 and e["columns"] > 0 for e in z.values())
        ok &= len(z) == 3 and zero and p["window"] == 30 and \
            p["left_edge"] < 1e-6 and p["right_edge"] < 1e-6
        parts.append(f"{name}: u-commutators {'0' if zero else 'nonzero'}, edges "
                     f"{p['left_edge']:.1e}/{p['right_edge']:.1e}")
    verdict(7, ok, "; ".join(parts))


def test_criterion_08_wg(runs, verdict):
    parts, ok = [], True
    for name in MODELS:
        ww = check(runs, name, "wg", "wstar_w")["values"]["residual"]
        wwt = check(runs, name, "wg", "w_wstar")["values"]["residual"]
        conj = check(runs, name, "wg", "conjugation")["values"]["max_difference"]
        it = check(runs, name, "wg", "intertwine")["values"]["sequence"]
        ok &= ww <= 1e-9 and wwt <= 1e-9 and conj <= 1e-12 and len(it) > 30 and it[30] < 1e-6
        parts.append(f"{name}: W*W {ww:.0e} WW* {wwt:.0e} conj {conj:.0e} n=30 {it[30]:.1e}")
    verdict(8, ok, "; ".join(parts))


def test_criterion_09_ktheory(runs, verdict):
    parts, ok = [], True
    want = {"three_shift_ktheory": "Z/2", "fibonacci_ktheory": "0",
            "twisted_pair_ktheory": "Z/2 + Z/2"}
    for name in KT_CONFIGS:
        c = check(runs, name, "ktheory", "k_groups")
        g = c["values"]["groups"]
        ok &= c["status"] == "PASS" and not c["values"]["mismatches"]
        parts.append(f"{name}: K0 {c['values']['pretty']['K0_u']} (want {want[name]})")
    # independent statement of the three expected values
    k3 = ktheory.ruelle_k_groups([[3]])
    kf = ktheory.ruelle_k_groups([[1, 1], [1, 0]])
    kp = ktheory.ruelle_k_groups([[1, 2], [2, 1]])
    ok &= k3.K0_u.invariant_factors == (2,) and k3.K0_u.free_rank == 0
    ok &= all(getattr(kf, k).is_trivial() for k in ("K0_u", "K1_u", "K0_s", "K1_s"))
    ok &= kp.K0_u.invariant_factors == (2, 2) and kp.K0_s.invariant_factors == (2, 2)
    snf = [check(runs, n, "ktheory", "snf_self_check")["values"] for n in KT_CONFIGS]
    ok &= all(s["matrices"] >= 500 and s["failures"] == 0 for s in snf)
    parts.append(f"SNF self-check {snf[0]['matrices']} matrices x{len(snf)}, "
                 f"{sum(s['failures'] for s in snf)} failures")
    verdict(9, ok, "; ".join(parts))


def test_criterion_10_duality(runs, verdict):
    c = check(runs, "corpus", "duality", "duality_corpus")
    t = runs[("corpus", "duality")]["report"]["timings"]["total"]
    v = c["values"]
    verdict(10, c["status"] == "PASS" and v["matrices"] >= 100 and v["passed"] == v["matrices"]
            and t < 10, f"{v['passed']}/{v['matrices']} matrices in {t:.2f}s")


def test_criterion_11_pv(runs, verdict):
    eq = check(runs, "corpus", "pv", "pv_ranks_equal")
    cross = check(runs, "corpus", "pv", "pv_cross_method")
    swap = check(runs, "corpus", "pv", "pv_swap")["values"]
    ok = (eq["status"] == cross["status"] == "PASS" and swap["U"] == [1, 1]
          and swap["S"] == [1, 1])
    verdict(11, ok, f"{eq['values']['matrices']} matrices, swap U={swap['U']} S={swap['S']}")


def test_criterion_12_time_and_determinism(runs, verdict, tmp_path):
    total = runs["__total__"]
    env = dict(os.environ, PYTHONHASHSEED="4711")
    diffs = []
    for (name, suite) in _jobs():
        out = tmp_path / f"{name}.{suite}.json"
        proc = subprocess.run(
            [sys.executable, "-m", "swduality.cli", "run", "--config",
             str(CONFIGS / f"{name}.json"), "--suite", suite, "--out", str(out), "-q"],
            env=env, capture_output=True, text=True)
        if proc.returncode != 0:
            diffs.append(f"{name}/{suite}: exit {proc.returncode} {proc.stderr.strip()}")
            continue
        a = json.loads(runs[(name, suite)]["text"])
        b = json.loads(out.read_text())
        a.pop("timings")
        b.pop("timings")
        if json.dumps(a, indent=1, sort_keys=True) != json.dumps(b, indent=1, sort_keys=True):
            diffs.append(f"{name}/{suite}")
    verdict(12, total < 300 and not diffs,
            f"all suites {total:.1f}s; {len(_jobs())} reports rerun, "
            f"{len(diffs)} differ{': ' + ', '.join(diffs) if diffs else ''}")
