import json

import pytest

from swduality import REPORT_SCHEMA_VERSION, config
from swduality.cli import main
from swduality.errors import ConfigError
from swduality.report import FAIL, PASS, SKIPPED, ReportError, VerificationReport, compare_reports


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return str(p)


KT = {"seed": 1, "ktheory": {"matrix": [[3]], "snf_random": 20}}


# -- config validation

def test_defaults_are_filled():
    cfg = config.validate({"seed": 5})
    assert cfg["axioms"]["samples"] == 10000
    assert cfg["projection"]["homotopy_steps"] == 32
    assert str(cfg["operators"]["delta"]) == "1/8"


@pytest.mark.parametrize("raw, msg", [
    ({}, "seed is mandatory"),
    ({"seed": 1, "modle": {}}, "unknown config sections"),
    ({"seed": 1, "axioms": {"sample": 3}}, "unknown keys"),
    ({"seed": 1, "axioms": {"samples": -1}}, ">= 0"),
    ({"seed": 1, "operators": {"delta": "abc"}}, "rational"),
    ({"seed": 1, "operators": {"delta": 0}}, "positive"),
    ({"seed": 1, "model": {"kind": "cat"}}, "expected one of"),
    ({"seed": 1, "model": {"matrix": [[1, 2]]}}, "square integer matrix"),
    ({"seed": True}, "integer"),
    ({"seed": 1, "orbits": {"P": [{"period": 0}]}}, ">= 1"),
    ({"seed": 1, "ktheory": {"expected": {"K2": {}}}}, "subset"),
])
def test_validation_errors(raw, msg):
    with pytest.raises(ConfigError, match=msg):
        config.validate(raw)


def test_rationals_accept_several_spellings():
    for v in ("1/8", 0.125, "0.125"):
        assert str(config.validate({"seed": 1, "operators": {"delta": v}})["operators"]["delta"]) == "1/8"


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        config.load(tmp_path / "missing.json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        config.load(write(tmp_path, "bad.json", "{"))


# -- reports

def test_report_status_and_cleaning():
    rep = VerificationReport("x", {})
    rep.skip("a", "nothing to do")
    assert rep.status == SKIPPED
    rep.check("b", True, {"v": float("inf")})
    assert rep.status == PASS
    rep.check("c", False)
    assert rep.status == FAIL
    data = json.loads(rep.dumps())
    assert data["checks"][1]["values"]["v"] == "inf"
    assert data["schema_version"] == REPORT_SCHEMA_VERSION


def test_compare_ignores_timings_only():
    a = VerificationReport("x", {"seed": 1})
    a.check("c", True, {"v": 1.0})
    b = VerificationReport("x", {"seed": 1})
    b.check("c", True, {"v": 1.0})
    a.timings["total"], b.timings["total"] = 1.0, 2.0
    assert compare_reports(a.to_json(), b.to_json()) == []
    b.checks[0]["values"]["v"] = 2.0
    d = compare_reports(a.to_json(), b.to_json())
    assert [x["path"] for x in d] == ["/checks/0/values/v"]
    bad = b.to_json()
    bad["schema_version"] = "0"
    with pytest.raises(ReportError, match="schema version"):
        compare_reports(a.to_json(), bad)


# -- command line

def test_run_pass_and_report(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["run", "--config", write(tmp_path, "c.json", KT), "--suite", "ktheory",
                 "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["status"] == "PASS" and data["suite"] == "ktheory"
    assert set(data) == {"schema_version", "artifact_version", "suite", "status", "config",
                         "checks", "timings"}
    assert "PASS ktheory" in capsys.readouterr().out


def test_run_fail_exit_code(tmp_path):
    cfg = dict(KT, ktheory={"matrix": [[3]], "snf_random": 0,
                            "expected": {"K0_u": {"free_rank": 1}}})
    out = tmp_path / "r.json"
    assert main(["run", "--config", write(tmp_path, "c.json", cfg), "--suite", "ktheory",
                 "--out", str(out)]) == 1
    data = json.loads(out.read_text())
    assert data["status"] == "FAIL"
    assert [c["status"] for c in data["checks"]] == ["FAIL", "SKIPPED"]


def test_zero_samples_is_skipped(tmp_path):
    cfg = {"seed": 3, "model": {"kind": "sft", "matrix": [[1, 1], [1, 1]]},
           "axioms": {"samples": 0, "uniqueness_pairs": 0}}
    out = tmp_path / "r.json"
    assert main(["run", "--config", write(tmp_path, "c.json", cfg), "--suite", "axioms",
                 "--out", str(out), "-q"]) == 0
    assert json.loads(out.read_text())["status"] == "SKIPPED"


@pytest.mark.parametrize("cfg", [
    {"ktheory": {"matrix": [[3]]}},                       # no seed
    {"seed": 1, "ktheory": {"matrx": [[3]]}},             # typo
    {"seed": 1, "model": {"kind": "sft", "matrix": [[1, 1], [1, 1]]},
     "orbits": {"P": [{"period": 40}], "Q": [{"period": 1, "index": 1}]}},  # resource
])
def test_run_config_and_resource_errors(tmp_path, cfg, capsys):
    suite = "homoclinic" if "orbits" in cfg else "ktheory"
    code = main(["run", "--config", write(tmp_path, "c.json", cfg), "--suite", suite,
                 "--out", str(tmp_path / "r.json")])
    assert code == 2
    assert "swduality:" in capsys.readouterr().err
    assert not (tmp_path / "r.json").exists()


def test_usage_errors(tmp_path):
    with pytest.raises(SystemExit) as e:
        main(["run", "--config", "x.json", "--suite", "nope", "--out", "r.json"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == 2


def test_unwritable_output(tmp_path):
    code = main(["run", "--config", write(tmp_path, "c.json", KT), "--suite", "ktheory",
                 "--out", str(tmp_path / "no" / "such" / "dir.json")])
    assert code == 2


def test_diff_behaviour(tmp_path, capsys):
    c1 = write(tmp_path, "c1.json", KT)
    c2 = write(tmp_path, "c2.json", dict(KT, ktheory={"matrix": [[2]], "snf_random": 20}))
    r1, r1b, r2 = (str(tmp_path / n) for n in ("r1.json", "r1b.json", "r2.json"))
    for c, r in ((c1, r1), (c1, r1b), (c2, r2)):
        assert main(["run", "--config", c, "--suite", "ktheory", "--out", r, "-q"]) == 0
    assert main(["diff", r1, r1b]) == 0
    assert "no differences" in capsys.readouterr().out
    assert main(["diff", r1, r2]) == 1
    out = capsys.readouterr().out
    assert "/config/ktheory/matrix" in out and "timings" not in out
    assert main(["diff", r1, write(tmp_path, "junk.json", "{not json")]) == 2
    assert main(["diff", r1, str(tmp_path / "missing.json")]) == 2
    other = json.loads(open(r1).read())
    other["schema_version"] = "999"
    assert main(["diff", r1, write(tmp_path, "v.json", other)]) == 2


def test_reports_are_deterministic(tmp_path):
    c = write(tmp_path, "c.json", {"seed": 9, "model": {"kind": "sft", "matrix": [[1, 1], [1, 0]]},
                                   "axioms": {"samples": 300, "uniqueness_pairs": 50}})
    texts = []
    for i in range(2):
        r = tmp_path / f"r{i}.json"
        assert main(["run", "--config", c, "--suite", "axioms", "--out", str(r), "-q"]) == 0
        d = json.loads(r.read_text())
        d.pop("timings")
        texts.append(json.dumps(d, sort_keys=True))
    assert texts[0] == texts[1]
