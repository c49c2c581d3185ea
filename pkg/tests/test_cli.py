import csv
import json
import shutil
import subprocess
import sys

import pytest

from shrinkerlab import catalog
from shrinkerlab.cli import main
from shrinkerlab.cli.operations import REGISTRY
from shrinkerlab.cli.runner import parse_overrides, parse_value, scenarios_from_config
from shrinkerlab.errors import ValidationError


def write(tmp_path, text, name="suite.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def body(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# generated ")
    return lines[1:]


def rows(path):
    return list(csv.DictReader(line for line in body(path) if not line.startswith("#")))


PLANE_F = """
[[scenario]]
id = "plane-F"
operation = "eval_F"
surface = "plane"
t = [1.0]
expect = 1.0
"""


def test_list_contains_catalog(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    for needle in ("Plane(n=2, m=1)", "RoundSphere(n=2, m=1, k=2, rho=2)",
                   "RoundCylinder(n=2, m=1, k=1, rho=1.41421356237)", "xi_3^2", "bump-up"):
        assert needle in out


def test_list_grows_with_fixtures(tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    main(["list", "--fixtures", str(empty)])
    base = capsys.readouterr().out
    assert "fixtures:" not in base
    shutil.copy(catalog.PACKAGE_FIXTURES / "graph-perturbed.graph", empty / "extra.graph")
    main(["list", "--fixtures", str(empty)])
    grown = capsys.readouterr().out
    assert len(grown.splitlines()) == len(base.splitlines()) + 2
    assert "extra" in grown
    # deterministic
    main(["list", "--fixtures", str(empty)])
    assert capsys.readouterr().out == grown


def test_single_scenario_passes(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", write(tmp_path, PLANE_F), "--out-dir", str(out)]) == 0
    r = rows(out / "plane-F.csv")
    assert r == [{"t": "1.0", "F": r[0]["F"]}] and abs(float(r[0]["F"]) - 1) < 1e-8
    summary = json.loads((out / "summary.json").read_text())
    assert summary["passed"] == summary["total"] == 1
    rec = json.loads((out / "plane-F.json").read_text(encoding="utf-8"))
    assert rec["status"] == "pass" and rec["anchor"] == "Gaussian area F_t"
    assert "PASS" in capsys.readouterr().out


def test_json_has_stable_key_order(tmp_path):
    out = tmp_path / "out"
    main(["run", "--config", write(tmp_path, PLANE_F), "--out-dir", str(out)])
    text = (out / "plane-F.json").read_text()
    data = json.loads(text)
    assert text == json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def test_monotonicity_ledger_report(tmp_path):
    cfg = write(tmp_path, """
[[scenario]]
id = "ledger"
operation = "verify_monotonicity"
surface = "exterior-plane"
t1 = 1.0
t2 = 4.0
max_defect = 1e-6
""")
    out = tmp_path / "out"
    assert main(["run", "--config", cfg, "--out-dir", str(out)]) == 0
    quantities = [r["quantity"] for r in rows(out / "ledger.csv")]
    assert quantities == ["F_t1", "F_t2", "lhs", "boundary", "normal", "defect"]


@pytest.mark.parametrize("text, needle", [
    (PLANE_F.replace('"plane"', '"no-such-surface"'), "unknown id 'no-such-surface'"),
    (PLANE_F.replace('"eval_F"', '"eval_Q"'), "unknown operation"),
    (PLANE_F + "bogus = 3\n", "unknown parameter(s) bogus"),
    (PLANE_F.replace("t = [1.0]", "t = [-1.0]"), "positive"),
    (PLANE_F.replace("t = [1.0]", "t = [1.0]\nphi = 3"), "unknown parameter"),
    (PLANE_F + PLANE_F, "duplicate id"),
    ("[[scenario]]\nid = \nfoo", "line 9"),
    ("""
[[scenario]]
id = "I"
operation = "eval_I"
surface = "plane"
X0 = [4.0, 0.0, 0.0]
t0 = -2.0
p = 2.0
""", "t0 must lie in [-1, 0)"),
    ("""
[[scenario]]
id = "phi"
operation = "eval_Xi"
surface = "circle"
t = [1.0]
phi = ["xi_3"]
""", "ambient dimension"),
])
def test_validation_errors_exit_2_without_output(tmp_path, capsys, text, needle):
    out = tmp_path / "out"
    good = PLANE_F.replace("plane-F", "first")
    code = main(["run", "--config", write(tmp_path, good + text), "--out-dir", str(out)])
    assert code == 2
    assert needle in capsys.readouterr().err
    assert not out.exists()


def test_failing_check_exits_1(tmp_path):
    out = tmp_path / "out"
    cfg = write(tmp_path, PLANE_F.replace("expect = 1.0", "expect = 1.1"))
    assert main(["run", "--config", cfg, "--out-dir", str(out)]) == 1
    rec = json.loads((out / "plane-F.json").read_text())
    assert rec["status"] == "fail" and not rec["checks"][0]["passed"]


def test_precondition_failure_is_forwarded(tmp_path, capsys):
    cfg = write(tmp_path, """
[[scenario]]
id = "not-a-shrinker"
operation = "eval_F_prime"
surface = { kind = "RoundSphere", n = 2, rho = 1.0 }
t = [1.0]
""")
    out = tmp_path / "out"
    assert main(["run", "--config", cfg, "--out-dir", str(out)]) == 1
    rec = json.loads((out / "not-a-shrinker.json").read_text())
    assert rec["status"] == "error"
    assert rec["error"].startswith("PreconditionError: ")
    assert "not a self-shrinker" in capsys.readouterr().out


def test_env_var_overrides_out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("SHRINKERLAB_OUT", str(tmp_path / "env"))
    main(["run", "--config", write(tmp_path, PLANE_F), "--out-dir", str(tmp_path / "flag")])
    assert (tmp_path / "env" / "plane-F.csv").exists()
    assert not (tmp_path / "flag").exists()


def test_group_subcommand_builds_a_scenario(tmp_path):
    out = tmp_path / "out"
    code = main(["functional", "eval_F", "--surface", "sphere", "--set", "t=[1.0, 2.0]",
                 "--out-dir", str(out)])
    assert code == 0
    assert [r["t"] for r in rows(out / "eval_F.csv")] == ["1.0", "2.0"]
    code = main(["moment", "laplace_asymptotic", "--set", "p=[1e4]",
                 "--set", "max_rel_error=[0.02]", "--out-dir", str(out)])
    assert code == 0


def test_group_subcommand_filters_config(tmp_path, capsys):
    cfg = write(tmp_path, PLANE_F + """
[[scenario]]
id = "alpha"
operation = "alpha_scan"
alpha = [0.5]
expect_sup = 1.0
tol = 1e-4
""")
    out = tmp_path / "out"
    assert main(["regularity", "--config", cfg, "--out-dir", str(out)]) == 0
    assert (out / "alpha.csv").exists() and not (out / "plane-F.csv").exists()
    assert main(["cone", "--config", cfg, "--out-dir", str(out)]) == 2


def test_overrides(tmp_path):
    cfg = write(tmp_path, PLANE_F)
    out = tmp_path / "out"
    assert main(["run", "--config", cfg, "--out-dir", str(out), "--set", "plane-F.expect=2"]) == 1
    assert main(["run", "--config", cfg, "--out-dir", str(out), "--set", "nope.t=1"]) == 2
    assert parse_value("[1, 2.5]") == [1, 2.5]
    assert parse_value("plane") == "plane"
    assert parse_overrides(["a.t=1", "tol=1e-3"]) == {"a": {"t": 1}, None: {"tol": 1e-3}}
    with pytest.raises(ValidationError):
        parse_overrides(["novalue"])


def test_global_tol_feeds_checks(tmp_path):
    cfg = write(tmp_path, PLANE_F.replace("expect = 1.0", "expect = 1.001"))
    out = tmp_path / "out"
    assert main(["run", "--config", cfg, "--out-dir", str(out)]) == 1
    assert main(["run", "--config", cfg, "--out-dir", str(out), "--tol", "1e-2"]) == 0


def test_seeded_cross_sections_are_reproducible(tmp_path):
    cfg = write(tmp_path, """
[[scenario]]
id = "dev"
operation = "cone_deviation"
surface = "cylinder-mesh"
scales = [1.0, 1.5]
r = 2.0
count = 32
""")
    a, b = tmp_path / "a", tmp_path / "b"
    main(["run", "--config", cfg, "--out-dir", str(a), "--seed", "11"])
    main(["run", "--config", cfg, "--out-dir", str(b), "--seed", "11"])
    assert body(a / "dev.csv") == body(b / "dev.csv")


def test_parallel_run_matches_serial(tmp_path):
    cfg = write(tmp_path, PLANE_F + """
[[scenario]]
id = "sphere-G"
operation = "eval_G"
surface = "sphere"
t = [0.5, 2.0]
require_sign = true

[[scenario]]
id = "bump"
operation = "moment_separation"
moment = "bump-down"
k = [200]
expect_sign = -1
""")
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", cfg, "--out-dir", str(a), "--jobs", "1"]) == 0
    assert main(["run", "--config", cfg, "--out-dir", str(b), "--jobs", "3"]) == 0
    for name in ("plane-F.csv", "sphere-G.csv", "bump.csv", "summary.csv"):
        assert body(a / name) == body(b / name)


def test_every_operation_has_a_group_and_anchor():
    for op in REGISTRY.values():
        assert op.anchor and op.group in ("functional", "monotonicity", "cone", "moment",
                                          "regularity", "graph")
    doc = {"scenario": [{"id": "x", "operation": "graph_residual", "surface": "plane"}]}
    with pytest.raises(ValidationError, match="does not take a 'surface'"):
        scenarios_from_config(doc)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "shrinkerlab", "list"], capture_output=True,
                          text=True, check=True)
    assert "surfaces:" in proc.stdout
