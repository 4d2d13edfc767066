import json
import subprocess
import sys

import pytest

from overcommit.cli import main


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({
        "workload": {"job_count": 80, "kind": "bernoulli"},
        "machine_sizes": [32],
        "variants": ["no-overcommit", "gaussian"],
        "alpha_grid": [0.9, 0.99],
        "replicas": 2,
        "mc_samples": 200,
    }))
    return path


def test_run_writes_identical_csv(config, tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["run", "--config", str(config), "--out", str(a)]) == 0
    assert main(["run", "--config", str(config), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_bytes().splitlines()) == 1 + 2 * 3
    out = capsys.readouterr().out
    assert "wrote 6 rows" in out and "savings" in out


def test_run_to_stdout_with_seed(config, capsys):
    assert main(["run", "--config", str(config), "--seed", "9", "--algorithm", "first-fit"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("distribution,variant,algorithm")
    assert ",first-fit," in out


def test_run_missing_config(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "nope.json")]) == 2
    assert "config file not found" in capsys.readouterr().err
    assert main(["run"]) == 2


def test_run_schema_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"replicas": -1}))
    assert main(["run", "--config", str(bad)]) == 2
    assert "schema error" in capsys.readouterr().err


def test_usage_errors():
    for argv in ([], ["bogus"], ["run", "--frobnicate"], ["run", "--seed", "-1"],
                 ["audit", "--algorithm", "next-fit"]):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 2


def test_frontier(capsys):
    assert main(["frontier", "--mu1", "0.65", "--b1", "0", "--mu2", "0.65", "--b2", "0.49",
                 "--variant", "hoeffding", "--n2-max", "40", "--step", "10"]) == 0
    lines = capsys.readouterr().out.split()
    assert lines == ["n2,max_n1", "0,46", "10,30", "20,18", "30,7", "40,"]


def test_frontier_degenerate_alpha(capsys):
    assert main(["frontier", "--mu1", "1", "--b1", "0", "--mu2", "1", "--b2", "0", "--alpha", "1"]) == 2
    assert "degenerate confidence" in capsys.readouterr().err


def test_audit_is_deterministic(capsys):
    assert main(["audit", "--seed", "7", "--instances", "30"]) == 0
    first = capsys.readouterr().out
    assert main(["audit", "--seed", "7", "--instances", "30"]) == 0
    assert capsys.readouterr().out == first
    assert first.rstrip().endswith("PASS")


def test_single_trace(capsys):
    assert main(["single", "--variant", "hoeffding", "--size", "32", "--samples", "200",
                 "--seed", "3"]) == 0
    out = capsys.readouterr().out
    assert "machines=" in out and "variant=hoeffding" in out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "overcommit", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "frontier" in res.stdout
