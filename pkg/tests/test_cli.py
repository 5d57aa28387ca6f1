import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from cantorproj.cli import EXIT_CONFIG, EXIT_FAILED, EXIT_GUARD, EXIT_OK, main

ROOT = Path(__file__).resolve().parents[1]


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def _run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def _summary(out_dir):
    return {r["check"]: r for r in csv.DictReader(open(Path(out_dir) / "summary.csv", newline=""))}


SWEEP = {"kind": "cantor-sweep", "sequence": {"M": 3, "N": 2, "depth": 6}, "K": 12, "seeds": 3}
SUITE = json.loads((ROOT / "configs" / "quick_lemma_suite.json").read_text())


def test_empty_config_is_rejected_with_error_json(tmp_path, capsys):
    code, out = _run(capsys, "cantor-sweep", "--config", _write(tmp_path, {}))
    err = json.loads(out)
    assert code == EXIT_CONFIG != 0 and err["error"] == "invalid-config"


@pytest.mark.parametrize("cfg,path", [
    ({"kind": "cantor-sweep", "sequence": {"M": 3, "N": 10, "depth": 3}, "K": 4}, ["sequence"]),
    ({"kind": "cantor-sweep", "sequence": {"M": 3, "N": 2, "depth": 3}, "K": 1}, ["K"]),
    ({"kind": "aniso", "alpha": 1.2, "beta": 2.4, "N": 100, "bogus": 1}, []),
    ({"kind": "concentration-audit", "sequence": {"M": 3, "N": 2, "depth": 3}, "level": 1,
      "params": {"t": 0.9, "eps": 0.01}}, ["params"]),
])
def test_invalid_configs(tmp_path, capsys, cfg, path):
    code, out = _run(capsys, cfg["kind"], "--config", _write(tmp_path, cfg))
    assert code == EXIT_CONFIG and json.loads(out)["path"] == path


def test_kind_mismatch_and_bad_json(tmp_path, capsys):
    assert _run(capsys, "aniso", "--config", _write(tmp_path, SWEEP))[0] == EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    assert _run(capsys, "aniso", "--config", str(bad))[0] == EXIT_CONFIG
    assert _run(capsys, "aniso", "--config", str(tmp_path / "missing.json"))[0] == EXIT_CONFIG


def test_guard_exit_code(tmp_path, capsys):
    cfg = dict(SWEEP, sequence={"M": 4, "N": 16, "depth": 20})
    code, out = _run(capsys, "cantor-sweep", "--config", _write(tmp_path, cfg))
    assert code == EXIT_GUARD and json.loads(out)["error"] == "guard-exceeded"
    cov = {"kind": "covering-extract", "alpha": 1.5, "n1": 2, "k": 3}
    assert _run(capsys, "covering-extract", "--config", _write(tmp_path, cov))[0] == EXIT_GUARD


def test_sweep_outputs_and_manifest(tmp_path, capsys):
    out = tmp_path / "o"
    code, _ = _run(capsys, "cantor-sweep", "--config", _write(tmp_path, SWEEP), "--out", str(out), "--seed", "5")
    assert code in (EXIT_OK, EXIT_FAILED)
    s = _summary(out)
    assert "min_slope" in s and s["normalization"]["status"] == "PASS"
    man = json.loads((out / "manifest.json").read_text())
    assert man["config"]["seed"] == 5 and len(man["config"]["seeds"]) == 3
    assert {"cantorproj", "python", "numpy", "kernels"} <= set(man["versions"]) and man["wall_time_s"] >= 0
    raw = (out / "slopes.csv").read_bytes()
    assert raw.endswith(b"\r\n") and raw.count(b"\r\n") == 4


def test_csv_bodies_identical_across_threads_and_replay(tmp_path, capsys):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    cfg = _write(tmp_path, SUITE)
    assert _run(capsys, "lemma-suite", "--config", cfg, "--out", str(a), "--threads", "1")[0] == EXIT_OK
    assert _run(capsys, "lemma-suite", "--config", cfg, "--out", str(b), "--threads", "4")[0] == EXIT_OK
    assert _run(capsys, "lemma-suite", "--config", str(a / "manifest.json"), "--out", str(c))[0] == EXIT_OK
    for f in sorted(a.glob("*.csv")):
        assert f.read_bytes() == (b / f.name).read_bytes() == (c / f.name).read_bytes(), f.name


def test_lemma_suite_rows(tmp_path, capsys):
    out = tmp_path / "s"
    code, text = _run(capsys, "lemma-suite", "--config", _write(tmp_path, SUITE), "--out", str(out))
    s = _summary(out)
    assert code == EXIT_OK
    assert set(s) == {"normalization", "strip_family", "length_to_count", "hit_law", "mgf_chain", "closing"}
    assert all(r["value"] == "0" and r["status"] == "PASS" for r in s.values())


def test_relaxed_extraction_is_unscored(tmp_path, capsys):
    cfg = {"kind": "covering-extract", "alpha": 1.5, "n1": 2, "k": 2, "seeds": 5, "relaxed_factor": 8}
    out = tmp_path / "r"
    code, _ = _run(capsys, "covering-extract", "--config", _write(tmp_path, cfg), "--out", str(out), "--relaxed")
    s = _summary(out)
    assert s["omega_success_rate"]["status"] == "UNSCORED" and "relaxed" in s["omega_success_rate"]["note"]
    assert code == EXIT_OK


def test_failing_check_gives_exit_one(tmp_path, capsys):
    cfg = dict(SWEEP, slope_band=[0.9, 1.0])
    assert _run(capsys, "cantor-sweep", "--config", _write(tmp_path, cfg), "--out", str(tmp_path / "f"))[0] == EXIT_FAILED


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "cantorproj", "aniso", "--config", _write(tmp_path, {})],
                          capture_output=True, text=True)
    assert proc.returncode == EXIT_CONFIG and json.loads(proc.stdout)["error"] == "invalid-config"
