import json
import subprocess
import sys

import pytest

from jacobispec.cli import main

EX1 = ["--family", "example1", "--alpha", "0.75", "--b", "1"]


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path), "--workers", "1"])


def test_check_a_example(tmp_path, capsys):
    code = run(tmp_path, "check-a", *EX1, "--c", "0", "--a", "1", "--horizon", "100000")
    assert code == 0
    rep = json.loads((tmp_path / "check-a.json").read_text())
    assert rep["schema_version"] == 1 and rep["kind"] == "condition"
    w = rep["report"]["result"]["witnesses"]
    assert w["N_0"] == 1 and w["calN"]["1"] == 3 and w["bound"]["1"] == 3
    assert rep["report"]["result"]["assumed_index_Jmin"] == 0


def test_check_a_verdict_failure(tmp_path):
    code = run(tmp_path, "check-a", "--family", "scalar_power_diag", "--alpha", "0.75",
               "--beta", "0.3", "--horizon", "1000")
    assert code == 2


def test_count_matches_dense(tmp_path):
    import numpy as np
    from jacobispec.model import make_family, truncate
    assert run(tmp_path, "count", *EX1, "--interval", "-5", "-1", "--N", "1000") == 0
    got = json.loads((tmp_path / "count.json").read_text())["report"]["result"]["count"]
    ev = np.linalg.eigvalsh(truncate(make_family("example1", alpha=0.75, b=1.0), 1000).dense())
    assert got == int(np.sum((ev > -5) & (ev < -1)))


def test_spectrum_csv(tmp_path):
    assert run(tmp_path, "spectrum", *EX1, "--interval", "0.5", "10", "--grid", "2",
               "--schedule", "100", "200", "400") == 0
    head = (tmp_path / "eigenvalues.csv").read_text().splitlines()[0]
    assert head == "lambda,interval_lo,interval_hi,N"


def test_check_b_writes_margins(tmp_path):
    code = run(tmp_path, "check-b", "--family", "prop5", "--param", "alpha1=1", "--param", "alpha2=1",
               "--beta1", "1", "--beta2", "1", "--C1", "1", "--C2", "1", "--D1", "3", "--D2", "3",
               "--horizon", "1000")
    assert code == 0
    lines = (tmp_path / "margins.csv").read_text().splitlines()
    assert lines[0] == "n,s1,s2" and len(lines) == 1001


def test_check_b_critical_exit_2(tmp_path):
    args = ["--alpha1", "1", "--alpha2", "1", "--beta1", "1", "--beta2", "1", "--C1", "1", "--C2", "1",
            "--D1", "2", "--D2", "2"]
    assert run(tmp_path, "check-b", "--family", "prop5", *args, "--horizon", "100000") == 2


def test_prop1(tmp_path):
    assert run(tmp_path, "prop1", "--family", "prop1_example", "--horizon", "1000") == 0
    assert run(tmp_path, "prop1", *EX1, "--horizon", "1000") == 2


def test_transfer(tmp_path):
    assert run(tmp_path, "transfer", "--family", "step3", "--alpha", "0.75", "--delta", "3",
               "--window", "10", "2000") == 0
    assert run(tmp_path, "transfer", "--family", "step3", "--alpha", "0.75", "--delta", "1",
               "--window", "10", "2000") == 2
    assert (tmp_path / "transfer.csv").exists()
    assert run(tmp_path, "transfer", *EX1, "--k", "2", "--window", "2", "50") == 0
    assert run(tmp_path, "transfer", *EX1, "--window", "2", "50") == 1


def test_subordinacy(tmp_path):
    assert run(tmp_path, "subordinacy", "--family", "step3", "--alpha", "0.75", "--delta", "1",
               "--N", "2000") == 0
    assert (tmp_path / "ratio.csv").read_text().startswith("N,ratio\n")
    assert (tmp_path / "path_u.csv").read_text().startswith("n,re,im,log_modulus\n")
    assert run(tmp_path, "subordinacy", *EX1, "--mode", "shoot", "--N", "10000") == 0
    rep = json.loads((tmp_path / "subordinacy.json").read_text())
    assert rep["report"]["result"]["trend"] == "to-zero"


def test_probe(tmp_path):
    assert run(tmp_path, "probe", *EX1, "--a", "2", "--trials", "20") == 0
    assert run(tmp_path, "probe", *EX1, "--a", "2", "--trials", "5", "--support", "0", "10") == 1


@pytest.mark.parametrize("argv", [
    ["spectrom"], ["count", "--family", "nope", "--interval", "0", "1", "--N", "10"],
    ["count", *EX1, "--interval", "0", "1"], ["count", *EX1, "--N", "10", "--interval", "1", "0"],
    ["check-a", *EX1, "--horizon", "abc"], ["check-a", "--alpha", "0.75"],
    ["check-a", *EX1, "stray"], ["reproduce", "--experiment", "nope"],
    ["reproduce", "--alpha", "1"], ["check-a", "--family", "example1", "--alpha", "3", "--b", "1"],
])
def test_usage_errors_exit_1(tmp_path, argv, capsys):
    assert run(tmp_path, *argv) == 1
    assert capsys.readouterr().err


def test_unknown_command_suggestion(capsys):
    assert main(["chek-a"]) == 1
    assert "check-a" in capsys.readouterr().err


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"family": "example1", "params": {"alpha": 0.75, "b": 1},
                               "interval": [-5, -1], "N": 200}))
    out = tmp_path / "o"
    assert main(["count", "--config", str(cfg), "--out", str(out)]) == 0
    first = json.loads((out / "count.json").read_text())["report"]["result"]
    assert main(["count", "--config", str(cfg), "--N", "400", "--out", str(out)]) == 0
    second = json.loads((out / "count.json").read_text())["report"]["result"]
    assert first["N"] == 200 and second["N"] == 400


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"family": "example1", "colour": "red"}))
    assert main(["count", "--config", str(cfg), "--out", str(tmp_path)]) == 1


def test_env_out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("JACOBISPEC_OUT", str(tmp_path / "envout"))
    assert main(["count", *EX1, "--interval", "0", "4", "--N", "50"]) == 0
    assert (tmp_path / "envout" / "count.json").exists()
    assert (tmp_path / "envout" / "count.meta.json").exists()


def test_custom_table(tmp_path):
    from jacobispec.model import make_family, write_table
    table = tmp_path / "t.txt"
    write_table(table, make_family("example1", alpha=0.75, b=1.0), 300)
    assert run(tmp_path, "count", "--family", "custom", "--table", str(table),
               "--interval", "-5", "-1", "--N", "300") == 0
    a = json.loads((tmp_path / "count.json").read_text())["report"]["result"]["count"]
    assert run(tmp_path, "count", *EX1, "--interval", "-5", "-1", "--N", "300") == 0
    b = json.loads((tmp_path / "count.json").read_text())["report"]["result"]["count"]
    assert a == b
    assert run(tmp_path, "count", "--family", "custom", "--interval", "0", "1", "--N", "10") == 1


def test_reproduce_det_identity(tmp_path):
    assert run(tmp_path, "reproduce", "--experiment", "prop3-det-identity") == 0
    assert (tmp_path / "prop3-det-identity" / "prop3-det.csv").exists()
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["report"]["rows"][0]["passed"] is True


def test_reproduce_empty_manifest(tmp_path):
    m = tmp_path / "m.json"
    m.write_text(json.dumps({"experiments": []}))
    assert run(tmp_path, "reproduce", "--manifest", str(m)) == 0
    assert (tmp_path / "summary.csv").read_text() == "name,reference,expected,observed,passed\n"


def test_reproduce_wrong_tolerance_exit_2(tmp_path):
    m = tmp_path / "m.json"
    m.write_text(json.dumps([{"name": "prop3-det-identity", "tolerance": 1e-30}, "example0"]))
    assert run(tmp_path, "reproduce", "--manifest", str(m)) == 2
    rows = json.loads((tmp_path / "summary.json").read_text())["report"]["rows"]
    assert [r["passed"] for r in rows] == [False, True]


def test_determinism_with_workers(tmp_path):
    outs = []
    for workers in ("1", "3"):
        out = tmp_path / workers
        assert main(["spectrum", *EX1, "--interval", "0.5", "10", "--grid", "4", "--schedule",
                     "100", "200", "400", "--out", str(out), "--workers", workers]) == 0
        outs.append((out / "spectrum.json").read_bytes())
    assert outs[0] == outs[1]


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "jacobispec", "count", *EX1, "--interval", "0", "4",
                          "--N", "50", "--out", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == 0 and "count:" in res.stdout
    res = subprocess.run([sys.executable, "-m", "jacobispec", "bogus"], capture_output=True, text=True)
    assert res.returncode == 1
