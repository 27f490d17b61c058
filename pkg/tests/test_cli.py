import json
import os
import subprocess
import sys

import numpy as np
import pytest

from localcorrect.boolfn import Isomorphism, JuntaCore, JuntaFunction, save_function
from localcorrect.cli import EXIT_ACCEPTANCE, EXIT_INPUT, EXIT_OK, main
from localcorrect.harness import parse_report
from localcorrect.oracle import write_flip_file

FAST = ["--profile", "scaled:20", "--k", "2", "--n", "24"]


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_correct_junta(capsys, tmp_path):
    out_path = tmp_path / "r.json"
    code, out, _ = run(capsys, "correct-junta", *FAST, "--seed", "3", "--out", str(out_path))
    assert code == EXIT_OK
    result = json.loads(out)
    assert result == json.loads(out_path.read_text())
    assert result["success"] == (result["output"] == result["expected"])
    assert result["query_count"] > 0


def test_correct_psf_with_descriptor_and_point(capsys, tmp_path):
    path = tmp_path / "f.json"
    rng = np.random.default_rng(1)
    f = JuntaFunction(JuntaCore.random(2, rng), (5, 9), 16)
    sigma = Isomorphism.random(16, rng)
    save_function(path, f, sigma)
    code, out, _ = run(capsys, "correct-junta", "--function", str(path), "--x", "ff00",
                       "--epsilon", "0", "--profile", "scaled:20")
    assert code == EXIT_OK
    result = json.loads(out)
    x = np.unpackbits(np.frombuffer(bytes.fromhex("ff00"), dtype=np.uint8), bitorder="little")
    assert result["expected"] == f.permuted(sigma)(x)
    assert result["n"] == 16
    code, _, err = run(capsys, "correct-psf", "--function", str(path))
    assert code == EXIT_INPUT and "not a partially symmetric" in err


def test_correct_psf_random(capsys):
    code, out, _ = run(capsys, "correct-psf", "--k", "0", "--n", "30", "--seed", "1")
    assert code == EXIT_OK and json.loads(out)["query_count"] == 0


def test_experiment_jsonl_and_csv(capsys, tmp_path):
    code, out, _ = run(capsys, "experiment", *FAST, "--trials", "2", "--seed", "4")
    assert code == EXIT_OK
    rep = parse_report(out)
    assert len(rep.rows) == 2 and rep.config["seed"] == 4
    path = tmp_path / "r.csv"
    code, out, _ = run(capsys, "experiment", *FAST, "--trials", "2", "--seed", "4", "--format", "csv",
                       "--out", str(path))
    assert code == EXIT_OK
    assert json.loads(out) == json.loads(json.dumps(rep.summary))
    assert parse_report(path.read_text(), "csv").rows == rep.rows


def test_experiment_acceptance_gate(capsys):
    args = ["experiment", "--family", "psf", "--k", "0", "--n", "20", "--trials", "3"]
    assert run(capsys, *args, "--min-lower-bound", "0.3")[0] == EXIT_OK
    code, _, err = run(capsys, *args, "--min-lower-bound", "0.5")
    assert code == EXIT_ACCEPTANCE and "lower95" in err


def test_env_overrides(capsys, monkeypatch):
    monkeypatch.setenv("LOCALCORRECT_SEED", "77")
    monkeypatch.setenv("LOCALCORRECT_WORKERS", "2")
    _, out, _ = run(capsys, "experiment", "--family", "psf", "--k", "0", "--n", "20", "--trials", "1")
    cfg = parse_report(out).config
    assert cfg["seed"] == 77 and cfg["workers"] == 2
    _, out, _ = run(capsys, "experiment", "--family", "psf", "--k", "0", "--n", "20", "--trials", "1",
                    "--seed", "5", "--workers", "1")
    cfg = parse_report(out).config
    assert cfg["seed"] == 5 and cfg["workers"] == 1
    monkeypatch.setenv("LOCALCORRECT_SEED", "abc")
    with pytest.raises(SystemExit):
        main(["estimate", "--vars", "0"])


def test_typicality(capsys):
    code, out, _ = run(capsys, "typicality", "--k", "5", "--n", "5", "--trials", "10", "--inject-and",
                       "--format", "csv")
    assert code == EXIT_OK
    rep = parse_report(out, "csv")
    assert any(r.source == "injected" and not r.passed for r in rep.rows)
    code, _, _ = run(capsys, "typicality", "--k", "2", "--n", "2", "--trials", "10", "--min-pass-rate", "1.01")
    assert code == EXIT_ACCEPTANCE


def test_estimate(capsys):
    code, out, _ = run(capsys, "estimate", "--k", "3", "--n", "12", "--vars", "0,1,2,3,4,5,6,7,8,9,10,11",
                       "--epsilon", "0", "--delta", "0.05", "--eta", "0.01", "--seed", "2")
    assert code == EXIT_OK
    r = json.loads(out)
    assert r["q"] == 1060 and r["query_count"] == 2 * 1060
    assert abs(r["estimate"] - r["exact_noiseless"]) <= 0.05
    code, out, _ = run(capsys, "estimate", "--family", "psf", "--k", "2", "--n", "10", "--vars", "3,4,5",
                       "--measure", "symmetric", "--epsilon", "0")
    assert code == EXIT_OK and json.loads(out)["estimate"] == 0


def test_adversarial_noise(capsys, tmp_path):
    path = tmp_path / "flips.hex"
    write_flip_file(path, [np.ones(12, dtype=np.uint8)])
    code, out, _ = run(capsys, "estimate", "--k", "2", "--n", "12", "--vars", "0", "--noise",
                       f"adversarial:{path}")
    assert code == EXIT_OK


@pytest.mark.parametrize("argv", [
    ["experiment", "--k", "9", "--n", "3"],
    ["experiment", "--k", "11", "--n", "40", "--profile", "scaled:10"],
    ["experiment", "--noise", "exact", "--n", "64"],
    ["experiment", "--epsilon", "1.5"],
    ["experiment", "--trials", "0"],
    ["estimate", "--vars", "0,x"],
    ["estimate", "--vars", "200", "--n", "10", "--k", "2"],
    ["correct-junta", "--k", "2", "--n", "8", "--x", "ffff"],
    ["correct-junta", "--function", "/nonexistent/f.json"],
    ["estimate", "--vars", "0", "--noise", "adversarial:/nonexistent/flips"],
])
def test_bad_input_exit_code(capsys, argv):
    assert main(argv) == EXIT_INPUT
    assert "error" in capsys.readouterr().err


def test_argparse_rejects_unknown_choices():
    with pytest.raises(SystemExit):
        main(["experiment", "--noise", "loud"])
    with pytest.raises(SystemExit):
        main(["experiment", "--profile", "enormous"])


def test_module_entry_point():
    env = dict(os.environ, LOCALCORRECT_SEED="1")
    p = subprocess.run([sys.executable, "-m", "localcorrect", "correct-psf", "--k", "0", "--n", "10"],
                       capture_output=True, text=True, env=env)
    assert p.returncode == 0 and json.loads(p.stdout)["success"]
    p = subprocess.run([sys.executable, "-m", "localcorrect", "experiment", "--k", "-1"],
                       capture_output=True, text=True)
    assert p.returncode == EXIT_INPUT
