import json
import xml.etree.ElementTree as ET
import subprocess
import sys

import numpy as np
import pytest

from proxflow.cli import main
from proxflow.config import ConfigError, config_hash, resolve


def _run(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out


def _hash_header(path):
    first = path.read_text().splitlines()[0]
    if path.suffix == ".json":
        return json.loads(path.read_text())["config_sha256"]
    if path.suffix == ".svg":
        first = path.read_text().splitlines()[1]
    return first.split("config_sha256: ")[1].split()[0]


def test_solve_lasso(tmp_path):
    code, out = _run(tmp_path, "solve", "--demo", "lasso", "--seed", "7", "--svg")
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["final_residual"] <= 1e-6
    assert summary["fitted_rate"]["rate"] > 0
    files = ["trajectory.csv", "summary.json", "trajectory.svg", "config.json"]
    hashes = {_hash_header(out / f) for f in files}
    assert len(hashes) == 1 and len(hashes.pop()) == 64
    root = ET.fromstring((out / "trajectory.svg").read_bytes())
    assert root.tag.endswith("svg") and root.find("{http://www.w3.org/2000/svg}polyline") is not None


def test_solve_mlp_slice_monotone(tmp_path):
    code, out = _run(tmp_path, "solve", "--demo", "mlp-slice", "--seed", "7",
                     "--method", "euler", "--step", "1e-3", "--t-end", "5")
    assert code == 0
    assert json.loads((out / "summary.json").read_text())["monotone"] is True


def test_outputs_byte_identical(tmp_path):
    args = ("solve", "--demo", "quadratic-l1", "--seed", "3", "--t-end", "5", "--svg")
    _, a = _run(tmp_path, *args, name="a")
    _, b = _run(tmp_path, *args, name="b")
    for f in ("trajectory.csv", "summary.json", "trajectory.svg", "config.json"):
        assert (a / f).read_bytes() == (b / f).read_bytes(), f
    _, c = _run(tmp_path, "solve", "--demo", "quadratic-l1", "--seed", "4", "--t-end", "5",
                name="c")
    assert (a / "trajectory.csv").read_bytes() != (c / "trajectory.csv").read_bytes()


def test_malformed_json_exit_1(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{"seed": 1,')
    assert main(["solve", "--config", str(cfg)]) == 1
    assert "malformed JSON" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["solve", "--demo", "lasso"],                       # no seed
    ["solve", "--seed", "1"],                           # no problem
    ["solve", "--demo", "nope", "--seed", "1"],
    ["solve", "--demo", "lasso", "--seed", "1", "--alpha", "-1"],
    ["solve", "--demo", "lasso", "--seed", "1", "--method", "rk45"],
    ["frobnicate"],
    ["certify", "--demo", "matrix-factorization", "--seed", "1"],
    ["track", "--demo", "lasso", "--seed", "1"],
])
def test_usage_errors_exit_1(tmp_path, argv):
    assert main([*argv, "--out", str(tmp_path)] if argv[0] != "frobnicate" else argv) == 1


def test_numerical_failure_exit_2(tmp_path, capsys):
    code, _ = _run(tmp_path, "solve", "--demo", "lasso", "--seed", "7", "--method", "euler",
                   "--step", "5", "--t-end", "5000")
    assert code == 2
    assert "numerical failure" in capsys.readouterr().err


def test_certify_full_suite_lasso(tmp_path):
    code, out = _run(tmp_path, "certify", "--demo", "lasso", "--seed", "7")
    assert code == 0
    body = json.loads((out / "certificates.json").read_text())
    names = [r["name"] for r in body["reports"]]
    assert names == ["monotone", "dini", "pl", "condition12", "kl", "cauchy-schwarz",
                     "alpha-monotone", "rate"]
    assert all(r["passed"] for r in body["reports"])


def test_certify_oversized_mu_names_witness(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"seed": 7, "problem": {"demo": "lasso"},
                               "certify": {"checks": ["condition12"], "mu": 50.0,
                                           "n_samples": 200}}))
    code, out = _run(tmp_path, "certify", "--config", str(cfg))
    assert code == 2
    rep = json.loads((out / "certificates.json").read_text())["reports"][0]
    assert not rep["passed"] and len(rep["witness"]) == 40
    assert "witness" in capsys.readouterr().out


def test_certify_alpha_monotone_and_bad_check(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"seed": 7, "problem": {"demo": "matrix-recovery"},
                               "certify": {"checks": ["alpha-monotone"], "n_samples": 300}}))
    assert _run(tmp_path, "certify", "--config", str(cfg))[0] == 0
    cfg.write_text(json.dumps({"seed": 7, "problem": {"demo": "lasso"},
                               "certify": {"checks": ["monotone", "vibes"]}}))
    assert main(["certify", "--config", str(cfg)]) == 1


def test_track_demos(tmp_path):
    code, out = _run(tmp_path, "track", "--demo", "tv-sin", "--seed", "0", "--svg", name="s")
    assert code == 0
    body = json.loads((out / "tracking.json").read_text())
    assert body["gronwall_form_holds"] and "scaled_form_holds" in body
    assert (out / "tracking.csv").read_text().splitlines()[2].startswith("t,V,bound_gronwall")
    code, out = _run(tmp_path, "track", "--demo", "tv-const", "--seed", "0", name="c")
    assert code == 0 and json.loads((out / "tracking.json").read_text())["V_nonincreasing"]
    code, out = _run(tmp_path, "track", "--demo", "tv-rest", "--seed", "0", name="r")
    assert code == 0 and json.loads((out / "tracking.json").read_text())["max_V"] <= 1e-10


def test_bench_rates_increase_and_deterministic(tmp_path):
    args = ("bench", "--demo", "lasso", "--seed", "7")
    assert _run(tmp_path, *args, name="a")[0] == 0
    assert _run(tmp_path, *args, name="b")[0] == 0
    a, b = tmp_path / "a", tmp_path / "b"
    assert (a / "bench.csv").read_bytes() == (b / "bench.csv").read_bytes()
    rows = [line.split(",") for line in (a / "bench.csv").read_text().splitlines()
            if not line.startswith("#")]
    assert rows[0][:2] == ["alpha", "step"]
    rates = [float(r[3]) for r in rows[1:]]
    assert [float(r[0]) for r in rows[1:]] == [0.2, 0.5, 1.0]
    assert rates[0] < rates[1] < rates[2]
    assert (a / "bench_walltime.csv").exists()


def test_bench_empty_grid_exit_1(tmp_path):
    cfg = tmp_path / "b.json"
    cfg.write_text(json.dumps({"seed": 1, "problem": {"demo": "lasso"},
                               "bench": {"alphas": []}}))
    assert main(["bench", "--config", str(cfg), "--out", str(tmp_path)]) == 1


def test_explicit_problem_with_csv(tmp_path):
    rng = np.random.default_rng(0)
    A = rng.standard_normal((6, 4))
    np.savetxt(tmp_path / "A.csv", A, delimiter=",")
    cfg = tmp_path / "p.json"
    cfg.write_text(json.dumps({"seed": 0, "problem": {"type": "lasso", "A": "A.csv",
                                                      "u": [1, 0, -1, 2, 0, 1], "lam": 0.2},
                               "flow": {"t_end": 50}}))
    code, out = _run(tmp_path, "solve", "--config", str(cfg))
    assert code == 0
    assert json.loads((out / "summary.json").read_text())["fstar_source"] == "ista-oracle"
    h1 = _hash_header(out / "trajectory.csv")
    np.savetxt(tmp_path / "A.csv", 2 * A, delimiter=",")
    _, out2 = _run(tmp_path, "solve", "--config", str(cfg), name="o2")
    assert _hash_header(out2 / "trajectory.csv") != h1


def test_explicit_quadratic_box(tmp_path):
    cfg = tmp_path / "q.json"
    cfg.write_text(json.dumps({"seed": 0, "problem": {
        "type": "quadratic", "Q": [[1, 0], [0, 1]], "b": [2, -1],
        "g": {"type": "box", "lo": [0, 0], "hi": [1, 1]}, "x0": [0.5, 0.5]}}))
    code, out = _run(tmp_path, "solve", "--config", str(cfg))
    assert code == 0
    assert json.loads((out / "summary.json").read_text())["final_residual"] <= 1e-6


def test_demo_list(capsys):
    assert main(["demo-list"]) == 0
    text = capsys.readouterr().out
    assert "lasso" in text and "tv-sin" in text


def test_resolve_and_hash():
    rc = resolve({"seed": 3, "problem": {"demo": "lasso"}, "out": "x"}, "solve",
                 {"alpha": 0.5, "out": "y"})
    assert rc.flow.alpha == 0.5 and rc.out == "y"
    same = resolve({"seed": 3, "problem": {"demo": "lasso"}, "out": "z"}, "solve",
                   {"alpha": 0.5})
    assert rc.hash == same.hash
    assert config_hash({"seed": 1}) != config_hash({"seed": 2})
    with pytest.raises(ConfigError):
        resolve({"seed": "7", "problem": {"demo": "lasso"}}, "solve")
    with pytest.raises(ConfigError):
        resolve({"seed": 1, "problem": {"demo": "lasso"}, "flow": {"speed": 2}}, "solve")


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "proxflow.cli", "demo-list"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "mlp-slice" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "proxflow.cli", "solve"],
                          capture_output=True, text=True)
    assert proc.returncode == 1 and proc.stderr
