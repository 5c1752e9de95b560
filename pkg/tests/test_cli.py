import json

import numpy as np
import pytest

from surface17.cli import main
from surface17.code import default_schedule
from surface17.noise import bundled_device


def run(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as exc:     # argparse usage errors
        code = exc.code
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def clean_device(tmp_path):
    path = tmp_path / "clean.toml"
    path.write_text(bundled_device().noiseless().to_toml())
    return path


def test_simulate_is_deterministic(tmp_path, capsys):
    args = ["simulate", "--state", "+L", "--cycles", "1,2", "--shots", "300", "--seed", "9"]
    assert run(args + ["--out", str(tmp_path / "a.jsonl")], capsys)[0] == 0
    code, out, _ = run(args + ["--out", str(tmp_path / "b.jsonl"), "--threads", "2"], capsys)
    assert code == 0
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
    summary = json.loads(out)
    assert [p["n"] for p in summary["points"]] == [1, 2]
    assert summary["paper_metric"] == "sigma_mean"


def test_usage_errors_exit_one(tmp_path, capsys):
    assert run(["simulate", "--shots", "0", "--seed", "1", "--out", "x.jsonl"], capsys)[0] == 1
    assert run(["simulate", "--shots", "10", "--out", "x.jsonl"], capsys)[0] == 1
    assert run(["nonsense"], capsys)[0] == 1
    assert run(["calibrate", "drive", "--target", "0", "--cross", "0.1"], capsys)[0] == 1
    assert run(["calibrate", "dephasing", "--gamma", "-1", "--tau", "10"], capsys)[0] == 1


def test_data_errors_exit_two(tmp_path, capsys):
    missing = str(tmp_path / "missing.jsonl")
    assert run(["decode", "--shots", missing, "--out", str(tmp_path / "d.json")], capsys)[0] == 2
    bad = tmp_path / "bad.toml"
    bad.write_text("this is = not [valid")
    assert run(["simulate", "--device", str(bad), "--shots", "5", "--seed", "1",
                "--out", str(tmp_path / "x.jsonl")], capsys)[0] == 2
    old = tmp_path / "old.json"
    old.write_text(json.dumps({"schema_version": 0, "points": []}))
    assert run(["analyze", "--decoded", str(old), "--out", str(tmp_path / "r.json")], capsys)[0] == 2


def test_zero_noise_pipeline(tmp_path, capsys, clean_device):
    shots = tmp_path / "s.jsonl"
    assert run(["simulate", "--device", str(clean_device), "--state", "0L", "--cycles", "1,2,3",
                "--shots", "500", "--seed", "2", "--out", str(shots)], capsys)[0] == 0
    w = tmp_path / "w.json"
    assert run(["weights", "--shots", str(shots), "--out", str(w)], capsys)[0] == 0
    doc = json.loads(w.read_text())
    assert all(e["p"] == 0 for s in doc["weights"] for e in s["edges"])
    d = tmp_path / "d.json"
    assert run(["decode", "--shots", str(shots), "--weights", str(w), "--out", str(d)], capsys)[0] == 0
    points = json.loads(d.read_text())["points"]
    assert [p["E_L"] for p in points] == [0.0, 0.0, 0.0]
    r = tmp_path / "r.json"
    code, out, _ = run(["analyze", "--decoded", str(d), "--out", str(r),
                        "--csv", str(tmp_path / "t.csv")], capsys)
    assert code == 0
    report = json.loads(r.read_text())
    assert report["paper_metric"] == "epsilon_L"
    assert report["states"]["0L"]["epsilon_L"] == 0.0
    assert len((tmp_path / "t.csv").read_text().splitlines()) == 4


def test_output_dir_override(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("SURFACE17_OUTPUT_DIR", str(tmp_path / "outdir"))
    assert run(["simulate", "--shots", "50", "--seed", "1", "--out", "rel.jsonl"], capsys)[0] == 0
    assert (tmp_path / "outdir" / "rel.jsonl").exists()


def test_validate_schedule(tmp_path, capsys):
    code, out, _ = run(["validate-schedule"], capsys)
    assert code == 0 and json.loads(out)["valid"]
    good = tmp_path / "good.txt"
    good.write_text(default_schedule().to_text())
    assert run(["validate-schedule", "--schedule", str(good)], capsys)[0] == 0
    # a single step is an incomplete schedule
    bad = tmp_path / "bad.txt"
    bad.write_text("1: Z2-D8\n")
    assert run(["validate-schedule", "--schedule", str(bad)], capsys)[0] == 2
    # Z2 visiting D7 and D8 last leaves a hook along the row logical
    hook = tmp_path / "hook.txt"
    hook.write_text("1: Z3-D2 Z4-D6 Z2-D4\n2: Z3-D6 Z4-D9 Z2-D5\n3: Z3-D5 Z1-D1 Z2-D7\n"
                    "4: Z3-D3 Z1-D4 Z2-D8\n5: X2-D5 X3-D6 X4-D7\n6: X2-D4 X3-D5 X4-D8\n"
                    "7: X2-D2 X3-D9 X1-D3\n8: X2-D1 X3-D8 X1-D2\n")
    code, out, _ = run(["validate-schedule", "--schedule", str(hook)], capsys)
    assert code == 2
    doc = json.loads(out)
    assert not doc["valid"] and doc["violations"][0].startswith("Z2")


def test_calibrate_subcommands(tmp_path, capsys):
    code, out, _ = run(["calibrate", "gmm", "--shots", "3000", "--out", str(tmp_path / "g.json")],
                       capsys)
    assert code == 0
    g = json.loads((tmp_path / "g.json").read_text())
    assert 0 <= g["epsilon_2"] < 0.1 and np.array(g["confusion"]).shape == (3, 3)

    rng = np.random.default_rng(0)
    C = np.eye(6) + (1 - np.eye(6)) * 10 ** rng.uniform(-4, -2, (6, 6))
    np.savetxt(tmp_path / "c.csv", C, delimiter=",")
    code, out, _ = run(["calibrate", "flux", "--matrix", str(tmp_path / "c.csv"),
                        "--out", str(tmp_path / "f.json")], capsys)
    assert code == 0 and json.loads(out)["suppression"] > 10

    code, out, _ = run(["calibrate", "drive", "--target", "1", "--cross", "0.001"], capsys)
    assert code == 0 and json.loads(out)["below_floor"]
    code, out, _ = run(["calibrate", "dephasing", "--gamma", "1", "--tau", "400"], capsys)
    assert code == 0 and abs(json.loads(out)["value"] - 0.5 * (1 - np.exp(-0.4))) < 1e-12
