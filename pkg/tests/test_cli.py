import json
import subprocess
import sys

import pytest

from haze.cli import main

CFG = {
    "roads": 2, "users": 8, "authorities": 4, "thresholds": 2, "delta": "1/2", "rounds": 4, "min_rounds": 2,
    "traffic": {"profile": ["congested", 0, 0.5], "windows": 2, "window_seconds": 300},
}


def _config(tmp_path, **kw):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({**CFG, **kw}))
    return str(path)


@pytest.fixture(scope="module")
def crypto_out(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("sim")
    cfg = _config(tmp)
    assert main(["simulate", "--config", cfg, "--seed", "3", "--mode", "crypto", "--out", str(tmp / "a")]) == 0
    return tmp


def test_simulate_outputs(crypto_out):
    out = crypto_out / "a"
    assert (out / "summary.csv").read_text().startswith("delta,precision,recall,epochs\n")
    for k in range(2):
        rep = json.loads((out / f"epoch-{k:04d}" / "report.json").read_text())
        assert rep["epoch"] == k
        assert (out / f"epoch-{k:04d}" / "transcript.json").exists()


def test_simulate_bit_exact(crypto_out, tmp_path):
    cfg = _config(tmp_path)
    assert main(["simulate", "--config", cfg, "--seed", "3", "--mode", "crypto", "--out", str(tmp_path / "b")]) == 0
    for name in ("summary.csv", "epoch-0001/report.json", "epoch-0001/transcript.json"):
        assert (crypto_out / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_verify_honest_and_tampered(crypto_out, capsys):
    path = crypto_out / "a" / "epoch-0000" / "transcript.json"
    assert main(["verify", "--transcript", str(path)]) == 0
    doc = json.loads(path.read_text())
    hop = [e for e in doc["envelopes"] if e["kind"] == "mix-hop"][0]
    items = hop["payload"]["items"]
    items[0], items[-1] = items[-1], items[0]
    bad = crypto_out / "tampered.json"
    bad.write_text(json.dumps(doc))
    capsys.readouterr()
    assert main(["verify", "--transcript", str(bad)]) == 1
    err = capsys.readouterr().err
    p = hop["payload"]
    assert f"mix hop {p['lineage']} stage {p['stage']} by authority {p['mixer']}" in err


def test_simulate_config_errors(tmp_path, capsys):
    assert main(["simulate", "--config", _config(tmp_path, authorities=9), "--out", str(tmp_path / "o")]) == 2
    assert "A=9" in capsys.readouterr().err
    assert main(["simulate", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path / "o")]) == 2
    bad_traffic = _config(tmp_path, traffic={"weather": "rain"})
    assert main(["simulate", "--config", bad_traffic, "--out", str(tmp_path / "o")]) == 2


def test_simulate_from_csv(tmp_path):
    csv_path = tmp_path / "t.csv"
    csv_path.write_text("user_id,timestamp,segment_id,speed_mph\n0,1,0,10\n1,2,0,12\n2,3,1,50\n")
    cfg = _config(tmp_path, traffic={"csv": str(csv_path), "windows": 1, "window_seconds": 60})
    assert main(["simulate", "--config", cfg, "--mode", "oracle", "--out", str(tmp_path / "o")]) == 0
    assert json.loads((tmp_path / "o" / "epoch-0000" / "report.json").read_text())["epoch"] == 0


def test_verify_unreadable(tmp_path):
    assert main(["verify", "--transcript", str(tmp_path / "nope.json")]) == 2


def test_eval_dp(tmp_path, capsys):
    assert main(["eval-dp", "--sweep", "--users", "500", "--trials", "10", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "delta 1/10: noise set -4..5, max |dP| = 1/10 (ok)" in out
    assert (tmp_path / "summary.json").exists()
    assert main(["eval-dp", "--delta", "0.25", "--users", "200", "--trials", "3"]) == 0
    assert main(["eval-dp", "--users", "200"]) == 2
    assert main(["eval-dp", "--delta", "2"]) == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "haze", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "simulate" in proc.stdout
