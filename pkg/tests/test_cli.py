import json
import math

import numpy as np
import pytest

from sparsetomo import io as sio
from sparsetomo.cli import main
from sparsetomo.harness import ExperimentPlan, run_sweep, sweep_csv, worker_count
from sparsetomo.sensing import load_matrix

from oracles import bessel_impulse


@pytest.fixture(scope="module")
def cache(tmp_path_factory):
    d = tmp_path_factory.mktemp("cache")
    path = d / "fock.qstm"
    assert main(["build-matrix", "--waveguides", "20", "--photons", "3", "--order", "2",
                 "--coupling", "1.0", "--z", "2.5", "--basis", "fock", "--output", str(path)]) == 0
    return path


def test_build_matrix_shape_and_rebuild(cache, tmp_path):
    m = load_matrix(cache)
    assert m.shape == (210, 1540)
    again = tmp_path / "again.qstm"
    assert main(["build-matrix", "--output", str(again)]) == 0
    assert again.read_bytes() == cache.read_bytes()


def test_build_matrix_group_report(tmp_path, capsys):
    assert main(["build-matrix", "--basis", "entangled", "--pair", "3,6",
                 "--output", str(tmp_path / "e.qstm")]) == 0
    out = capsys.readouterr().out
    assert "degenerate column groups: 1" in out
    assert out.splitlines()[-1].split() == ["404", "452"]


def test_build_matrix_bad_args(tmp_path):
    assert main(["build-matrix", "--basis", "entangled", "--output", str(tmp_path / "x")]) == 2
    assert main(["build-matrix", "--waveguides", "1", "--output", str(tmp_path / "x")]) == 2
    assert main(["build-matrix", "--z", "-1", "--output", str(tmp_path / "x")]) == 2
    assert main(["build-matrix", "-o", "x"]) == 2
    assert main([]) == 2


def test_simulate_k1_noiseless(cache, tmp_path):
    out = tmp_path / "r.json"
    rec = tmp_path / "t.csv"
    assert main(["simulate", "--matrix", str(cache), "--sparsity", "1", "--seed", "4",
                 "--rel-tol", "1e-9", "--output", str(out), "--record", str(rec)]) == 0
    res = json.loads(out.read_text())
    assert abs(res["fidelity"] - 1) < 1e-8
    assert set(res) >= {"support", "coefficients", "raw_coefficients", "iterations",
                        "final_rel_residual", "degenerate_groups_touched"}
    lines = rec.read_text().splitlines()
    assert lines[0] == "K,snr_db,lambda,seed,fidelity,residual,iterations,success"
    assert lines[1].startswith("1,inf,0.0,4,")


def test_simulate_then_recover_roundtrip(cache, tmp_path):
    args = ["simulate", "--matrix", str(cache), "--sparsity", "7", "--seed", "2",
            "--snr-db", "35", "--depolarization", "0.02",
            "--state-out", str(tmp_path / "s.json"), "--measurements-out", str(tmp_path / "g.csv"),
            "--output", str(tmp_path / "a.json")]
    assert main(args) == 0
    assert main(["recover", "--matrix", str(cache), "--measurements", str(tmp_path / "g.csv"),
                 "--truth", str(tmp_path / "s.json"), "--output", str(tmp_path / "b.json")]) == 0
    a = json.loads((tmp_path / "a.json").read_text())
    b = json.loads((tmp_path / "b.json").read_text())
    assert a["support"] == b["support"]
    assert a["fidelity"] == b["fidelity"] > 0.95
    header = (tmp_path / "g.csv").read_text().splitlines()[0]
    assert header == "q,r,value"


def test_simulate_from_state_file(cache, tmp_path):
    m = load_matrix(cache)
    p = np.zeros(1540)
    p[[5, 700]] = [0.25, 0.75]
    sio.write_state(tmp_path / "s.json", p, m.basis)
    assert main(["simulate", "--matrix", str(cache), "--state", str(tmp_path / "s.json"),
                 "--rel-tol", "1e-9", "--output", str(tmp_path / "r.json")]) == 0
    res = json.loads((tmp_path / "r.json").read_text())
    assert res["support"] == [6, 701]


def test_basis_hash_mismatch(cache, tmp_path):
    p = np.zeros(1540)
    p[0] = 1.0
    sio.write_state(tmp_path / "s.json", p,
                    {"kind": "entangled", "n_waveguides": 20, "n_photons": 3, "entangled_pair": [3, 7]})
    rc = main(["simulate", "--matrix", str(cache), "--state", str(tmp_path / "s.json")])
    assert rc == 3


def test_data_errors(cache, tmp_path):
    assert main(["recover", "--matrix", str(tmp_path / "missing.qstm"),
                 "--measurements", "x.csv"]) == 3
    bad = tmp_path / "bad.qstm"
    bad.write_bytes(cache.read_bytes()[:500])
    assert main(["recover", "--matrix", str(bad), "--measurements", "x.csv"]) == 3
    csv = tmp_path / "g.csv"
    csv.write_text("a,b,c\n1,1,0.5\n")
    assert main(["recover", "--matrix", str(cache), "--measurements", str(csv)]) == 3
    csv.write_text("q,r,value\n1,1,0.5\n")
    assert main(["recover", "--matrix", str(cache), "--measurements", str(csv)]) == 3


def test_impulse_bessel(tmp_path):
    out = tmp_path / "imp.csv"
    assert main(["impulse", "--waveguides", "61", "--cz", "2.0", "--input", "31", "--bessel",
                 "--output", str(out)]) == 0
    rows = [line.split(",") for line in out.read_text().splitlines()]
    assert rows[0] == ["waveguide", "probability", "bessel"]
    sim = np.array([float(r[1]) for r in rows[1:]])
    ref = np.array([float(r[2]) for r in rows[1:]])
    assert len(sim) == 61
    assert np.abs(sim - ref).max() < 1e-9
    assert np.abs(ref - bessel_impulse(61, 2.0, 31)).max() < 1e-15
    assert abs(sim.sum() - 1) < 1e-12


def test_impulse_zero_distance(tmp_path, capsys):
    assert main(["impulse", "--waveguides", "9", "--z", "0", "--input", "4"]) == 0
    rows = capsys.readouterr().out.splitlines()[1:]
    probs = [float(r.split(",")[1]) for r in rows]
    assert probs == [0, 0, 0, 1, 0, 0, 0, 0, 0]


def test_impulse_bad_input():
    assert main(["impulse", "--waveguides", "9", "--input", "10"]) == 2
    assert main(["impulse", "--z", "1", "--cz", "1"]) == 2


def test_sweep_deterministic(cache, tmp_path):
    args = ["sweep", "--matrix", str(cache), "--axis", "sparsity", "--values", "1,4,8",
            "--trials", "6", "--snr-db", "35", "--depolarization", "0.02", "--base-seed", "3"]
    assert main(args + ["--output", str(tmp_path / "a.csv"), "--workers", "1"]) == 0
    assert main(args + ["--output", str(tmp_path / "b.csv"), "--workers", "4",
                        "--records", str(tmp_path / "t.csv")]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    rows = (tmp_path / "a.csv").read_text().splitlines()
    assert rows[0].split(",")[:2] == ["axis", "value"]
    assert len(rows) == 4
    trials = (tmp_path / "t.csv").read_text().splitlines()
    assert len(trials) == 1 + 18
    seeds = [int(t.split(",")[3]) for t in trials[1:7]]
    assert seeds == list(range(3, 9))


def test_sweep_bad_plans(cache):
    assert main(["sweep", "--matrix", str(cache), "--values", "5,3"]) == 2
    assert main(["sweep", "--matrix", str(cache), "--values", "1", "--trials", "0"]) == 2
    assert main(["sweep", "--matrix", str(cache)]) == 2


def test_config_file_and_override(cache, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"matrix": str(cache), "trials": 50,
                               "sweep": {"values": "1,2", "axis": "sparsity"}}))
    assert main(["--config", str(cfg), "sweep", "--trials", "2",
                 "--output", str(tmp_path / "a.csv")]) == 0
    rows = (tmp_path / "a.csv").read_text().splitlines()
    assert [r.split(",")[5] for r in rows[1:]] == ["2", "2"]
    assert main(["sweep", "--config", str(cfg), "--trials", "3",
                 "--output", str(tmp_path / "b.csv")]) == 0
    assert (tmp_path / "b.csv").read_text().splitlines()[1].split(",")[5] == "3"


def test_config_command_key(cache, tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "impulse", "waveguides": 5, "z": 0, "input": 2}))
    assert main(["--config", str(cfg)]) == 0
    assert capsys.readouterr().out.splitlines()[2] == "2,1.0"


def test_config_errors(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"sweep": {"bogus": 1}}))
    assert main(["--config", str(cfg), "sweep"]) == 2
    cfg.write_text(json.dumps({"basis": "weird"}))
    assert main(["--config", str(cfg), "build-matrix", "--output", str(tmp_path / "x")]) == 2
    cfg.write_text("{not json")
    assert main(["--config", str(cfg), "sweep"]) == 3


def test_worker_cap(monkeypatch):
    monkeypatch.setenv("SPARSETOMO_WORKERS", "1")
    assert worker_count() == 1
    monkeypatch.setenv("SPARSETOMO_WORKERS", "x")
    with pytest.raises(ValueError):
        worker_count()


def test_run_sweep_snr_axis(fock_matrix):
    plan = ExperimentPlan("snr", (30, 40), sparsity=5, depolarization=0.02, trials=4)
    rows, recs = run_sweep(fock_matrix, plan, workers=2)
    assert [r["snr_db"] for r in rows] == [30.0, 40.0]
    assert all(r["K"] == 5 for r in rows)
    assert len(recs) == 8
    text = sweep_csv(rows)
    assert text.splitlines()[1].startswith("snr,30.0,5,30.0,0.02,4,")


def test_plan_validation():
    with pytest.raises(ValueError):
        ExperimentPlan("sparsity", ())
    with pytest.raises(ValueError):
        ExperimentPlan("depth", (1,))
    with pytest.raises(ValueError):
        ExperimentPlan("sparsity", (1, 1))


def test_measurement_csv_roundtrip(tmp_path):
    v = np.random.default_rng(0).standard_normal(220)
    sio.write_measurements(tmp_path / "g.csv", v, 10, 3)
    lines = (tmp_path / "g.csv").read_text().splitlines()
    assert lines[0] == "q1,q2,q3,value"
    assert lines[1].startswith("1,1,1,")
    back = sio.read_measurements(tmp_path / "g.csv", 10, 3).values
    np.testing.assert_array_equal(back, v)


def test_state_json_roundtrip(tmp_path):
    p = np.zeros(1540)
    p[[3, 99]] = [0.4, 0.6]
    desc = {"kind": "fock", "n_waveguides": 20, "n_photons": 3}
    sio.write_state(tmp_path / "s.json", p, desc)
    obj = json.loads((tmp_path / "s.json").read_text())
    assert obj["entries"] == [{"index": 4, "value": 0.4}, {"index": 100, "value": 0.6}]
    q, d = sio.read_state(tmp_path / "s.json")
    np.testing.assert_array_equal(p, q)
    assert d == desc


def test_state_json_errors(tmp_path):
    f = tmp_path / "s.json"
    f.write_text(json.dumps({"basis": {"kind": "fock", "n_waveguides": 3, "n_photons": 1},
                             "entries": [{"index": 7, "value": 1.0}]}))
    with pytest.raises(sio.FormatError):
        sio.read_state(f)
    f.write_text(json.dumps({"entries": []}))
    with pytest.raises(sio.FormatError):
        sio.read_state(f)


def test_snr_flag_accepts_inf(cache, tmp_path):
    assert main(["simulate", "--matrix", str(cache), "--sparsity", "2", "--snr-db", "inf",
                 "--output", str(tmp_path / "r.json"), "--record", str(tmp_path / "t.csv")]) == 0
    assert (tmp_path / "t.csv").read_text().splitlines()[1].split(",")[1] == "inf"
