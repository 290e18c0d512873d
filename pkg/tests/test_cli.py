import csv
import json
import time

import numpy as np
import pytest

from l0spikes.cli import main
from l0spikes.csvio import read_trace
from l0spikes.segment_cost import AR1
from l0spikes.solvers import segmentation_objective
from l0spikes.tuning import cross_validate


def rows_of(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def worked(tmp_path):
    path = tmp_path / "worked.csv"
    path.write_text("y\n1.0\n0.5\n5.0\n2.5\n")
    return path


@pytest.fixture
def simulated(tmp_path):
    path = tmp_path / "sim.csv"
    assert main(["simulate", "--T", "5000", "--gamma", "0.96", "--sigma", "0.15",
                 "--theta", "0.01", "--seed", "1", "-o", str(path),
                 "--metadata", str(tmp_path / "meta.json")]) == 0
    return path


def test_simulate_writes_rows(simulated, tmp_path):
    rows = rows_of(simulated)
    assert len(rows) == 5000 and list(rows[0]) == ["t", "y", "c_true", "z_true"]
    assert json.loads((tmp_path / "meta.json").read_text())["seed"] == 1


def test_simulate_requires_length():
    with pytest.raises(SystemExit) as exc:
        main(["simulate"])
    assert exc.value.code == 2


def test_simulate_bad_value_is_usage_error(tmp_path):
    assert main(["simulate", "--T", "10", "--sigma", "-1", "-o", str(tmp_path / "x.csv")]) == 2


def test_fit_worked_trace(worked, tmp_path):
    out, summ = tmp_path / "fit.csv", tmp_path / "fit.json"
    assert main(["fit", "-i", str(worked), "--gamma", "0.5", "--lambda", "0.1",
                 "-o", str(out), "--summary", str(summ)]) == 0
    rows = rows_of(out)
    assert [int(r["spike"]) for r in rows] == [0, 0, 1, 0]
    assert float(rows[2]["spike_magnitude"]) == pytest.approx(4.75, abs=1e-12)
    s = json.loads(summ.read_text())
    assert s["k"] == 1 and s["objective"] == pytest.approx(0.1, abs=1e-12)
    assert s["positivity_audit"]["all_nonnegative"]


def test_fit_op_and_pelt_identical(simulated, tmp_path):
    paths = []
    for alg in ("op", "pelt"):
        out = tmp_path / f"{alg}.csv"
        assert main(["fit", "-i", str(simulated), "--gamma", "0.96", "--lambda", "1",
                     "--algorithm", alg, "-o", str(out), "--summary", str(tmp_path / f"{alg}.json")]) == 0
        paths.append(out)
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_fit_csv_reproduces_objective(simulated, tmp_path):
    out, summ = tmp_path / "fit.csv", tmp_path / "fit.json"
    assert main(["fit", "-i", str(simulated), "--gamma", "0.96", "--lambda", "1",
                 "-o", str(out), "--summary", str(summ)]) == 0
    rows = rows_of(out)
    y = np.array([float(r["y"]) for r in rows])
    cps = [int(r["t"]) - 1 for r in rows if r["spike"] == "1"]
    s = json.loads(summ.read_text())
    obj = segmentation_objective(y, AR1(0.96), cps, 1.0)
    assert abs(obj - s["objective"]) <= 1e-9 * max(1.0, abs(s["objective"]))
    c = np.array([float(r["c_hat"]) for r in rows])
    assert abs(0.5 * np.sum((y - c) ** 2) + len(cps) - s["objective"]) <= 1e-9 * abs(s["objective"])


def test_fit_target_spikes_zero(tmp_path):
    path = tmp_path / "decay.csv"
    path.write_text("\n".join(str(0.9 ** k) for k in range(20)) + "\n")
    summ = tmp_path / "s.json"
    assert main(["fit", "-i", str(path), "--gamma", "0.9", "--target-spikes", "0",
                 "-o", str(tmp_path / "f.csv"), "--summary", str(summ)]) == 0
    s = json.loads(summ.read_text())
    assert s["k"] == 0 and s["target_reached"]


def test_fit_usage_errors(worked, tmp_path):
    out = str(tmp_path / "f.csv")
    assert main(["fit", "-i", str(worked), "--lambda", "1", "-o", out]) == 2
    assert main(["fit", "-i", str(worked), "--gamma", "1.5", "--lambda", "1", "-o", out]) == 2
    assert main(["fit", "-i", str(worked), "--gamma", "0.5", "--lambda", "-1", "-o", out]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["fit", "-i", str(worked), "--gamma", "0.5", "--lambda", "1", "--target-spikes", "2"])
    assert exc.value.code == 2


def test_fit_bad_input_fails(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("y\n1.0\nnan\n")
    assert main(["fit", "-i", str(bad), "--gamma", "0.5", "--lambda", "1", "-o", str(tmp_path / "o.csv")]) == 1
    assert main(["fit", "-i", str(tmp_path / "missing.csv"), "--gamma", "0.5", "--lambda", "1"]) == 1


def test_cv_matches_library(simulated, tmp_path):
    out, summ = tmp_path / "cv.csv", tmp_path / "cv.json"
    assert main(["cv", "-i", str(simulated), "--gamma", "0.96", "--n-lambdas", "12",
                 "-o", str(out), "--summary", str(summ)]) == 0
    rows = rows_of(out)
    rep = cross_validate(read_trace(simulated), AR1(0.96), np.array([float(r["lambda"]) for r in rows]))
    assert np.array_equal([float(r["cv_mse"]) for r in rows], rep.cv_mse)
    assert np.array_equal([float(r["cv_se"]) for r in rows], rep.cv_se)
    s = json.loads(summ.read_text())
    assert s["selected_one_se"] == rep.selected_one_se and s["selected_min"] == rep.selected_min


def test_cv_zero_trace_selects_largest(tmp_path):
    path = tmp_path / "zero.csv"
    path.write_text("y\n" + "0\n" * 40)
    summ = tmp_path / "s.json"
    assert main(["cv", "-i", str(path), "--gamma", "0.9", "--lambdas", "0.1,1,10",
                 "-o", str(tmp_path / "cv.csv"), "--summary", str(summ)]) == 0
    assert json.loads(summ.read_text())["selected_one_se"] == 2


def test_cv_unsorted_grid_is_usage_error(worked, tmp_path):
    assert main(["cv", "-i", str(worked), "--gamma", "0.5", "--lambdas", "1,0.1",
                 "-o", str(tmp_path / "cv.csv")]) == 2


def test_metrics_same_file_is_zero(simulated, tmp_path):
    out = tmp_path / "m.json"
    assert main(["metrics", "--truth", str(simulated), "--estimate", str(simulated), "-o", str(out)]) == 0
    m = json.loads(out.read_text())
    assert m["van_rossum"] == 0.0 and m["victor_purpura"] == 0.0 and m["calcium_mse"] == 0.0


def test_metrics_shifted_spike(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    a.write_text("\n".join("1" if t == 10 else "0" for t in range(1, 21)) + "\n")
    b.write_text("\n".join("1" if t == 12 else "0" for t in range(1, 21)) + "\n")
    out = tmp_path / "m.json"
    assert main(["metrics", "--truth", str(a), "--estimate", str(b), "--vp-q", "0.1", "-o", str(out)]) == 0
    assert json.loads(out.read_text())["victor_purpura"] == pytest.approx(0.2, abs=1e-15)


def test_metrics_horizon_mismatch(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    a.write_text("0\n1\n0\n")
    b.write_text("0\n1\n")
    assert main(["metrics", "--truth", str(a), "--estimate", str(b), "-o", str(tmp_path / "m.json")]) == 1


def test_bench_smoke(tmp_path):
    out = tmp_path / "bench.csv"
    t0 = time.perf_counter()
    assert main(["bench", "--lengths", "200,400", "--thetas", "0.1,0.01", "--seeds", "2", "-o", str(out)]) == 0
    assert time.perf_counter() - t0 < 10
    rows = rows_of(out)
    assert len(rows) == 2 * 2 * 2 * 2


def test_bench_invalid_grid(tmp_path):
    assert main(["bench", "--lengths", "400,200", "-o", str(tmp_path / "b.csv")]) == 2
    assert main(["bench", "--thetas", "x", "-o", str(tmp_path / "b.csv")]) == 2
