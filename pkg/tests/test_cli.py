import json

import numpy as np
import pytest

from frespond.cli import main
from frespond.scenario import write_synthetic_measurements, predict_map
from frespond.specfile import load_spec, model_patterns

SMALL_SPEC = {
    "schema": 1,
    "seed": 7,
    "grid": {
        "n_along": 3,
        "n_across": 3,
        "spacing_along_m": 1.0,
        "spacing_across_m": 0.8,
        "origin_x_m": 1.0,
    },
    "frequencies": {"start_hz": 2.4e9, "stop_hz": 2.5e9, "count": 5},
    "jitter": {"delta_m": 0.06, "n_samples": 4},
    "quadrature": {"mode": "fixed", "step_m": 0.015},
    "membership": {"rule": "barycenter"},
}


@pytest.fixture
def small_spec(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(SMALL_SPEC))
    return path


def run(*argv):
    return main([str(a) for a in argv])


def read_map_csv(path):
    rows = path.read_text().strip().splitlines()
    assert rows[0] == "position_id,x_m,y_m,a_s_db"
    return np.loadtxt(rows[1:], delimiter=",")


def test_map_writes_expected_files(small_spec, tmp_path):
    out = tmp_path / "out"
    assert run("map", small_spec, "--out", out, "--model", "omni", "--threads", 2) == 0
    data = read_map_csv(out / "map.csv")
    assert data.shape == (9, 4)
    doc = json.loads((out / "map.json").read_text())
    assert len(doc["positions"]) == 9
    manifest = json.loads((out / "manifest.json").read_text())
    assert {o["path"] for o in manifest["outputs"]} == {"map.csv", "map.json"}
    assert manifest["seed"] == 7


def test_map_reruns_are_byte_identical(small_spec, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("map", small_spec, "--out", a, "--model", "omni") == 0
    assert run("map", small_spec, "--out", b, "--model", "omni") == 0
    assert (a / "map.csv").read_bytes() == (b / "map.csv").read_bytes()
    assert (a / "map.json").read_bytes() == (b / "map.json").read_bytes()


def test_map_peak_attenuation_is_on_the_los(small_spec, tmp_path):
    out = tmp_path / "out"
    assert run("map", small_spec, "--out", out, "--model", "dir") == 0
    data = read_map_csv(out / "map.csv")
    peak = data[np.argmax(data[:, 3])]
    assert peak[2] == 0.0  # y of the strongest blockage


def test_model_override_changes_results(small_spec, tmp_path):
    out_o, out_d = tmp_path / "o", tmp_path / "d"
    assert run("map", small_spec, "--out", out_o, "--model", "omni") == 0
    assert run("map", small_spec, "--out", out_d, "--model", "dir") == 0
    a = read_map_csv(out_o / "map.csv")
    b = read_map_csv(out_d / "map.csv")
    assert not np.allclose(a[:, 3], b[:, 3])


def test_empty_grid_is_a_validation_error(small_spec, tmp_path):
    doc = dict(SMALL_SPEC)
    doc["grid"] = dict(doc["grid"], n_along=0)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert run("map", bad, "--out", tmp_path / "x") == 2


def test_malformed_json_exits_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("map", bad, "--out", tmp_path / "x") == 2


def test_budget_overrun_exits_3(small_spec, tmp_path):
    doc = dict(SMALL_SPEC)
    doc["quadrature"] = {"mode": "fixed", "step_m": 0.015, "max_samples": 10}
    bad = tmp_path / "tiny-budget.json"
    bad.write_text(json.dumps(doc))
    assert run("map", bad, "--out", tmp_path / "x") == 3


def test_cuts_outputs_bands(small_spec, tmp_path):
    out = tmp_path / "cuts"
    assert run("cuts", small_spec, "--columns", "1,2", "--out", out, "--model", "omni") == 0
    for col in (1, 2):
        rows = (out / f"cut_col{col}.csv").read_text().strip().splitlines()
        assert rows[0] == "position_id,x_m,y_m,mean_db,p20_db,p80_db"
        data = np.loadtxt(rows[1:], delimiter=",")
        assert data.shape == (3, 6)
        assert np.all(data[:, 4] <= data[:, 5])  # p20 <= p80
    manifest = json.loads((out / "manifest.json").read_text())
    assert {o["path"] for o in manifest["outputs"]} == {"cut_col1.csv", "cut_col2.csv"}


def test_cuts_band_brackets_mean_on_los(small_spec, tmp_path):
    out = tmp_path / "cuts"
    assert run("cuts", small_spec, "--columns", "2", "--out", out, "--model", "omni") == 0
    rows = (out / "cut_col2.csv").read_text().strip().splitlines()
    data = np.loadtxt(rows[1:], delimiter=",")
    on_los = data[data[:, 2] == 0.0][0]
    assert on_los[4] <= on_los[3] <= on_los[5]


def test_cuts_rejects_unknown_column(small_spec, tmp_path):
    assert run("cuts", small_spec, "--columns", "99", "--out", tmp_path / "x") == 2


def test_detect_reports_model_numbers(small_spec, tmp_path):
    out = tmp_path / "det"
    assert run("detect", small_spec, "--out", out, "--model", "omni") == 0
    doc = json.loads((out / "detect.json").read_text())
    model = doc["model"]
    assert set(model) == {"f0", "f1", "separation_db", "kl_f0_f1", "auc"}
    assert model["separation_db"] > 0
    assert doc["membership"]["inside_ids"]
    roc_rows = (out / "roc_model.csv").read_text().strip().splitlines()
    assert roc_rows[0] == "pfa,pd"


def test_detect_closed_loop_with_synthetic_measurements(small_spec, tmp_path):
    spec = load_spec(small_spec)
    tx, rx = model_patterns("omni")
    amap = predict_map(spec.config.with_patterns(tx, rx), workers=2)
    power, free = tmp_path / "p.csv", tmp_path / "p0.csv"
    write_synthetic_measurements(amap, p0_dbm=-40.0, power_csv=power, freespace_csv=free)

    out = tmp_path / "det"
    assert (
        run("detect", small_spec, "--out", out, "--model", "omni",
            "--measurements", power, free) == 0
    )
    doc = json.loads((out / "detect.json").read_text())
    model, measured = doc["model"], doc["measured"]
    assert measured["separation_db"] == pytest.approx(model["separation_db"], abs=1e-6)
    assert measured["kl_f0_f1"] == pytest.approx(model["kl_f0_f1"], abs=1e-6)
    assert measured["auc"] == pytest.approx(model["auc"], abs=1e-6)
    assert (out / "roc_measured.csv").exists()


def test_detect_empty_inside_set_exits_2(small_spec, tmp_path):
    doc = dict(SMALL_SPEC)
    # push every grid position far outside the ellipsoid
    doc["grid"] = dict(doc["grid"], spacing_across_m=3.0)
    doc["membership"] = {"rule": "explicit", "inside_ids": [], "outside_ids": [1, 2, 3]}
    bad = tmp_path / "allout.json"
    bad.write_text(json.dumps(doc))
    assert run("detect", bad, "--out", tmp_path / "x") == 2


def test_validate_accepts_paper_spec(capsys):
    assert run("validate", "configs/paper-default.json") == 0
    out = capsys.readouterr().out
    assert "spec OK" in out
    assert "quadrature cost" in out


def test_validate_warns_on_near_field(small_spec, tmp_path, capsys):
    doc = dict(SMALL_SPEC)
    doc["grid"] = dict(doc["grid"], origin_x_m=0.05, n_along=1, n_across=1)
    spec = tmp_path / "near.json"
    spec.write_text(json.dumps(doc))
    assert run("validate", spec) == 0
    out = capsys.readouterr().out
    assert "WARNING" in out and "TX" in out


def test_validate_rejects_malformed_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert run("validate", bad) == 2


def test_map_csv_roundtrips_against_json(small_spec, tmp_path):
    out = tmp_path / "out"
    assert run("map", small_spec, "--out", out, "--model", "omni") == 0
    csv_data = read_map_csv(out / "map.csv")
    doc = json.loads((out / "map.json").read_text())
    json_agg = np.array([p["a_s_db"] for p in doc["positions"]])
    np.testing.assert_allclose(csv_data[:, 3], json_agg, rtol=0, atol=0)
