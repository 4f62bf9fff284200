import json

import numpy as np

from bsmmr.cli import main
from bsmmr.domain import RegionData, write_region_csv


def test_simulate_fit_analyze_pipeline(tmp_path, capsys):
    sim = tmp_path / "sim"
    assert main(["simulate", "--preset", "study1-gaussian", "--seed", "1",
                 "--out", str(sim)]) == 0
    assert (sim / "problem.json").exists()
    assert (sim / "region_1.csv").exists()
    assert (sim / "truth.json").exists()

    fit = tmp_path / "fit"
    assert main(["fit", "--config", str(sim / "problem.json"), "--omega", "0",
                 "--seed", "2", "--iterations", "400", "--burn-in", "100",
                 "--thin", "20", "--out", str(fit)]) == 0
    assert (fit / "checkpoint.json").exists()

    ana = tmp_path / "ana"
    assert main(["analyze", "--config", str(sim / "problem.json"),
                 "--checkpoint", str(fit / "checkpoint.json"),
                 "--truth", str(sim / "truth.json"),
                 "--resolution", "10", "--out", str(ana)]) == 0
    assert (ana / "grid_region_1.csv").exists()
    assert (ana / "report_region_2.json").exists()
    assert (ana / "mae.csv").exists()
    capsys.readouterr()


def test_unknown_preset_exits_2(tmp_path, capsys):
    assert main(["simulate", "--preset", "nope", "--out", str(tmp_path / "x")]) == 2
    capsys.readouterr()


def test_missing_config_exits_2(tmp_path, capsys):
    assert main(["fit", "--config", str(tmp_path / "absent.json")]) == 2
    capsys.readouterr()


def test_selftest_exit_code(capsys):
    assert main(["selftest", "--seed", "0"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 4
    assert "digest" in out


def test_tune_single_region_short_circuits(tmp_path, capsys):
    rng = np.random.default_rng(0)
    reg = RegionData(rng.uniform(size=(20, 2)), rng.standard_normal(20))
    write_region_csv(tmp_path / "region_1.csv", reg)
    doc = {
        "regions": [{"box": {"lower": [0, 0], "upper": [1, 1]}, "data_csv": "region_1.csv"}],
        "prior": {"omega": 0.0, "eta": 2.0},
    }
    with open(tmp_path / "problem.json", "w") as fh:
        json.dump(doc, fh)
    out = tmp_path / "tune"
    assert main(["tune", "--config", str(tmp_path / "problem.json"),
                 "--out", str(out)]) == 0
    result = json.loads((out / "tune.json").read_text())
    assert result["omega_opt"] == 0.0
    assert "note" in result
    capsys.readouterr()


def test_fit_resume_matches_full_run(tmp_path, capsys):
    sim = tmp_path / "sim"
    main(["simulate", "--preset", "threshold-step", "--seed", "4", "--out", str(sim)])

    full = tmp_path / "full"
    main(["fit", "--config", str(sim / "problem.json"), "--omega", "1.0",
          "--seed", "9", "--iterations", "300", "--burn-in", "100", "--thin", "20",
          "--out", str(full)])

    half = tmp_path / "half"
    main(["fit", "--config", str(sim / "problem.json"), "--omega", "1.0",
          "--seed", "9", "--iterations", "150", "--burn-in", "100", "--thin", "20",
          "--out", str(half)])
    resumed = tmp_path / "resumed"
    main(["fit", "--config", str(sim / "problem.json"), "--omega", "1.0",
          "--seed", "9", "--iterations", "300", "--burn-in", "100", "--thin", "20",
          "--resume", str(half / "checkpoint.json"), "--out", str(resumed)])

    doc_full = json.loads((full / "checkpoint.json").read_text())
    doc_res = json.loads((resumed / "checkpoint.json").read_text())
    assert doc_full["surfaces"] == doc_res["surfaces"]
    assert doc_full["samples"] == doc_res["samples"]
    assert doc_full["counters"] == doc_res["counters"]
    capsys.readouterr()
