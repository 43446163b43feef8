import json

import pytest

from walldetect.classify import load_model
from walldetect.cli import main
from walldetect.eval import parse_report
from walldetect.simulate import SimConfig

FAST = ["--rf-trees", "4", "--gb-stages", "3", "--knn-k", "3"]


@pytest.fixture
def cfg_file(tmp_path, short_cfg):
    p = tmp_path / "sim.json"
    p.write_bytes(short_cfg.to_json())
    return p


def test_pipeline_commands(tmp_path, cfg_file, capsys):
    corpus = tmp_path / "corpus"
    assert main(["simulate", "--config", str(cfg_file), "--out", str(corpus), "--flights-per-class", "2"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# walldetect simulate: effective configuration")
    assert "left    2 flights" in out

    assert main(["ingest", "--manifest", str(corpus / "manifest.json")]) == 0
    assert "8 flights ingested" in capsys.readouterr().out

    feats = tmp_path / "features.csv"
    assert main(["extract", "--manifest", str(corpus / "manifest.json"), "--out", str(feats)]) == 0
    assert "2408 rows written" in capsys.readouterr().out  # 8 flights x 301 windows

    model = tmp_path / "m.json"
    assert main(["train", "--features", str(feats), "--experiment", "e3", "--classifier", "gb",
                 "--out", str(model), *FAST]) == 0
    assert "trained gb on" in capsys.readouterr().out
    m = load_model(model.read_bytes())
    assert m.classes == ("left", "right", "front") and m.spec.gb_stages == 3

    report = tmp_path / "e1.json"
    assert main(["evaluate", "--features", str(feats), "--experiment", "e1", "--reps", "2",
                 "--classifier", "knn", "--classifier", "rf", "--report", str(report), *FAST]) == 0
    out = capsys.readouterr().out
    cfg, _ = json.JSONDecoder().raw_decode(out.split("\n", 1)[1])
    assert cfg["experiment"]["repetitions"] == 2
    rep = parse_report(report.read_bytes())
    assert [r.name for r in rep.results] == ["knn", "rf"]


def test_reproduce_small(tmp_path, cfg_file, capsys):
    args = ["reproduce", "--config", str(cfg_file), "--reps", "1", "--flights-per-class", "2", "--save-models", *FAST]
    assert main([*args, "--out", str(tmp_path / "a")]) == 0
    assert main([*args, "--out", str(tmp_path / "b")]) == 0
    capsys.readouterr()
    for name in ("reports/e1.json", "reports/e4.json", "models/e2-gb.json", "summary.json", "summary.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["rf_ordering"]["expected"] == "e2 < e3 < e4 < e1"
    assert set(summary["accuracy"]) == {"e1", "e2", "e3", "e4"}
    assert "RF ordering expected" in (tmp_path / "a" / "summary.txt").read_text()


def test_seed_flag_overrides_config(tmp_path, cfg_file, capsys):
    out = tmp_path / "c"
    assert main(["simulate", "--config", str(cfg_file), "--seed", "9", "--out", str(out), "--flights-per-class", "1"]) == 0
    assert SimConfig.load(out / "simconfig.json").seed == 9


def test_errors_exit_nonzero(tmp_path, capsys):
    assert main(["ingest", "--manifest", str(tmp_path / "none.json")]) == 1
    assert "manifest not found" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text('{"stabilizer_gain": 1000}')
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path / "x")]) == 1
    assert "too large" in capsys.readouterr().err
    assert main(["evaluate", "--features", str(tmp_path / "f.csv"), "--experiment", "e1",
                 "--report", str(tmp_path / "r.json")]) == 1


def test_reproduce_reports_failed_stage(tmp_path, cfg_file, capsys):
    blocker = tmp_path / "out"
    blocker.write_text("not a directory")
    assert main(["reproduce", "--config", str(cfg_file), "--out", str(blocker), "--reps", "1"]) == 1
    assert "stage 'simulate'" in capsys.readouterr().err


def test_help_lists_subcommands(capsys):
    with pytest.raises(SystemExit):
        main(["--help"])
    out = capsys.readouterr().out
    for cmd in ("simulate", "ingest", "extract", "train", "evaluate", "reproduce"):
        assert cmd in out


def test_simulate_default_and_single_flight_counts(tmp_path, capsys):
    assert main(["simulate", "--out", str(tmp_path / "d"), "--flights-per-class", "1"]) == 0
    assert len(list((tmp_path / "d").glob("*.csv"))) == 4
    assert main(["simulate", "--out", str(tmp_path / "e")]) == 0
    assert len(list((tmp_path / "e").glob("*.csv"))) == 20
    assert main(["simulate", "--out", str(tmp_path / "d2"), "--flights-per-class", "1"]) == 0
    for f in (tmp_path / "d").iterdir():
        assert f.read_bytes() == (tmp_path / "d2" / f.name).read_bytes()


def test_extract_rerun_is_identical(tmp_path, cfg_file, capsys):
    main(["simulate", "--config", str(cfg_file), "--out", str(tmp_path / "c"), "--flights-per-class", "1"])
    m = str(tmp_path / "c" / "manifest.json")
    main(["extract", "--manifest", m, "--out", str(tmp_path / "a.csv")])
    main(["extract", "--manifest", m, "--out", str(tmp_path / "b.csv")])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_unknown_experiment_is_usage_error(tmp_path, capsys):
    with pytest.raises(SystemExit) as err:
        main(["evaluate", "--features", "f.csv", "--experiment", "e9", "--report", "r.json"])
    assert err.value.code == 2
