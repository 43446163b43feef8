import json

import pytest

from walldetect import FlightLog, WallLabel
from walldetect.ingest import (
    HEADER,
    CorpusManifest,
    LogParseError,
    LogValidationError,
    ManifestEntry,
    ManifestError,
    load_corpus,
    manifest_from_json,
    parse_flight_log,
    read_manifest,
    render_flight_log,
    write_flight_log,
    write_manifest,
)

from conftest import make_log


def test_render_parse_round_trip_is_exact():
    log = make_log(130, WallLabel.FRONT, "front-00")
    back = parse_flight_log(render_flight_log(log), WallLabel.FRONT, "front-00")
    assert back == log
    assert render_flight_log(back) == render_flight_log(log)


def test_header_mismatch():
    with pytest.raises(LogParseError) as err:
        parse_flight_log("a,b,c\n1,2,3\n", WallLabel.LEFT, "x")
    assert err.value.line == 1


def test_bad_row_reports_line_number():
    text = render_flight_log(make_log(5)).decode().splitlines()
    text[3] = "x," + text[3].split(",", 1)[1]
    with pytest.raises(LogParseError) as err:
        parse_flight_log("\n".join(text), WallLabel.LEFT, "x")
    assert err.value.line == 4
    assert "line 4" in str(err.value)

    text = render_flight_log(make_log(5)).decode().splitlines()
    text[2] = text[2] + ",1.0"
    with pytest.raises(LogParseError, match="15"):
        parse_flight_log("\n".join(text), WallLabel.LEFT, "x")


def test_empty_and_header_only():
    with pytest.raises(LogParseError, match="empty"):
        parse_flight_log(b"", WallLabel.LEFT, "x")
    with pytest.raises(LogParseError, match="no samples"):
        parse_flight_log(HEADER + "\n", WallLabel.LEFT, "x")


def test_blocking_violation_rejects_log():
    data = make_log(120).data.copy()
    data[50, 0] = data[10, 0]
    bad = render_flight_log(FlightLog(data, WallLabel.LEFT, "x"))
    with pytest.raises(LogValidationError) as err:
        parse_flight_log(bad, WallLabel.LEFT, "x")
    assert any(v.rule == "non_monotonic_t" and v.index == 50 for v in err.value.violations)


def test_short_log_is_accepted():
    assert len(parse_flight_log(render_flight_log(make_log(20)), WallLabel.LEFT, "x")) == 20


def test_manifest_round_trip_and_relative_paths(tmp_path):
    logs = [make_log(120, WallLabel.LEFT, "l0"), make_log(110, WallLabel.NOWALL, "n0", seed=3)]
    entries = []
    for log in logs:
        p = tmp_path / f"{log.flight_id}.csv"
        write_flight_log(log, p)
        entries.append(ManifestEntry(p, log.label, log.flight_id))
    write_manifest(CorpusManifest(tuple(entries)), tmp_path / "manifest.json")
    raw = json.loads((tmp_path / "manifest.json").read_text())
    assert raw[0] == {"path": "l0.csv", "label": "left", "flight_id": "l0"}
    loaded = load_corpus(read_manifest(tmp_path / "manifest.json"))
    assert loaded == logs


def test_manifest_errors(tmp_path):
    with pytest.raises(ManifestError, match="JSON"):
        manifest_from_json("{")
    with pytest.raises(ManifestError, match="array"):
        manifest_from_json("{}")
    with pytest.raises(ManifestError, match="entry 0"):
        manifest_from_json('[{"path": "a"}]')
    with pytest.raises(ManifestError, match="unknown wall label"):
        manifest_from_json('[{"path": "a", "label": "up", "flight_id": "a"}]')
    with pytest.raises(ManifestError, match="duplicate"):
        manifest_from_json(
            '[{"path": "a", "label": "left", "flight_id": "a"},'
            ' {"path": "b", "label": "left", "flight_id": "a"}]'
        )
    m = manifest_from_json('[{"path": "gone.csv", "label": "left", "flight_id": "a"}]', tmp_path)
    with pytest.raises(ManifestError, match="missing flight-log file"):
        load_corpus(m)
    with pytest.raises(ManifestError, match="not found"):
        read_manifest(tmp_path / "nope.json")


def test_corpus_parse_error_names_flight(tmp_path):
    (tmp_path / "a.csv").write_text(HEADER + "\n1,2\n")
    m = manifest_from_json('[{"path": "a.csv", "label": "right", "flight_id": "r9"}]', tmp_path)
    with pytest.raises(LogParseError, match="flight r9, line 2"):
        load_corpus(m)
