import math

import numpy as np
import pytest

from walldetect import WallLabel
from walldetect.core import COL
from walldetect.features import (
    FEATURE_NAMES,
    FeatureFileError,
    WindowError,
    WindowSummary,
    cosine_angle_omega,
    extract_features,
    extract_flight,
    parse_feature_file,
    read_feature_file,
    render_feature_file,
    sliding_windows,
    summarize_window,
    wall_angle_theta,
    write_feature_file,
)

from conftest import make_log


def naive_features(log):
    """Every window summarized from scratch, angles from projected unit vectors."""
    rows = []
    for w in sliding_windows(log):
        stats = summarize_window(w)
        phi = math.radians(w.channel("roll").mean())
        psi = math.radians(w.channel("pitch").mean())
        r = np.array([0.0, math.sin(phi), math.cos(phi)])
        p = np.array([math.sin(psi), 0.0, math.cos(psi)])
        z = r + p
        theta = math.atan2(abs(z[0]), abs(z[1]))
        omega = math.atan2(math.cos(psi), math.cos(phi))
        rows.append([*stats, theta, omega])
    return np.array(rows)


def test_names():
    assert len(FEATURE_NAMES) == 18
    assert FEATURE_NAMES[:2] == ("mean_gyro_x", "mean_gyro_y")
    assert FEATURE_NAMES[-3:] == ("average_resultant", "theta", "omega")


def test_incremental_matches_naive(flight):
    fast = extract_flight(flight)
    slow = naive_features(flight)
    assert fast.shape == slow.shape == (len(flight) - 99, 18)
    np.testing.assert_allclose(fast, slow, rtol=1e-9, atol=1e-9)


def test_incremental_is_stable_with_large_offsets():
    log = make_log(600, seed=5)
    data = log.data.copy()
    data[:, COL["gyro_z"]] += 1e5
    shifted = type(log)(data, log.label, log.flight_id)
    got = extract_flight(shifted)
    want = naive_features(shifted)
    np.testing.assert_allclose(got[:, 7], want[:, 7], rtol=1e-6)


def test_theta_known_values():
    assert wall_angle_theta(0.3, 0.3) == pytest.approx(math.pi / 4, abs=1e-12)
    assert wall_angle_theta(0.0, 0.0) == 0.0
    assert wall_angle_theta(0.0, 0.2) == pytest.approx(math.pi / 2)
    assert wall_angle_theta(0.2, 0.0) == 0.0
    # roll dominant -> small angle
    assert wall_angle_theta(0.5, 0.1) < math.pi / 4


def test_omega_known_values():
    assert cosine_angle_omega(0.0, 0.0) == pytest.approx(math.pi / 4)
    assert cosine_angle_omega(1.0, 0.0) > math.pi / 4
    arr = cosine_angle_omega(np.array([0.1, 0.2]), np.array([0.1, 0.2]))
    np.testing.assert_allclose(arr, math.pi / 4)


def test_window_summary_bounds():
    s = WindowSummary(0.1, -0.2)
    assert s.theta == wall_angle_theta(0.1, -0.2)
    with pytest.raises(ValueError):
        WindowSummary(math.pi / 2, 0.0)


def test_constant_window():
    w = np.tile([3.0, 4.0, 0.0, 1.0, -1.0], (100, 1))
    f = summarize_window(w)
    np.testing.assert_array_equal(f[5:15], 0.0)
    assert f[15] == 5.0


def test_windows_never_span_flights():
    a, b = make_log(150, flight_id="a"), make_log(120, WallLabel.RIGHT, flight_id="b", seed=2)
    ds = extract_features([b, a])
    assert len(ds) == 51 + 21
    assert ds.flight_ids.tolist() == ["a"] * 51 + ["b"] * 21
    assert ds.start_index.tolist()[:3] == [0, 1, 2]
    np.testing.assert_array_equal(ds.X[51:], extract_flight(b))


def test_too_short():
    with pytest.raises(WindowError, match="too short"):
        extract_flight(make_log(99, flight_id="tiny"))


def test_feature_file_round_trip(tmp_path, flight):
    ds = extract_features([flight])
    write_feature_file(ds, tmp_path / "f.csv")
    assert read_feature_file(tmp_path / "f.csv") == ds


def test_feature_file_errors():
    with pytest.raises(FeatureFileError, match="header"):
        parse_feature_file("a,b\n")
    text = render_feature_file(extract_features([make_log(101)])).decode().splitlines()
    with pytest.raises(FeatureFileError, match="line 2"):
        parse_feature_file("\n".join([text[0], text[1] + ",9"]))
    with pytest.raises(FeatureFileError, match="line 3"):
        parse_feature_file("\n".join([text[0], text[1], text[2].replace("left", "up")]))
