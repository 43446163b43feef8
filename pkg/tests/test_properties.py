import math

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from walldetect import FlightLog, WallLabel
from walldetect.classify import ModelSpec
from walldetect.classify.knn import knn_predict
from walldetect.core import COLUMNS
from walldetect.eval import Examples, split_train_test
from walldetect.features import cosine_angle_omega, extract_flight, summarize_window, wall_angle_theta
from walldetect.ingest import parse_flight_log, render_flight_log

from test_features import naive_features

angle = st.floats(-math.pi / 2 + 1e-6, math.pi / 2 - 1e-6)
finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@given(angle, angle)
def test_theta_range_and_complement(phi, psi):
    t = wall_angle_theta(phi, psi)
    assert 0.0 <= t <= math.pi / 2
    assert 0.0 < cosine_angle_omega(phi, psi) < math.pi / 2
    if abs(math.sin(phi)) > 1e-9 and abs(math.sin(psi)) > 1e-9:
        assert abs(t + wall_angle_theta(psi, phi) - math.pi / 2) < 1e-9


@given(arrays(np.float64, (100, 5), elements=st.floats(-1e3, 1e3)))
def test_window_statistics_bounds(w):
    f = summarize_window(w)
    mean, std, mad, res = f[:5], f[5:10], f[10:15], f[15]
    assert np.all(mad <= std * (1 + 1e-12) + 1e-9)
    assert np.all(res >= np.abs(mean[:3]) - 1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(100, 260), st.integers(0, 2**32 - 1), st.floats(0.01, 1e3))
def test_incremental_extraction_matches_naive(n, seed, scale):
    r = np.random.default_rng(seed)
    data = r.normal(size=(n, len(COLUMNS))) * scale
    data[:, 0] = np.arange(n) / 100.0
    data[:, 7:9] = r.uniform(-80, 80, (n, 2))
    log = FlightLog(data, WallLabel.RIGHT, "p")
    np.testing.assert_allclose(extract_flight(log), naive_features(log), rtol=1e-8, atol=1e-8 * scale)


@settings(max_examples=30)
@given(arrays(np.float64, st.tuples(st.integers(1, 20), st.just(13)), elements=finite))
def test_log_text_round_trip(values):
    n = len(values)
    data = np.column_stack([np.arange(n) * 0.01, values])
    data[:, 7:9] = np.clip(data[:, 7:9], -89, 89)
    log = FlightLog(data, WallLabel.FRONT, "rt")
    assert parse_flight_log(render_flight_log(log), WallLabel.FRONT, "rt") == log


@given(st.integers(5, 300), st.floats(0.05, 0.95), st.integers(0, 2**32 - 1), st.booleans())
def test_split_partitions_rows(n, frac, seed, stratified):
    y = np.array(["a", "b"])[np.arange(n) % 2]
    ex = Examples(np.zeros((n, 1)), y, np.array([f"f{i % 7}" for i in range(n)]), ("a", "b"))
    k = math.floor(frac * n + 0.5)
    assume(0 < k < n)
    try:
        tr, te = split_train_test(ex, frac, seed, stratified=stratified)
    except Exception:
        assume(False)
    assert np.array_equal(np.sort(np.concatenate([tr, te])), np.arange(n))
    if not stratified:
        assert len(te) == k


@given(
    st.sampled_from(["knn", "rf", "gb"]),
    st.integers(1, 50),
    st.one_of(st.none(), st.integers(1, 30)),
    st.floats(1e-3, 1.0),
    st.integers(0, 2**64 - 1),
)
def test_model_spec_dict_round_trip(kind, k, depth, lr, seed):
    spec = ModelSpec(kind, knn_k=k, rf_max_depth=depth, gb_learning_rate=lr, seed=seed)
    assert ModelSpec.from_dict(spec.to_dict()) == spec


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 9))
def test_knn_ignores_training_order(seed, k):
    r = np.random.default_rng(seed)
    X = r.integers(-2, 3, (40, 4)).astype(float)
    y = r.integers(0, 3, 40)
    Q = r.integers(-2, 3, (20, 4)).astype(float)
    p = r.permutation(40)
    np.testing.assert_array_equal(knn_predict(X, y, Q, k, 3), knn_predict(X[p], y[p], Q, k, 3))
