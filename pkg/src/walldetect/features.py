"""Sliding-window features.

Each flight is cut into 100-sample windows advanced one sample at a time.
A window yields 18 numbers: mean, sample standard deviation (n - 1) and mean
absolute deviation of gyro x/y/z, roll and pitch; the mean per-sample gyro
norm; and two attitude angles computed from the window-mean roll and pitch.

The statistical features stay in logged units. Roll and pitch are converted
from degrees to radians only inside the two angle features.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numba
import numpy as np

from .core import (
    COL,
    FEATURE_CHANNELS,
    N_FEATURES,
    WINDOW,
    Dataset,
    FlightLog,
    decode_label,
    encode_label,
)

FEATURE_NAMES: tuple[str, ...] = (
    *(f"mean_{c}" for c in FEATURE_CHANNELS),
    *(f"std_{c}" for c in FEATURE_CHANNELS),
    *(f"mad_{c}" for c in FEATURE_CHANNELS),
    "average_resultant",
    "theta",
    "omega",
)
assert len(FEATURE_NAMES) == N_FEATURES

_CHANNEL_IDX = np.array([COL[c] for c in FEATURE_CHANNELS])


class WindowError(ValueError):
    pass


def wall_angle_theta(phi, psi):
    """Angle of the wall in the horizontal plane from mean roll ``phi`` and
    mean pitch ``psi`` (radians).

    The roll and pitch unit vectors are summed and projected on the xy-plane,
    giving ``(sin psi, sin phi)``; the result is
    ``arctan(|sin psi| / |sin phi|)`` in ``[0, pi/2]``. Both sines zero gives
    0, only ``sin phi`` zero gives ``pi/2``. Accepts scalars or arrays.
    """
    num = np.abs(np.sin(psi))
    den = np.abs(np.sin(phi))
    # arctan2 of non-negative args: 0/0 -> 0, x/0 -> pi/2
    out = np.arctan2(num, den)
    return float(out) if np.ndim(out) == 0 else out


def cosine_angle_omega(phi, psi):
    """``arctan2(cos psi, cos phi)`` for mean roll ``phi`` and pitch ``psi`` (radians)."""
    out = np.arctan2(np.cos(psi), np.cos(phi))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class WindowSummary:
    """Window-averaged roll and pitch, radians."""

    mean_phi: float
    mean_psi: float

    def __post_init__(self) -> None:
        half = np.pi / 2
        if not (-half < self.mean_phi < half and -half < self.mean_psi < half):
            raise ValueError("mean roll/pitch must lie in (-pi/2, pi/2)")

    @property
    def theta(self) -> float:
        return wall_angle_theta(self.mean_phi, self.mean_psi)

    @property
    def omega(self) -> float:
        return cosine_angle_omega(self.mean_phi, self.mean_psi)


@dataclass(frozen=True, eq=False)
class Window:
    """A view of ``WINDOW`` consecutive samples of one flight."""

    data: np.ndarray
    flight_id: str
    start_index: int

    def __len__(self) -> int:
        return self.data.shape[0]

    def channel(self, name: str) -> np.ndarray:
        return self.data[:, COL[name]]


def sliding_windows(log: FlightLog, width: int = WINDOW) -> list[Window]:
    n = len(log)
    if n < width:
        raise WindowError(f"flight {log.flight_id}: too short ({n} samples < {width})")
    return [Window(log.data[i : i + width], log.flight_id, i) for i in range(n - width + 1)]


def summarize_window(w: Window | np.ndarray) -> np.ndarray:
    """The 16 statistical features of one window, computed directly.

    This is the straightforward per-window definition; :func:`extract_flight`
    produces the same numbers incrementally.
    """
    data = w.data if isinstance(w, Window) else np.asarray(w)
    x = data[:, _CHANNEL_IDX] if data.shape[1] != len(FEATURE_CHANNELS) else data
    mean = x.mean(axis=0)
    std = x.std(axis=0, ddof=1)
    mad = np.abs(x - mean).mean(axis=0)
    resultant = np.sqrt((x[:, :3] ** 2).sum(axis=1)).mean()
    return np.concatenate([mean, std, mad, [resultant]])


@numba.njit(cache=True, nogil=True)
def _rolling_stats(x, w):
    """Per-window mean, sample std and MAD of each column of ``x``.

    Shifted sums of x and x^2 slide one sample per step and are rebuilt
    exactly every ``w`` steps so rounding cannot accumulate. MAD needs the
    window mean, so it takes one pass over the window.
    """
    n, c = x.shape
    m = n - w + 1
    mean = np.empty((m, c))
    std = np.empty((m, c))
    mad = np.empty((m, c))
    for j in range(c):
        shift = x[0, j]
        s1 = 0.0
        s2 = 0.0
        for i in range(m):
            if i % w == 0:
                s1 = 0.0
                s2 = 0.0
                for k in range(i, i + w):
                    d = x[k, j] - shift
                    s1 += d
                    s2 += d * d
            else:
                d_in = x[i + w - 1, j] - shift
                d_out = x[i - 1, j] - shift
                s1 += d_in - d_out
                s2 += d_in * d_in - d_out * d_out
            mu = s1 / w
            var = (s2 - s1 * mu) / (w - 1)
            if var < 0.0:
                var = 0.0
            mean[i, j] = shift + mu
            std[i, j] = np.sqrt(var)
            center = mean[i, j]
            acc = 0.0
            for k in range(i, i + w):
                acc += abs(x[k, j] - center)
            mad[i, j] = acc / w
    return mean, std, mad


@numba.njit(cache=True, nogil=True)
def _rolling_mean(v, w):
    n = v.shape[0]
    m = n - w + 1
    out = np.empty(m)
    s = 0.0
    for i in range(m):
        if i % w == 0:
            s = 0.0
            for k in range(i, i + w):
                s += v[k]
        else:
            s += v[i + w - 1] - v[i - 1]
        out[i] = s / w
    return out


def extract_flight(log: FlightLog, width: int = WINDOW) -> np.ndarray:
    """Feature matrix ``(len(log) - width + 1, 18)`` for one flight."""
    n = len(log)
    if n < width:
        raise WindowError(f"flight {log.flight_id}: too short ({n} samples < {width})")
    x = np.ascontiguousarray(log.data[:, _CHANNEL_IDX])
    mean, std, mad = _rolling_stats(x, width)
    norms = np.sqrt(x[:, 0] ** 2 + x[:, 1] ** 2 + x[:, 2] ** 2)
    resultant = _rolling_mean(norms, width)
    phi = np.radians(mean[:, 3])
    psi = np.radians(mean[:, 4])
    theta = wall_angle_theta(phi, psi)
    omega = cosine_angle_omega(phi, psi)
    return np.column_stack([mean, std, mad, resultant, theta, omega])


def flight_dataset(log: FlightLog, width: int = WINDOW) -> Dataset:
    X = extract_flight(log, width)
    m = len(X)
    return Dataset(X, [log.label] * m, [log.flight_id] * m, np.arange(m))


def extract_features(logs: Iterable[FlightLog], width: int = WINDOW) -> Dataset:
    """One row per window per flight, sorted by ``(flight_id, start_index)``."""
    parts = [flight_dataset(log, width) for log in logs]
    return Dataset.concat(parts)


# feature file ------------------------------------------------------------

FEATURE_HEADER = ",".join(("flight_id", "start_index", "label", *FEATURE_NAMES))


class FeatureFileError(ValueError):
    pass


def render_feature_file(ds: Dataset) -> bytes:
    lines = [FEATURE_HEADER]
    for fid, start, lab, row in zip(
        ds.flight_ids.tolist(), ds.start_index.tolist(), ds.labels.tolist(), ds.X.tolist()
    ):
        lines.append(",".join((fid, str(start), encode_label(lab), *map(repr, row))))
    lines.append("")
    return "\n".join(lines).encode("utf-8")


def parse_feature_file(content: bytes | str) -> Dataset:
    text = content.decode("utf-8") if isinstance(content, (bytes, bytearray)) else content
    lines = text.splitlines()
    if not lines or lines[0].strip() != FEATURE_HEADER:
        raise FeatureFileError("missing or unexpected feature-file header")
    fids, starts, labels, rows = [], [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        f = line.split(",")
        if len(f) != 3 + N_FEATURES:
            raise FeatureFileError(f"line {lineno}: expected {3 + N_FEATURES} fields, found {len(f)}")
        try:
            fids.append(f[0])
            starts.append(int(f[1]))
            labels.append(decode_label(f[2]))
            rows.append([float(v) for v in f[3:]])
        except ValueError as exc:
            raise FeatureFileError(f"line {lineno}: {exc}") from None
    return Dataset(np.array(rows, dtype=np.float64).reshape(-1, N_FEATURES), labels, fids, starts)


def write_feature_file(ds: Dataset, path: str | os.PathLike) -> None:
    Path(path).write_bytes(render_feature_file(ds))


def read_feature_file(path: str | os.PathLike) -> Dataset:
    return parse_feature_file(Path(path).read_bytes())

