"""Domain types shared by the whole pipeline.

Raw telemetry is kept in logged units (degrees, degrees/second, g, meters).
A :class:`FlightLog` stores its samples as a read-only ``(n, 14)`` float
array whose columns follow :data:`COLUMNS`; :class:`ImuSample` objects are
materialized on demand.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

COLUMNS: tuple[str, ...] = (
    "t",
    "gyro_x",
    "gyro_y",
    "gyro_z",
    "acc_x",
    "acc_y",
    "acc_z",
    "roll",
    "pitch",
    "yaw",
    "pos_x",
    "pos_y",
    "pos_z",
    "pressure",
)
COL = {name: i for i, name in enumerate(COLUMNS)}

# channels the feature extractor consumes, in feature order
FEATURE_CHANNELS: tuple[str, ...] = ("gyro_x", "gyro_y", "gyro_z", "roll", "pitch")

WINDOW = 100
NOMINAL_RATE_HZ = 100.0
N_FEATURES = 18


class WallLabel(enum.Enum):
    """Where the wall is relative to the drone during a flight."""

    LEFT = "left"
    RIGHT = "right"
    FRONT = "front"
    NOWALL = "nowall"

    @property
    def binary(self) -> "Presence":
        return Presence.NOWALL if self is WallLabel.NOWALL else Presence.WALL

    def __str__(self) -> str:
        return self.value


class Presence(enum.Enum):
    """Binary view of :class:`WallLabel`."""

    WALL = "wall"
    NOWALL = "nowall"

    def __str__(self) -> str:
        return self.value


LABELS: tuple[WallLabel, ...] = tuple(WallLabel)


class LabelError(ValueError):
    pass


def encode_label(label: WallLabel) -> str:
    return label.value


def decode_label(token: str) -> WallLabel:
    try:
        return WallLabel(token.strip().lower())
    except ValueError:
        raise LabelError(f"unknown wall label {token!r}") from None


@dataclass(frozen=True)
class ImuSample:
    t: float
    gyro_x: float
    gyro_y: float
    gyro_z: float
    acc_x: float
    acc_y: float
    acc_z: float
    roll: float
    pitch: float
    yaw: float
    pos_x: float
    pos_y: float
    pos_z: float
    pressure: float

    def as_row(self) -> tuple[float, ...]:
        return tuple(getattr(self, c) for c in COLUMNS)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, order="C", copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FlightLog:
    """Ordered telemetry of one flight.

    ``data`` has one row per sample and one column per entry of
    :data:`COLUMNS`. Construction does not validate; use
    :func:`validate_flight_log`.
    """

    data: np.ndarray
    label: WallLabel
    flight_id: str
    sample_rate_hz: float = NOMINAL_RATE_HZ

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[1] != len(COLUMNS):
            raise ValueError(
                f"flight data must have shape (n, {len(COLUMNS)}), got {data.shape}"
            )
        object.__setattr__(self, "data", _frozen(data))

    @classmethod
    def from_samples(
        cls,
        samples: Sequence[ImuSample],
        label: WallLabel,
        flight_id: str,
        sample_rate_hz: float = NOMINAL_RATE_HZ,
    ) -> "FlightLog":
        data = np.array([s.as_row() for s in samples], dtype=np.float64)
        return cls(data.reshape(len(samples), len(COLUMNS)), label, flight_id, sample_rate_hz)

    def __len__(self) -> int:
        return self.data.shape[0]

    def __iter__(self) -> Iterator[ImuSample]:
        for row in self.data.tolist():
            yield ImuSample(*row)

    def __getitem__(self, i: int) -> ImuSample:
        return ImuSample(*self.data[i].tolist())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FlightLog):
            return NotImplemented
        return (
            self.label is other.label
            and self.flight_id == other.flight_id
            and self.sample_rate_hz == other.sample_rate_hz
            and np.array_equal(self.data, other.data)
        )

    @property
    def samples(self) -> tuple[ImuSample, ...]:
        return tuple(self)

    def channel(self, name: str) -> np.ndarray:
        return self.data[:, COL[name]]

    @property
    def t(self) -> np.ndarray:
        return self.data[:, 0]


@dataclass(frozen=True)
class Violation:
    index: int | None
    rule: str
    message: str

    def __str__(self) -> str:
        return self.message


# rules that make a log unusable; the rest are advisory
BLOCKING_RULES = frozenset({"non_finite", "negative_t", "non_monotonic_t", "attitude_range"})


def validate_flight_log(log: FlightLog) -> list[Violation]:
    """Check every FlightLog invariant; an empty list means the log is clean.

    Rules: ``non_finite``, ``negative_t``, ``non_monotonic_t``,
    ``attitude_range`` (|roll| or |pitch| >= 90 degrees), ``too_short``
    (fewer samples than one window) and ``sample_rate`` (mean inter-sample
    gap more than 20% away from the nominal period).
    """
    out: list[Violation] = []
    data = log.data
    n = len(log)
    t = data[:, 0]

    bad = np.flatnonzero(~np.isfinite(data).all(axis=1))
    for i in bad.tolist():
        out.append(Violation(i, "non_finite", f"non-finite value at index {i}"))

    for i in np.flatnonzero(t < 0).tolist():
        out.append(Violation(i, "negative_t", f"negative t at index {i}"))

    if n > 1:
        step = np.diff(t)
        for i in (np.flatnonzero(~(step > 0)) + 1).tolist():
            out.append(Violation(i, "non_monotonic_t", f"non-monotonic t at index {i}"))

    for name in ("roll", "pitch"):
        col = data[:, COL[name]]
        for i in np.flatnonzero(np.abs(col) >= 90.0).tolist():
            out.append(
                Violation(i, "attitude_range", f"{name} outside (-90, 90) at index {i}")
            )

    win = int(round(log.sample_rate_hz))
    if n < win:
        out.append(Violation(None, "too_short", f"too short for one window ({n} < {win} samples)"))

    if n > 1 and np.isfinite(t).all():
        gap = (t[-1] - t[0]) / (n - 1)
        nominal = 1.0 / log.sample_rate_hz
        if abs(gap - nominal) > 0.2 * nominal:
            out.append(
                Violation(
                    None,
                    "sample_rate",
                    f"mean sample gap {gap * 1e3:.3f} ms deviates >20% from {nominal * 1e3:.3f} ms",
                )
            )
    return out


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature rows for one or more flights.

    Rows are sorted by ``(flight_id, start_index)``; ``labels`` holds
    :class:`WallLabel` members.
    """

    X: np.ndarray
    labels: np.ndarray
    flight_ids: np.ndarray
    start_index: np.ndarray
    feature_names: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        X = np.asarray(self.X, dtype=np.float64).reshape(-1, N_FEATURES)
        labels = np.asarray(self.labels, dtype=object)
        fids = np.asarray(self.flight_ids, dtype=object)
        start = np.asarray(self.start_index, dtype=np.int64)
        if not (len(X) == len(labels) == len(fids) == len(start)):
            raise ValueError("dataset columns have different lengths")
        keys = set(zip(fids.tolist(), start.tolist()))
        if len(keys) != len(X):
            raise ValueError("duplicate (flight_id, window_start_index) rows")
        for name, a in (("X", X), ("labels", labels), ("flight_ids", fids), ("start_index", start)):
            a = a.copy()
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if not self.feature_names:
            from .features import FEATURE_NAMES

            object.__setattr__(self, "feature_names", FEATURE_NAMES)

    def __len__(self) -> int:
        return len(self.X)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            np.array_equal(self.X, other.X)
            and self.labels.tolist() == other.labels.tolist()
            and self.flight_ids.tolist() == other.flight_ids.tolist()
            and np.array_equal(self.start_index, other.start_index)
        )

    def class_counts(self) -> dict[WallLabel, int]:
        return {lab: int(np.sum(self.labels == lab)) for lab in LABELS if np.any(self.labels == lab)}

    def flights(self, label: WallLabel | None = None) -> list[str]:
        if label is None:
            return sorted(set(self.flight_ids.tolist()))
        return sorted(set(self.flight_ids[self.labels == label].tolist()))

    def subset(self, mask: np.ndarray) -> "Dataset":
        return Dataset(
            self.X[mask], self.labels[mask], self.flight_ids[mask], self.start_index[mask], self.feature_names
        )

    @classmethod
    def concat(cls, parts: Sequence["Dataset"]) -> "Dataset":
        if not parts:
            return cls(np.empty((0, N_FEATURES)), [], [], [])
        ds = cls(
            np.vstack([p.X for p in parts]),
            np.concatenate([p.labels for p in parts]),
            np.concatenate([p.flight_ids for p in parts]),
            np.concatenate([p.start_index for p in parts]),
        )
        order = np.lexsort((ds.start_index, ds.flight_ids.astype(str)))
        return ds.subset(order)
