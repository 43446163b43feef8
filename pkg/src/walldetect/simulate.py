"""Synthetic flight telemetry with a wall-induced disturbance.

Model, per flight:

* Gyro rates carry a frame vibration common to all three axes plus small
  independent per-axis noise.
* Near a wall, the dominant axis (roll for left/right walls, pitch for a
  front wall) picks up a sinusoid with random phase plus band-limited noise.
  Its amplitude scales as ``standoff / max(distance, 0.05 m)``. A fraction
  of that amplitude bleeds onto the other axis as an independent oscillation.
* The wall also tilts the drone slightly toward one side: a constant-sign
  attitude target whose size follows the same distance scaling.
* Roll and pitch integrate the disturbed rates while the stabilizer pulls
  them proportionally toward the target.

Left and right walls are mirror images: with mirrored noise the roll axis
flips sign and the pitch axis is unchanged.
"""

from __future__ import annotations

import dataclasses
import json
import os
import shutil
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np
from scipy.signal import lfilter

from .core import COLUMNS, FlightLog, WallLabel, encode_label
from .ingest import CorpusManifest, ManifestEntry, render_flight_log, write_manifest

REFERENCE_DISTANCE_M = 0.1
MIN_DISTANCE_M = 0.05

# 1.2 m wall passed at 0.1 m/s with 0.1 m standoff; 3 s of approach and exit
DEFAULT_DISTANCE_PROFILE: tuple[tuple[float, float], ...] = (
    (0.0, 0.316),
    (3.0, 0.1),
    (15.0, 0.1),
    (18.0, 0.316),
)


class SimConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    """Simulator parameters. Rates in deg/s, angles in degrees, distances in meters."""

    duration_s: float = 18.0
    nowall_duration_s: float = 36.8
    sample_rate_hz: float = 100.0
    base_noise_std: float = 1.0
    axis_noise_std: float = 0.05
    disturbance_amp: float = 2.0
    disturbance_freq_hz: float = 6.0
    band_noise_ratio: float = 0.0
    attitude_gain: float = 0.0002
    cross_axis_bleed: float = 0.1
    stabilizer_gain: float = 25.0
    speed_mps: float = 0.1
    distance_profile: tuple[tuple[float, float], ...] = field(default=DEFAULT_DISTANCE_PROFILE)
    seed: int = 42

    def __post_init__(self) -> None:
        prof = tuple((float(t), float(d)) for t, d in self.distance_profile)
        object.__setattr__(self, "distance_profile", prof)
        object.__setattr__(self, "seed", int(self.seed))
        self.validate()

    def validate(self) -> None:
        for name in (
            "base_noise_std",
            "axis_noise_std",
            "disturbance_amp",
            "disturbance_freq_hz",
            "band_noise_ratio",
            "attitude_gain",
            "cross_axis_bleed",
            "stabilizer_gain",
            "speed_mps",
        ):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise SimConfigError(f"{name} must be a non-negative number, got {v!r}")
        if not self.sample_rate_hz > 0:
            raise SimConfigError("sample_rate_hz must be positive")
        for name in ("duration_s", "nowall_duration_s"):
            if not getattr(self, name) >= 1.0:
                raise SimConfigError(f"{name} must be at least 1 s (one window)")
        if self.stabilizer_gain / self.sample_rate_hz >= 1.0:
            raise SimConfigError("stabilizer_gain too large for the sample rate")
        if not self.distance_profile:
            raise SimConfigError("distance_profile needs at least one (t, distance) knot")
        ts = [t for t, _ in self.distance_profile]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise SimConfigError("distance_profile times must be strictly increasing")
        if any(d < 0 for _, d in self.distance_profile):
            raise SimConfigError("distance_profile distances must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise SimConfigError("seed must fit in 64 bits")

    def duration_for(self, label: WallLabel) -> float:
        return self.nowall_duration_s if label is WallLabel.NOWALL else self.duration_s

    def n_samples(self, label: WallLabel) -> int:
        return int(round(self.duration_for(label) * self.sample_rate_hz))

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["distance_profile"] = [list(k) for k in self.distance_profile]
        return d

    def to_json(self) -> bytes:
        return (json.dumps(self.to_dict(), indent=2) + "\n").encode("utf-8")

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SimConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise SimConfigError(f"unknown SimConfig fields: {sorted(unknown)}")
        try:
            return cls(**d)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, SimConfigError):
                raise
            raise SimConfigError(str(exc)) from None

    @classmethod
    def from_json(cls, content: bytes | str) -> "SimConfig":
        try:
            d = json.loads(content)
        except json.JSONDecodeError as exc:
            raise SimConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(d, dict):
            raise SimConfigError("config must be a JSON object")
        return cls.from_dict(d)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "SimConfig":
        try:
            return cls.from_json(Path(path).read_bytes())
        except OSError as exc:
            raise SimConfigError(f"cannot read config {str(path)!r}: {exc}") from None

    def replace(self, **changes: Any) -> "SimConfig":
        return self.from_dict({**self.to_dict(), **changes})


def wall_distance(cfg: SimConfig, t) -> np.ndarray:
    knots = np.asarray(cfg.distance_profile)
    return np.interp(t, knots[:, 0], knots[:, 1])


def distance_scale(distance) -> np.ndarray:
    return REFERENCE_DISTANCE_M / np.maximum(distance, MIN_DISTANCE_M)


# label -> (dominant axis, sign applied on that axis); axis 0 = roll, 1 = pitch
_GEOMETRY = {
    WallLabel.LEFT: (0, 1.0),
    WallLabel.RIGHT: (0, -1.0),
    WallLabel.FRONT: (1, 1.0),
}


@dataclass(frozen=True)
class DisturbanceNoise:
    """Random draws behind the wall disturbance.

    ``phase``/``bleed_phase`` are the sinusoid phases of the dominant and
    bleed oscillations; ``band``/``bleed_band`` are unit-variance
    band-limited noise values (scalars or per-sample arrays).
    """

    phase: float
    bleed_phase: float
    band: Any = 0.0
    bleed_band: Any = 0.0


def disturbance_at(label: WallLabel, t, cfg: SimConfig, noise: DisturbanceNoise) -> np.ndarray:
    """Wall-induced increments at time(s) ``t``.

    Returns ``(..., 5)``: rates added to gyro x/y/z (deg/s), then the roll
    and pitch attitude offsets the stabilizer settles to (degrees).
    """
    t = np.asarray(t, dtype=np.float64)
    out = np.zeros(t.shape + (5,))
    if label is WallLabel.NOWALL:
        return out
    axis, sign = _GEOMETRY[label]
    scale = distance_scale(wall_distance(cfg, t))
    w = 2 * np.pi * cfg.disturbance_freq_hz
    amp = cfg.disturbance_amp * scale
    main = amp * (np.sin(w * t + noise.phase) + cfg.band_noise_ratio * np.asarray(noise.band))
    bleed = cfg.cross_axis_bleed * amp * (
        np.sin(w * t + noise.bleed_phase) + cfg.band_noise_ratio * np.asarray(noise.bleed_band)
    )
    other = 1 - axis
    main_sign = sign if axis == 0 else 1.0
    out[..., axis] = main_sign * main
    out[..., other] = bleed
    out[..., 3 + axis] = main_sign * cfg.attitude_gain * amp
    return out


@dataclass(frozen=True, eq=False)
class FlightNoise:
    """Every random draw one flight consumes, so flights can be replayed or mirrored."""

    gyro: np.ndarray  # (n, 3) vibration + per-axis noise
    disturbance: DisturbanceNoise
    acc: np.ndarray  # (n, 3)
    pos: np.ndarray  # (n, 3)
    pressure: np.ndarray  # (n,)
    start: np.ndarray  # (2,) start position offset in the xy-plane

    def mirrored(self) -> "FlightNoise":
        """Reflect roll-axis draws (gyro x, lateral acceleration)."""
        gyro = self.gyro.copy()
        gyro[:, 0] *= -1
        acc = self.acc.copy()
        acc[:, 1] *= -1
        return dataclasses.replace(self, gyro=gyro, acc=acc)


def flight_rng(cfg: SimConfig, flight_id: str) -> np.random.Generator:
    """Per-flight generator derived from ``(seed, flight_id)`` only."""
    key = zlib.crc32(flight_id.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence([cfg.seed, key]))


def _band_limited(rng: np.random.Generator, n: int, freq_hz: float, rate_hz: float) -> np.ndarray:
    """Unit-variance AR(1) noise with corner ``freq_hz``, started in steady state."""
    a = float(np.exp(-2 * np.pi * freq_hz / rate_hz))
    w = rng.standard_normal(n)
    s0 = rng.standard_normal()
    y, _ = lfilter([np.sqrt(1 - a * a)], [1.0, -a], w, zi=[a * s0])
    return y


def draw_flight_noise(cfg: SimConfig, flight_id: str, n: int) -> FlightNoise:
    rng = flight_rng(cfg, flight_id)
    vib = rng.normal(0.0, cfg.base_noise_std, n)
    gyro = vib[:, None] + rng.normal(0.0, cfg.axis_noise_std, (n, 3))
    phase, bleed_phase = rng.uniform(0.0, 2 * np.pi, 2)
    band = _band_limited(rng, n, cfg.disturbance_freq_hz, cfg.sample_rate_hz)
    bleed_band = _band_limited(rng, n, cfg.disturbance_freq_hz, cfg.sample_rate_hz)
    acc = rng.normal(0.0, 0.02, (n, 3))
    pos = rng.normal(0.0, 0.01, (n, 3))
    pressure = rng.normal(0.0, 0.02, n)
    start = rng.uniform(-0.05, 0.05, 2)
    return FlightNoise(
        gyro, DisturbanceNoise(float(phase), float(bleed_phase), band, bleed_band), acc, pos, pressure, start
    )


def _stabilize(rate: np.ndarray, target: np.ndarray, k: float, dt: float) -> np.ndarray:
    # angle[i] = angle[i-1] + dt * (rate[i] - k * (angle[i-1] - target[i])), angle[-1] = target[0]
    a = 1.0 - k * dt
    y, _ = lfilter([dt], [1.0, -a], rate + k * target, zi=[a * target[0]])
    return y


def simulate_flight(
    label: WallLabel,
    cfg: SimConfig,
    flight_id: str,
    noise: FlightNoise | None = None,
) -> FlightLog:
    """One labeled flight; deterministic in ``(label, cfg, flight_id)``."""
    cfg.validate()
    n = cfg.n_samples(label)
    if noise is None:
        noise = draw_flight_noise(cfg, flight_id, n)
    elif len(noise.gyro) != n:
        raise SimConfigError(f"noise bundle has {len(noise.gyro)} samples, flight needs {n}")
    dt = 1.0 / cfg.sample_rate_hz
    t = np.arange(n) * dt

    inc = disturbance_at(label, t, cfg, noise.disturbance)
    gyro = noise.gyro + inc[:, :3]
    roll = _stabilize(gyro[:, 0], inc[:, 3], cfg.stabilizer_gain, dt)
    pitch = _stabilize(gyro[:, 1], inc[:, 4], cfg.stabilizer_gain, dt)
    yaw = (np.cumsum(gyro[:, 2]) * dt + 180.0) % 360.0 - 180.0

    r, p = np.radians(roll), np.radians(pitch)
    acc = np.column_stack([np.sin(p), -np.sin(r) * np.cos(p), np.cos(r) * np.cos(p)]) + noise.acc

    travel = cfg.speed_mps * t
    pos = np.zeros((n, 3))
    along = 1 if label is WallLabel.FRONT else 0
    pos[:, along] = travel
    pos[:, :2] += noise.start
    pos[:, 2] = 0.25
    pos += noise.pos
    pressure = 1013.25 - 0.12 * pos[:, 2] + noise.pressure

    data = np.column_stack([t, gyro, acc, roll, pitch, yaw, pos, pressure])
    assert data.shape[1] == len(COLUMNS)
    return FlightLog(data, label, flight_id, cfg.sample_rate_hz)


def flight_ids(flights_per_class: int) -> list[tuple[WallLabel, str]]:
    return [
        (label, f"{encode_label(label)}-{i:02d}")
        for label in WallLabel
        for i in range(flights_per_class)
    ]


def generate_corpus(
    cfg: SimConfig,
    flights_per_class: int,
    out_dir: str | os.PathLike,
    manifest_name: str = "manifest.json",
) -> CorpusManifest:
    """Write ``flights_per_class`` flights per label plus a manifest.

    On any I/O failure the files written by this call are removed and the
    exception propagates.
    """
    if flights_per_class < 0:
        raise SimConfigError("flights_per_class must be non-negative")
    out = Path(out_dir)
    created_dir = not out.exists()
    written: list[Path] = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        entries = []
        for label, fid in flight_ids(flights_per_class):
            path = out / f"{fid}.csv"
            path.write_bytes(render_flight_log(simulate_flight(label, cfg, fid)))
            written.append(path)
            entries.append(ManifestEntry(path, label, fid))
        manifest = CorpusManifest(tuple(entries))
        mpath = out / manifest_name
        write_manifest(manifest, mpath)
        written.append(mpath)
        cpath = out / "simconfig.json"
        cpath.write_bytes(cfg.to_json())
        written.append(cpath)
    except BaseException:
        for p in written:
            p.unlink(missing_ok=True)
        if created_dir:
            shutil.rmtree(out, ignore_errors=True)
        raise
    return manifest
