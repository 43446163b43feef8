"""Detect nearby walls from a small drone's IMU telemetry."""

from .core import COLUMNS, Dataset, FlightLog, ImuSample, WallLabel, validate_flight_log

__all__ = ["COLUMNS", "Dataset", "FlightLog", "ImuSample", "WallLabel", "validate_flight_log"]
__version__ = "0.1.0"
