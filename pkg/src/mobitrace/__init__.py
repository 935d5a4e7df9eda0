"""Line-of-sight contact analytics for time-sampled position traces."""

from .model import (
    BLUETOOTH_RANGE,
    WIFI_RANGE,
    LandConfig,
    Position,
    RadioRange,
    Snapshot,
    TraceFormatError,
    TraceSet,
    ValidationError,
    distance,
    in_range,
)

__version__ = "0.1.0"
