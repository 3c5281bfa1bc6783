"""Radiometric frame/clip data model, calibration and the THRM container.

A clip stores raw 16-bit sensor counts; temperatures are derived on demand
through a linear calibration ``temp = slope * count + offset`` (degrees C).

THRM v1 layout (little-endian)::

    magic       4s   b"THRM"
    version     u16  1
    width       u16
    height      u16
    frame_count u32
    fps_milli   u32  round(fps * 1000)
    cal_slope   f64
    cal_offset  f64
    -- then frame_count times --
    timestamp   u64  microseconds since clip start
    counts      u16 * width * height, row-major
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    DimensionOverflow,
    InvalidClip,
    NonMonotonicTimestamps,
    NonUniformSampling,
    OutOfBounds,
    TruncatedPayload,
    UnsupportedVersion,
)

MAGIC = b"THRM"
VERSION = 1
HEADER = struct.Struct("<4sHHHIIdd")
TIMESTAMP = struct.Struct("<Q")
# refuse to allocate absurd payloads from a corrupt header
MAX_PAYLOAD_BYTES = 1 << 32


@dataclass(frozen=True)
class Calibration:
    slope: float = 0.01
    offset: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.slope) and math.isfinite(self.offset)):
            raise ValueError("calibration slope/offset must be finite")
        if self.slope <= 0:
            raise ValueError("calibration slope must be positive")

    def to_celsius(self, counts):
        return self.slope * np.asarray(counts, dtype=np.float64) + self.offset

    def to_counts(self, temps):
        """Invert the calibration, rounding half up and clamping to u16."""
        raw = (np.asarray(temps, dtype=np.float64) - self.offset) / self.slope
        return np.clip(np.floor(raw + 0.5), 0, 65535).astype(np.uint16)


@dataclass(frozen=True)
class Rect:
    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.x < 0 or self.y < 0:
            raise ValueError(f"rect origin must be non-negative: {self}")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"rect size must be positive: {self}")

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    @property
    def area(self) -> int:
        return self.w * self.h

    def fits(self, width: int, height: int) -> bool:
        return self.x + self.w <= width and self.y + self.h <= height

    def translate(self, dx: int, dy: int) -> "Rect":
        return Rect(self.x + dx, self.y + dy, self.w, self.h)

    def slices(self) -> tuple[slice, slice]:
        return slice(self.y, self.y + self.h), slice(self.x, self.x + self.w)

    def iou(self, other: "Rect") -> float:
        ix = max(0, min(self.x + self.w, other.x + other.w) - max(self.x, other.x))
        iy = max(0, min(self.y + self.h, other.y + other.h) - max(self.y, other.y))
        inter = ix * iy
        return inter / float(self.area + other.area - inter)

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.x, self.y, self.w, self.h)


def clamp_rect(x: int, y: int, w: int, h: int, width: int, height: int) -> Rect:
    """Shift a w x h rect so it lies inside a width x height frame."""
    x = min(max(int(x), 0), width - w)
    y = min(max(int(y), 0), height - h)
    return Rect(x, y, w, h)


@dataclass(frozen=True, eq=False)
class RadiometricFrame:
    counts: np.ndarray  # (height, width) uint16
    timestamp: int = 0

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 2 or counts.shape[0] < 1 or counts.shape[1] < 1:
            raise InvalidClip(f"frame counts must be a non-empty 2-D grid, got {counts.shape}")
        if self.timestamp < 0:
            raise InvalidClip("timestamp must be non-negative")
        counts = np.ascontiguousarray(counts, dtype=np.uint16)
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "timestamp", int(self.timestamp))

    @property
    def width(self) -> int:
        return self.counts.shape[1]

    @property
    def height(self) -> int:
        return self.counts.shape[0]

    def __eq__(self, other):
        if not isinstance(other, RadiometricFrame):
            return NotImplemented
        return self.timestamp == other.timestamp and np.array_equal(self.counts, other.counts)


@dataclass(frozen=True, eq=False)
class CelsiusFrame:
    temps: np.ndarray  # (height, width) float64

    def __post_init__(self):
        temps = np.asarray(self.temps, dtype=np.float64)
        if temps.ndim != 2 or temps.size == 0:
            raise ValueError(f"temps must be a non-empty 2-D grid, got {temps.shape}")
        if not np.all(np.isfinite(temps)):
            raise ValueError("temps must be finite")
        object.__setattr__(self, "temps", temps)

    @property
    def width(self) -> int:
        return self.temps.shape[1]

    @property
    def height(self) -> int:
        return self.temps.shape[0]

    def __eq__(self, other):
        if not isinstance(other, CelsiusFrame):
            return NotImplemented
        return np.array_equal(self.temps, other.temps)


@dataclass(frozen=True, eq=False)
class RadiometricClip:
    """An ordered run of equally sized frames.

    ``counts`` has shape (n_frames, height, width); ``timestamps`` holds one
    microsecond offset per frame and must be strictly increasing. Sampling
    uniformity is not enforced here (dropped frames stay representable);
    call :meth:`check_uniform` where it matters.
    """

    counts: np.ndarray
    timestamps: np.ndarray
    fps: float
    calibration: Calibration = Calibration()

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 3 or counts.shape[1] < 1 or counts.shape[2] < 1:
            raise InvalidClip(f"counts must have shape (n, height, width), got {counts.shape}")
        counts = np.ascontiguousarray(counts, dtype=np.uint16)
        ts = np.ascontiguousarray(self.timestamps, dtype=np.uint64)
        if ts.shape != (counts.shape[0],):
            raise InvalidClip("need exactly one timestamp per frame")
        if ts.size > 1 and np.any(ts[1:] <= ts[:-1]):
            raise NonMonotonicTimestamps("timestamps must be strictly increasing")
        if not (math.isfinite(self.fps) and self.fps > 0):
            raise InvalidClip("fps must be positive")
        counts.flags.writeable = False
        ts.flags.writeable = False
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "fps", float(self.fps))

    @classmethod
    def from_frames(cls, frames, fps, calibration=Calibration(), width=None, height=None):
        frames = list(frames)
        if frames:
            shapes = {f.counts.shape for f in frames}
            if len(shapes) != 1:
                raise InvalidClip("all frames must share one size")
            counts = np.stack([f.counts for f in frames])
        else:
            if width is None or height is None:
                raise InvalidClip("an empty clip needs explicit width and height")
            counts = np.zeros((0, height, width), dtype=np.uint16)
        ts = np.array([f.timestamp for f in frames], dtype=np.uint64)
        return cls(counts, ts, fps, calibration)

    @property
    def n_frames(self) -> int:
        return self.counts.shape[0]

    @property
    def width(self) -> int:
        return self.counts.shape[2]

    @property
    def height(self) -> int:
        return self.counts.shape[1]

    @property
    def duration(self) -> float:
        """Nominal duration n_frames / fps in seconds."""
        return self.n_frames / self.fps

    @property
    def frames(self) -> list[RadiometricFrame]:
        return [self.frame(i) for i in range(self.n_frames)]

    def frame(self, i: int) -> RadiometricFrame:
        return RadiometricFrame(self.counts[i], int(self.timestamps[i]))

    @cached_property
    def temps(self) -> np.ndarray:
        """Calibrated temperatures, shape (n_frames, height, width)."""
        t = self.calibration.to_celsius(self.counts)
        t.flags.writeable = False
        return t

    def celsius(self, i: int) -> CelsiusFrame:
        return CelsiusFrame(self.temps[i])

    def check_uniform(self) -> None:
        """Raise NonUniformSampling unless every timestamp is within half a
        frame period of its nominal i / fps position."""
        if self.n_frames == 0:
            return
        nominal = np.arange(self.n_frames) / self.fps * 1e6
        dev = np.abs(self.timestamps.astype(np.float64) - nominal)
        limit = 1e6 / (2.0 * self.fps)
        if np.any(dev > limit):
            bad = int(np.argmax(dev > limit))
            raise NonUniformSampling(f"frame {bad} deviates {dev[bad]:.0f} us from nominal timing")

    def subclip(self, start: int, stop: int | None = None) -> "RadiometricClip":
        """Frames [start, stop) with timestamps re-based to the first one."""
        counts = self.counts[start:stop]
        ts = self.timestamps[start:stop]
        if ts.size:
            ts = ts - ts[0]
        return RadiometricClip(counts, ts, self.fps, self.calibration)

    def __eq__(self, other):
        if not isinstance(other, RadiometricClip):
            return NotImplemented
        return (
            self.fps == other.fps
            and self.calibration == other.calibration
            and self.counts.shape == other.counts.shape
            and np.array_equal(self.counts, other.counts)
            and np.array_equal(self.timestamps, other.timestamps)
        )


def calibrate(frame: RadiometricFrame, cal: Calibration) -> CelsiusFrame:
    return CelsiusFrame(cal.to_celsius(frame.counts))


def crop(frame: CelsiusFrame, r: Rect) -> CelsiusFrame:
    if not r.fits(frame.width, frame.height):
        raise OutOfBounds(f"{r} does not fit a {frame.width}x{frame.height} frame")
    return CelsiusFrame(frame.temps[r.slices()].copy())


def encode_clip(clip: RadiometricClip) -> bytes:
    fps_milli = int(round(clip.fps * 1000))
    if not 0 < fps_milli < 2**32:
        raise InvalidClip(f"fps {clip.fps} not representable in the container")
    if clip.width > 0xFFFF or clip.height > 0xFFFF or clip.n_frames >= 2**32:
        raise InvalidClip("clip dimensions exceed the container limits")
    header = HEADER.pack(
        MAGIC, VERSION, clip.width, clip.height, clip.n_frames, fps_milli,
        clip.calibration.slope, clip.calibration.offset,
    )
    frames = np.empty(clip.n_frames, dtype=_frame_dtype(clip.width, clip.height))
    frames["ts"] = clip.timestamps
    frames["counts"] = clip.counts
    return header + frames.tobytes()


def _frame_dtype(width, height):
    return np.dtype([("ts", "<u8"), ("counts", "<u2", (height, width))])


def decode_clip(data: bytes) -> RadiometricClip:
    data = bytes(data)
    if len(data) < len(MAGIC) or data[:4] != MAGIC:
        raise BadMagic(f"expected magic {MAGIC!r}, got {data[:4]!r}")
    if len(data) < HEADER.size:
        raise TruncatedPayload(f"header needs {HEADER.size} bytes, got {len(data)}")
    _, version, width, height, n, fps_milli, slope, offset = HEADER.unpack_from(data)
    if version != VERSION:
        raise UnsupportedVersion(f"container version {version} (supported: {VERSION})")
    frame_bytes = TIMESTAMP.size + 2 * width * height
    if width == 0 or height == 0 or n * frame_bytes > MAX_PAYLOAD_BYTES:
        raise DimensionOverflow(f"implausible dimensions {width}x{height} x {n} frames")
    expected = HEADER.size + n * frame_bytes
    if len(data) < expected:
        raise TruncatedPayload(f"need {expected} bytes, got {len(data)}")
    if len(data) > expected:
        raise TruncatedPayload(f"{len(data) - expected} trailing bytes after last frame")
    if fps_milli == 0:
        raise InvalidClip("fps_milli must be positive")

    frames = np.frombuffer(data, dtype=_frame_dtype(width, height), count=n, offset=HEADER.size)
    ts = frames["ts"].astype(np.uint64)
    if n > 1 and np.any(ts[1:] <= ts[:-1]):
        raise NonMonotonicTimestamps("frame timestamps are not strictly increasing")
    try:
        cal = Calibration(slope, offset)
    except ValueError as exc:
        raise InvalidClip(str(exc)) from None
    return RadiometricClip(frames["counts"].astype(np.uint16), ts, fps_milli / 1000.0, cal)


def read_clip(path) -> RadiometricClip:
    return decode_clip(Path(path).read_bytes())


def write_clip(clip: RadiometricClip, path) -> None:
    Path(path).write_bytes(encode_clip(clip))
