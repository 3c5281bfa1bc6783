"""Deterministic thermal phantom of a masked face that breathes.

The scene is painted in degrees C, layer by layer:

* background at ``background_temp``
* an elliptical face at ``face_temp``
* a forehead patch (upper-central, half the face width) at ``forehead_temp``
* a nostril/mask patch (lower-central, a third of the face width) whose
  temperature follows ``nostril_baseline + breath_amplitude * w(t) + drift * t``

The whole face sways horizontally by ``round(sway_amplitude * sin(2 pi t / sway_period))``
pixels, Gaussian noise is added per pixel, and the result is quantized to
sensor counts through the inverse calibration.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import InvalidScenario
from .thermal import Calibration, RadiometricClip, Rect

PATTERNS = ("Eupnea", "Bradypnea", "Tachypnea", "Apnea")

# pattern boundaries used to label ground truth; mirror PatternThresholds defaults
_BRADY_MAX = 12.0
_TACHY_MIN = 20.0
# the screening window the ground-truth Apnea label refers to
_ANALYSIS_WINDOW = 15.0

SIM_CALIBRATION = Calibration(slope=0.01, offset=0.0)

_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def splitmix64(x):
    """SplitMix64 finalizer applied elementwise to a uint64 array."""
    z = np.asarray(x, dtype=np.uint64) + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def _uniform(bits):
    # top 53 bits, centred in their bucket so the value is never 0 or 1
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * (1.0 / 2**53)


def gaussian_field(seed: int, frame_index: int, n_pixels: int) -> np.ndarray:
    """Standard normal draws for one frame, derived from (seed, frame, pixel).

    Each pixel consumes counters 2k and 2k+1 of the frame's block, so frames
    can be generated in any order (or in parallel) with identical output.
    """
    with np.errstate(over="ignore"):
        key = splitmix64(np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))[0]
        base = np.uint64((frame_index * n_pixels * 2) & 0xFFFFFFFFFFFFFFFF)
        counters = base + np.arange(2 * n_pixels, dtype=np.uint64)
        bits = splitmix64(counters ^ key)
    u1 = _uniform(bits[0::2])
    u2 = _uniform(bits[1::2])
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def breath_waveform(t, rate_bpm: float, asymmetry: float = 0.5, apnea_windows=()):
    """Normalized breathing waveform in [-1, 1].

    Each cycle rises from -1 to +1 over the first ``asymmetry`` fraction
    (exhale, warming) and falls back over the remainder; both halves are
    raised-cosine segments. With asymmetry 0.5 this is ``-cos(2 pi f t)``.
    """
    t = np.asarray(t, dtype=np.float64)
    phase = np.mod(t * (rate_bpm / 60.0), 1.0)
    a = asymmetry
    w = np.where(
        phase < a,
        -np.cos(np.pi * phase / a),
        np.cos(np.pi * (phase - a) / (1.0 - a)),
    )
    for start, end in apnea_windows:
        w = np.where((t >= start) & (t <= end), 0.0, w)
    return w


def sway_offsets(t, amplitude: float, period: float) -> np.ndarray:
    """Integer horizontal face displacement per timestamp (round half up)."""
    t = np.asarray(t, dtype=np.float64)
    return np.floor(amplitude * np.sin(2.0 * np.pi * t / period) + 0.5).astype(int)


@dataclass(frozen=True)
class Scenario:
    breath_rate: float = 15.0
    duration: float = 15.0
    fps: float = 8.7
    width: int = 160
    height: int = 120
    # [center_x, center_y, semi_axis_x, semi_axis_y]; None -> scaled to the frame
    face: tuple | None = None
    forehead_temp: float = 36.6
    face_temp: float = 34.5
    background_temp: float = 24.0
    nostril_baseline: float = 33.0
    breath_amplitude: float = 0.4
    waveform_asymmetry: float = 0.5
    apnea_windows: tuple = ()
    drift: float = 0.0
    noise_sigma: float = 0.0
    sway_amplitude: float = 0.0
    sway_period: float = 4.0
    seed: int = 0

    def __post_init__(self):
        if self.face is None:
            face = (self.width / 2.0, self.height / 2.0, 0.22 * self.width, 0.375 * self.height)
        else:
            face = tuple(float(v) for v in self.face)
        object.__setattr__(self, "face", face)
        object.__setattr__(self, "apnea_windows", tuple(tuple(float(v) for v in w) for w in self.apnea_windows))
        self.validate()

    def validate(self) -> None:
        def bad(name, msg):
            raise InvalidScenario(name, msg)

        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, float) and not math.isfinite(v):
                bad(f.name, "must be finite")
        if not self.duration > 0:
            bad("duration", "must be positive")
        if not self.fps > 0:
            bad("fps", "must be positive")
        if self.duration * self.fps < 2:
            bad("duration", "duration * fps must be at least 2 frames")
        if int(self.width) != self.width or self.width < 8:
            bad("width", "must be an integer >= 8")
        if int(self.height) != self.height or self.height < 8:
            bad("height", "must be an integer >= 8")
        if not self.breath_rate > 0:
            bad("breath_rate", "must be positive")
        if not 0 < self.waveform_asymmetry < 1:
            bad("waveform_asymmetry", "must lie in (0, 1)")
        if self.breath_amplitude < 0:
            bad("breath_amplitude", "must be non-negative")
        if self.noise_sigma < 0:
            bad("noise_sigma", "must be non-negative")
        if self.sway_amplitude < 0:
            bad("sway_amplitude", "must be non-negative")
        if not self.sway_period > 0:
            bad("sway_period", "must be positive")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            bad("seed", "must be an unsigned 64-bit integer")
        if len(self.face) != 4:
            bad("face", "expected [center_x, center_y, semi_axis_x, semi_axis_y]")
        cx, cy, rx, ry = self.face
        if rx < 3 or ry < 6:
            bad("face", "ellipse too small")
        if cx - rx - self.sway_amplitude < 0 or cx + rx + self.sway_amplitude > self.width:
            bad("face", "ellipse (including sway) leaves the frame horizontally")
        if cy - ry < 0 or cy + ry > self.height:
            bad("face", "ellipse leaves the frame vertically")
        prev_end = -math.inf
        for w in sorted(self.apnea_windows):
            if len(w) != 2 or not 0 <= w[0] <= w[1] <= self.duration:
                bad("apnea_windows", f"window {list(w)} not within [0, duration]")
            if w[0] < prev_end:
                bad("apnea_windows", "windows overlap")
            prev_end = w[1]

    @property
    def n_frames(self) -> int:
        return int(math.floor(self.duration * self.fps + 1e-9))

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        if not isinstance(d, dict):
            raise InvalidScenario("<root>", "scenario must be a JSON object")
        known = {f.name for f in fields(cls)}
        for key in d:
            if key not in known:
                raise InvalidScenario(key, "unknown scenario field")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "Scenario":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise InvalidScenario("<file>", f"not valid JSON: {exc}") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["face"] = list(self.face)
        d["apnea_windows"] = [list(w) for w in self.apnea_windows]
        return d


@dataclass
class GroundTruth:
    face_rects: list[Rect]
    forehead_rects: list[Rect]
    nostril_rects: list[Rect]
    true_rate: float
    true_pattern: str
    breath_waveform: np.ndarray
    nostril_temps: np.ndarray = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "true_rate": self.true_rate,
            "true_pattern": self.true_pattern,
            "face_rects": [list(r.as_tuple()) for r in self.face_rects],
            "forehead_rects": [list(r.as_tuple()) for r in self.forehead_rects],
            "nostril_rects": [list(r.as_tuple()) for r in self.nostril_rects],
            "breath_waveform": [float(v) for v in self.breath_waveform],
        }


def true_pattern(s: Scenario, window: float = _ANALYSIS_WINDOW) -> str:
    """Label a scenario with the pattern the default thresholds imply."""
    if s.breath_amplitude == 0 or _covered(s.apnea_windows, max(0.0, s.duration - window), s.duration):
        return "Apnea"
    if s.breath_rate < _BRADY_MAX:
        return "Bradypnea"
    if s.breath_rate > _TACHY_MIN:
        return "Tachypnea"
    return "Eupnea"


def _covered(windows, start, end) -> bool:
    pos = start
    for a, b in sorted(windows):
        if a > pos:
            break
        pos = max(pos, b)
    return pos >= end


def _layout(s: Scenario):
    """Face mask and patch rects at zero sway."""
    cx, cy, rx, ry = s.face
    yy, xx = np.mgrid[0:s.height, 0:s.width]
    mask = ((xx + 0.5 - cx) / rx) ** 2 + ((yy + 0.5 - cy) / ry) ** 2 <= 1.0
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    fx, fy = int(cols[0]), int(rows[0])
    bw, bh = int(cols[-1] - cols[0] + 1), int(rows[-1] - rows[0] + 1)
    face = Rect(fx, fy, bw, bh)
    forehead = Rect(fx + (bw - bw // 2) // 2, fy + bh // 12, bw // 2, bh // 6)
    nostril = Rect(fx + (bw - bw // 3) // 2, fy + int(round(0.6 * bh)), bw // 3, bh // 6)
    return mask, face, forehead, nostril


def render(s: Scenario, calibration: Calibration = SIM_CALIBRATION):
    """Render a scenario into (RadiometricClip, GroundTruth)."""
    s.validate()
    n = s.n_frames
    t = np.arange(n) / s.fps
    mask0, face0, fore0, nose0 = _layout(s)

    w = breath_waveform(t, s.breath_rate, s.waveform_asymmetry, s.apnea_windows)
    nostril_t = s.nostril_baseline + s.breath_amplitude * w + s.drift * t
    dx = sway_offsets(t, s.sway_amplitude, s.sway_period)

    # unshifted face layer; background is painted where the mask is false
    layer = np.full((s.height, s.width), s.face_temp)
    layer[fore0.slices()] = s.forehead_temp
    counts = np.empty((n, s.height, s.width), dtype=np.uint16)
    n_pix = s.width * s.height
    pad = int(math.ceil(s.sway_amplitude)) + 1
    padded_layer = np.pad(layer, ((0, 0), (pad, pad)), constant_values=s.background_temp)
    padded_mask = np.pad(mask0, ((0, 0), (pad, pad)), constant_values=False)
    padded_nose = np.zeros_like(padded_mask)
    padded_nose[nose0.y:nose0.y + nose0.h, pad + nose0.x:pad + nose0.x + nose0.w] = True

    for i in range(n):
        lo = pad - dx[i]
        m = padded_mask[:, lo:lo + s.width]
        frame = np.where(m, padded_layer[:, lo:lo + s.width], s.background_temp)
        frame[padded_nose[:, lo:lo + s.width]] = nostril_t[i]
        if s.noise_sigma > 0:
            frame = frame + s.noise_sigma * gaussian_field(s.seed, i, n_pix).reshape(s.height, s.width)
        counts[i] = calibration.to_counts(frame)

    timestamps = np.floor(np.arange(n) * (1e6 / s.fps) + 0.5).astype(np.uint64)
    clip = RadiometricClip(counts, timestamps, s.fps, calibration)
    pattern = true_pattern(s)
    truth = GroundTruth(
        face_rects=[face0.translate(int(d), 0) for d in dx],
        forehead_rects=[fore0.translate(int(d), 0) for d in dx],
        nostril_rects=[nose0.translate(int(d), 0) for d in dx],
        true_rate=0.0 if pattern == "Apnea" else float(s.breath_rate),
        true_pattern=pattern,
        breath_waveform=w,
        nostril_temps=nostril_t,
    )
    return clip, truth
