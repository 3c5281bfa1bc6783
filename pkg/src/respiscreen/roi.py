"""Face, forehead and nostril localisation plus template tracking.

Detection needs no trained model: the face is the largest warm blob after
Otsu thresholding, the forehead is the warmest window in the top third of
the face, and the nostril (or the mask surface over it) is the window in the
bottom half whose band-passed temperature varies the most over time.

Every search breaks ties leftmost-then-topmost, so results are deterministic.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy import signal as sps

from . import dsp
from .errors import NoBreathingRegion, NoFaceFound, OutOfBounds, RegionTooSmall, SignalTooShort
from .thermal import CelsiusFrame, RadiometricClip, Rect, clamp_rect

MIN_FACE_FRACTION = 0.02
NOISE_FLOOR = 1e-6  # degC^2, mean per-pixel variance
SEARCH_RADIUS = 8
COAST_THRESHOLD = 0.4
PROBE_SECONDS = 5.0
_TIE_RTOL = 1e-9


class Region(str, enum.Enum):
    FACE = "Face"
    FOREHEAD = "Forehead"
    NOSTRIL = "Nostril"


@dataclass(frozen=True, eq=False)
class RoiTrack:
    region_name: Region
    rects: list
    quality: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.quality, dtype=np.float64)
        if len(self.rects) != q.size:
            raise ValueError("need one quality score per rect")
        if not np.all(np.isfinite(q)):
            raise ValueError("quality must be finite")
        object.__setattr__(self, "rects", list(self.rects))
        object.__setattr__(self, "quality", q)

    def __len__(self):
        return len(self.rects)

    def centers(self) -> np.ndarray:
        return np.array([r.center for r in self.rects])

    def to_csv(self) -> str:
        lines = ["frame,x,y,w,h,quality"]
        for i, (r, q) in enumerate(zip(self.rects, self.quality)):
            lines.append(f"{i},{r.x},{r.y},{r.w},{r.h},{q:.6f}")
        return "\n".join(lines) + "\n"


def _best_index(score: np.ndarray) -> tuple[int, int]:
    """(row, col) of the maximum of ``score``; ties go to the smallest column,
    then the smallest row."""
    top = np.max(score)
    tol = _TIE_RTOL * max(1.0, abs(float(top)))
    rows, cols = np.nonzero(score >= top - tol)
    order = np.lexsort((rows, cols))
    return int(rows[order[0]]), int(cols[order[0]])


def _window_means(img: np.ndarray, wh: int, ww: int) -> np.ndarray:
    """Mean of every wh x ww window (valid positions only) via an integral image."""
    ii = np.zeros((img.shape[0] + 1, img.shape[1] + 1))
    ii[1:, 1:] = img.cumsum(axis=0).cumsum(axis=1)
    s = ii[wh:, ww:] - ii[:-wh, ww:] - ii[wh:, :-ww] + ii[:-wh, :-ww]
    return s / (wh * ww)


def otsu_threshold(values: np.ndarray, bins: int = 256) -> float:
    """Threshold maximizing between-class variance of the histogram."""
    values = np.asarray(values, dtype=np.float64).ravel()
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        return lo
    hist, edges = np.histogram(values, bins=bins, range=(lo, hi))
    centers = 0.5 * (edges[:-1] + edges[1:])
    w0 = np.cumsum(hist)
    w1 = w0[-1] - w0
    m0 = np.cumsum(hist * centers)
    mu0 = m0 / np.maximum(w0, 1)
    mu1 = (m0[-1] - m0) / np.maximum(w1, 1)
    between = w0 * w1 * (mu0 - mu1) ** 2
    k = int(np.argmax(between[:-1]))
    return float(edges[k + 1])


def detect_face(frame: CelsiusFrame) -> Rect:
    temps = frame.temps
    thr = otsu_threshold(temps)
    fg = temps > thr
    labels, n = ndimage.label(fg, structure=np.ones((3, 3), dtype=bool))
    if n == 0:
        raise NoFaceFound("no pixels above the adaptive threshold")
    areas = np.bincount(labels.ravel())[1:]
    best = int(np.argmax(areas))
    if areas[best] < MIN_FACE_FRACTION * temps.size:
        raise NoFaceFound(
            f"largest warm component covers {areas[best] / temps.size:.1%} of the frame (< {MIN_FACE_FRACTION:.0%})"
        )
    sl = ndimage.find_objects(labels)[best]
    return Rect(sl[1].start, sl[0].start, sl[1].stop - sl[1].start, sl[0].stop - sl[0].start)


def detect_forehead(frame: CelsiusFrame, face: Rect) -> Rect:
    """Warmest (w/2 x h/6) window inside the top third of the face box."""
    if not face.fits(frame.width, frame.height):
        raise OutOfBounds(f"face {face} outside the frame")
    if face.h < 6:
        raise RegionTooSmall(f"face box {face.h} px tall; need at least 6")
    ww, wh = max(1, face.w // 2), face.h // 6
    top = frame.temps[face.y:face.y + face.h // 3, face.x:face.x + face.w]
    row, col = _best_index(_window_means(top, wh, ww))
    return Rect(face.x + col, face.y + row, ww, wh)


def _stabilized_stack(temps: np.ndarray, region: Rect, anchor: Rect, face_track) -> np.ndarray:
    """Per-frame pixels of ``region`` moved along with the face track."""
    if face_track is None:
        return temps[(slice(None),) + region.slices()]
    out = np.empty((temps.shape[0], region.h, region.w))
    for i in range(temps.shape[0]):
        r = face_track.rects[i]
        dx, dy = r.x - anchor.x, r.y - anchor.y
        out[i] = temps[i][region.translate(dx, dy).slices()]
    return out


def detect_nostril(clip: RadiometricClip, face: Rect, probe_seconds: float = PROBE_SECONDS,
                   band=(dsp.BAND_LOW, dsp.BAND_HIGH), face_track: RoiTrack | None = None) -> Rect:
    """Window (w/3 x h/6) in the bottom half of the face with the largest
    band-limited temporal variance over the first ``probe_seconds``.

    When ``face_track`` is given the pixels are sampled relative to the
    tracked face so head sway does not masquerade as breathing. The result
    is expressed in the coordinates of the first frame.
    """
    if not face.fits(clip.width, clip.height):
        raise OutOfBounds(f"face {face} outside the frame")
    n_probe = int(np.ceil(probe_seconds * clip.fps - 1e-9))
    if n_probe < 3 or clip.n_frames < n_probe:
        raise SignalTooShort(f"need {n_probe} frames for a {probe_seconds} s probe, clip has {clip.n_frames}")
    ww, wh = face.w // 3, face.h // 6
    half = face.h // 2
    if ww < 1 or wh < 1:
        raise RegionTooSmall(f"face box {face.w}x{face.h} too small for a nostril window")
    region = Rect(face.x, face.y + half, face.w, face.h - half)
    stack = _stabilized_stack(clip.temps[:n_probe], region, face, face_track)
    filtered = dsp._bandpass_array(dsp._detrend_array(stack, axis=0), clip.fps, band[0], band[1], axis=0)
    var = filtered.var(axis=0)
    means = _window_means(var, wh, ww)
    row, col = _best_index(means)
    if means[row, col] < NOISE_FLOOR:
        raise NoBreathingRegion(
            f"strongest breathing-band variance {means[row, col]:.2e} degC^2 is below the noise floor"
        )
    return Rect(region.x + col, region.y + row, ww, wh)


def _zncc_scores(search: np.ndarray, template: np.ndarray) -> np.ndarray:
    """ZNCC of ``template`` at every valid offset inside ``search``.

    A flat template matches a flat window perfectly and anything else not
    at all.
    """
    th, tw = template.shape
    n = th * tw
    tz = template - template.mean()
    t_norm = np.sqrt(np.sum(tz * tz))
    centred = search - search.mean()
    # tz sums to zero, so correlating against the centred search is exact
    num = sps.correlate(centred, tz, mode="valid", method="fft")
    s1 = _window_means(centred, th, tw) * n
    s2 = _window_means(centred * centred, th, tw) * n
    w_var = np.maximum(s2 - s1 * s1 / n, 0.0)
    w_norm = np.sqrt(w_var)
    flat_t = t_norm <= 1e-9 * max(1.0, float(np.abs(template).max())) * np.sqrt(n)
    flat_w = w_norm <= 1e-6 * np.sqrt(n)
    if flat_t:
        return np.where(flat_w, 1.0, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        score = num / (t_norm * w_norm)
    return np.where(flat_w, 0.0, score)


def _track_temps(temps: np.ndarray, initial: Rect, name: Region, search_radius: int,
                 coast_threshold: float) -> RoiTrack:
    n, height, width = temps.shape
    if not initial.fits(width, height):
        raise OutOfBounds(f"initial rect {initial} outside the {width}x{height} frame")
    template = temps[0][initial.slices()]
    rects = [initial]
    quality = [1.0]
    prev = initial
    for i in range(1, n):
        x0 = max(0, prev.x - search_radius)
        y0 = max(0, prev.y - search_radius)
        x1 = min(width, prev.x + prev.w + search_radius)
        y1 = min(height, prev.y + prev.h + search_radius)
        scores = _zncc_scores(temps[i, y0:y1, x0:x1], template)
        # prefer the smallest displacement among equal scores, then leftmost/topmost
        top = np.max(scores)
        tol = _TIE_RTOL * max(1.0, abs(float(top)))
        rows, cols = np.nonzero(scores >= top - tol)
        dist = np.abs(cols + x0 - prev.x) + np.abs(rows + y0 - prev.y)
        k = np.lexsort((rows, cols, dist))[0]
        best = float(scores[rows[k], cols[k]])
        if best < coast_threshold:
            rect = prev
        else:
            rect = clamp_rect(x0 + cols[k], y0 + rows[k], initial.w, initial.h, width, height)
        rects.append(rect)
        quality.append(min(1.0, max(0.0, best)))
        prev = rect
    return RoiTrack(name, rects, np.array(quality))


def track(clip: RadiometricClip, initial: Rect, name: Region = Region.NOSTRIL,
          search_radius: int = SEARCH_RADIUS, coast_threshold: float = COAST_THRESHOLD) -> RoiTrack:
    """Follow a frame-0 template through the clip by ZNCC search around the
    previous position; low-scoring frames keep the previous rect."""
    return _track_temps(clip.temps, initial, Region(name), int(search_radius), coast_threshold)


def follow(anchor: RoiTrack, rect: Rect, name: Region, width: int, height: int) -> RoiTrack:
    """Carry ``rect`` (given in frame-0 coordinates) along with an anchor track."""
    a0 = anchor.rects[0]
    rects = [
        clamp_rect(rect.x + r.x - a0.x, rect.y + r.y - a0.y, rect.w, rect.h, width, height)
        for r in anchor.rects
    ]
    return RoiTrack(Region(name), rects, anchor.quality.copy())
