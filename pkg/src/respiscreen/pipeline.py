"""End-to-end analysis: detect, track, extract signals, estimate, screen."""

from __future__ import annotations

from dataclasses import dataclass

from . import dsp, roi
from .config import PipelineConfig
from .dsp import BreathSignal, Spectrum
from .errors import NoBreathingRegion, SignalTooShort
from .respiration import RespirationEstimate, assess
from .roi import Region, RoiTrack
from .screening import ScreeningReport, TemperatureEstimate, estimate_body_temp, screen
from .thermal import RadiometricClip, Rect


@dataclass
class Analysis:
    clip: RadiometricClip  # the analysed trailing window
    face: RoiTrack
    forehead: RoiTrack
    nostril: RoiTrack
    raw: BreathSignal
    filtered: BreathSignal
    spectrum: Spectrum
    peak_freq: float
    temperature: TemperatureEstimate
    respiration: RespirationEstimate
    report: ScreeningReport
    start_frame: int


def trailing_window(clip: RadiometricClip, seconds: float) -> tuple[RadiometricClip, int]:
    n = min(clip.n_frames, int(seconds * clip.fps + 1e-9))
    start = clip.n_frames - n
    return clip.subclip(start), start


def default_nostril(face: Rect) -> Rect:
    """Geometric guess used when no breathing region is detectable."""
    w, h = max(1, face.w // 3), max(1, face.h // 6)
    return Rect(face.x + (face.w - w) // 2, face.y + int(round(0.6 * face.h)), w, h)


def locate(clip: RadiometricClip, cfg: PipelineConfig, allow_fallback: bool = False):
    """Face, forehead and nostril tracks for a clip."""
    face0 = roi.detect_face(clip.celsius(0))
    face = roi._track_temps(clip.temps, face0, Region.FACE, cfg.search_radius, cfg.coast_threshold)
    forehead0 = roi.detect_forehead(clip.celsius(0), face0)
    try:
        nostril0 = roi.detect_nostril(clip, face0, cfg.probe_seconds, cfg.band, face_track=face)
    except NoBreathingRegion:
        if not allow_fallback:
            raise
        nostril0 = default_nostril(face0)
    forehead = roi.follow(face, forehead0, Region.FOREHEAD, clip.width, clip.height)
    nostril = roi.follow(face, nostril0, Region.NOSTRIL, clip.width, clip.height)
    return face, forehead, nostril


def analyze(clip: RadiometricClip, cfg: PipelineConfig = PipelineConfig(),
            allow_fallback: bool = False) -> Analysis:
    clip.check_uniform()
    window, start = trailing_window(clip, cfg.window_seconds)
    if window.duration < 10.0:
        raise SignalTooShort(f"clip window is {window.duration:.2f} s; need at least 10 s")

    face, forehead, nostril = locate(window, cfg, allow_fallback)
    raw = dsp.roi_mean_series(window, nostril)
    filtered = dsp.bandpass(dsp.detrend(raw), *cfg.band)
    spectrum = dsp.periodogram(filtered, cfg.zero_pad_to)
    peak_freq, _ = dsp.dominant_frequency(spectrum, *cfg.band)

    resp = assess(filtered, cfg.thresholds, band=cfg.band, min_separation=cfg.min_separation,
                  min_prominence=cfg.min_prominence, zero_pad_to=cfg.zero_pad_to)
    temp = estimate_body_temp(window, forehead)
    report = screen(temp, resp, cfg.rules, window.duration)
    return Analysis(window, face, forehead, nostril, raw, filtered, spectrum, peak_freq,
                    temp, resp, report, start)
