"""Contactless respiratory screening from radiometric thermal video of a masked face."""

__version__ = "0.1.0"

from .config import PipelineConfig, load_config
from .dsp import BreathSignal, Spectrum, bandpass, count_peaks, detrend, dominant_frequency, periodogram, roi_mean_series
from .pipeline import Analysis, analyze
from .respiration import Pattern, PatternThresholds, RespirationEstimate, classify_pattern, estimate_rate
from .roi import Region, RoiTrack, detect_face, detect_forehead, detect_nostril, track
from .screening import Decision, Reason, ScreeningReport, ScreeningRules, TemperatureEstimate, estimate_body_temp, screen
from .synth import GroundTruth, Scenario, render
from .thermal import (
    Calibration,
    CelsiusFrame,
    RadiometricClip,
    RadiometricFrame,
    Rect,
    calibrate,
    crop,
    decode_clip,
    encode_clip,
    read_clip,
    write_clip,
)
