"""Flat JSON configuration holding every tunable of the pipeline."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from . import dsp, roi
from .errors import InvalidConfig
from .respiration import PatternThresholds
from .screening import ScreeningRules

ENV_VAR = "RESPISCREEN_CONFIG"


@dataclass(frozen=True)
class PipelineConfig:
    band_low: float = dsp.BAND_LOW
    band_high: float = dsp.BAND_HIGH
    window_seconds: float = 15.0
    probe_seconds: float = roi.PROBE_SECONDS
    search_radius: int = roi.SEARCH_RADIUS
    coast_threshold: float = roi.COAST_THRESHOLD
    zero_pad_to: int = dsp.DEFAULT_NFFT
    min_separation: float = dsp.MIN_SEPARATION
    min_prominence: float = dsp.MIN_PROMINENCE
    # PatternThresholds
    brady_max: float = 12.0
    tachy_min: float = 20.0
    apnea_rms: float = 0.03
    apnea_snr: float = 2.0
    # ScreeningRules
    fever_threshold: float = 37.3
    require_eupnea: bool = True
    rate_hard_max: float = 30.0
    rate_hard_min: float = 6.0
    min_confidence: float = 0.3
    skin_to_core_offset: float = 0.0

    def __post_init__(self):
        if not 0 < self.band_low < self.band_high:
            raise InvalidConfig("band_low", "need 0 < band_low < band_high")
        if self.window_seconds < 10:
            raise InvalidConfig("window_seconds", "must be at least 10 s")
        if not self.probe_seconds > 0:
            raise InvalidConfig("probe_seconds", "must be positive")
        if int(self.search_radius) != self.search_radius or self.search_radius < 0:
            raise InvalidConfig("search_radius", "must be a non-negative integer")
        if self.zero_pad_to < 8:
            raise InvalidConfig("zero_pad_to", "must be at least 8")
        try:
            self.thresholds
        except ValueError as exc:
            raise InvalidConfig("brady_max", str(exc)) from None
        try:
            self.rules
        except ValueError as exc:
            raise InvalidConfig("fever_threshold", str(exc)) from None

    @property
    def band(self) -> tuple[float, float]:
        return (self.band_low, self.band_high)

    @property
    def thresholds(self) -> PatternThresholds:
        return PatternThresholds(self.brady_max, self.tachy_min, self.apnea_rms, self.apnea_snr)

    @property
    def rules(self) -> ScreeningRules:
        return ScreeningRules(
            self.fever_threshold, self.require_eupnea, self.rate_hard_max,
            self.rate_hard_min, self.min_confidence, self.skin_to_core_offset,
        )

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        if not isinstance(d, dict):
            raise InvalidConfig("<root>", "config must be a JSON object")
        known = {f.name for f in fields(cls)}
        for key in d:
            if key not in known:
                raise InvalidConfig(key, "unknown config key")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


def load_config(path=None) -> PipelineConfig:
    """Config from ``path``, else from $RESPISCREEN_CONFIG, else defaults."""
    path = path or os.environ.get(ENV_VAR)
    if not path:
        return PipelineConfig()
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidConfig("<file>", f"not valid JSON: {exc}") from None
    return PipelineConfig.from_dict(data)
