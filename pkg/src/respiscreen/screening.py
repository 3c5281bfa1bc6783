"""Forehead temperature and the rule-based screening decision."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from .respiration import Pattern, RespirationEstimate

SANE_TEMP_RANGE = (25.0, 45.0)


class Decision(str, enum.Enum):
    PASS = "Pass"
    ALERT = "Alert"
    INCONCLUSIVE = "Inconclusive"


class Reason(str, enum.Enum):
    FEVER = "FEVER"
    ABNORMAL_PATTERN = "ABNORMAL_PATTERN"
    RATE_OUT_OF_RANGE = "RATE_OUT_OF_RANGE"
    LOW_CONFIDENCE = "LOW_CONFIDENCE"


ALERT_REASONS = frozenset({Reason.FEVER, Reason.ABNORMAL_PATTERN, Reason.RATE_OUT_OF_RANGE})


@dataclass(frozen=True)
class ScreeningRules:
    fever_threshold: float = 37.3
    require_eupnea: bool = True
    rate_hard_max: float = 30.0
    rate_hard_min: float = 6.0
    min_confidence: float = 0.3
    # forehead skin reads cooler than core; added before the fever comparison
    skin_to_core_offset: float = 0.0

    def __post_init__(self):
        if not 35.0 < self.fever_threshold < 42.0:
            raise ValueError("fever_threshold must lie in (35, 42)")
        if not self.rate_hard_min < self.rate_hard_max:
            raise ValueError("rate_hard_min must be below rate_hard_max")
        if not 0.0 <= self.min_confidence <= 1.0:
            raise ValueError("min_confidence must lie in [0, 1]")


@dataclass(frozen=True, eq=False)
class TemperatureEstimate:
    body_temp: float
    per_frame_p95: np.ndarray
    method: str = "p95-median"

    @property
    def valid(self) -> bool:
        lo, hi = SANE_TEMP_RANGE
        return bool(lo <= self.body_temp <= hi)


@dataclass(frozen=True)
class ScreeningReport:
    body_temp: float
    respiration: RespirationEstimate
    decision: Decision
    reasons: tuple = field(default_factory=tuple)
    window_seconds: float = 15.0

    def to_dict(self) -> dict:
        return {
            "body_temp_c": round(float(self.body_temp), 4),
            "rate_bpm": round(float(self.respiration.rate), 4),
            "pattern": self.respiration.pattern.value,
            "confidence": round(float(self.respiration.confidence), 4),
            "decision": self.decision.value,
            "reasons": [r.value for r in self.reasons],
            "window_seconds": round(float(self.window_seconds), 4),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def summary(self) -> str:
        why = ",".join(r.value for r in self.reasons) or "-"
        return (
            f"{self.decision.value}: {self.body_temp:.2f} C, {self.respiration.rate:.1f} breaths/min "
            f"({self.respiration.pattern.value}, confidence {self.respiration.confidence:.2f}) reasons={why}"
        )


def nearest_rank(values: np.ndarray, pct: int, axis: int = -1) -> np.ndarray:
    """Percentile by nearest rank: the value at rank ceil(pct/100 * n)."""
    values = np.sort(values, axis=axis)
    n = values.shape[axis]
    rank = max(1, (pct * n + 99) // 100)
    return np.take(values, rank - 1, axis=axis)


def estimate_body_temp(clip, forehead) -> TemperatureEstimate:
    """Median over frames of the per-frame 95th percentile of the forehead ROI."""
    if len(forehead.rects) != clip.n_frames or clip.n_frames == 0:
        raise ValueError("forehead track must cover every frame of a non-empty clip")
    temps = clip.temps
    p95 = np.array([nearest_rank(temps[i][r.slices()].ravel(), 95) for i, r in enumerate(forehead.rects)])
    return TemperatureEstimate(float(np.median(p95)), p95)


def screen(temp: TemperatureEstimate, resp: RespirationEstimate,
           rules: ScreeningRules = ScreeningRules(), window_seconds: float = 15.0) -> ScreeningReport:
    reasons = []
    if temp.body_temp + rules.skin_to_core_offset >= rules.fever_threshold:
        reasons.append(Reason.FEVER)
    if rules.require_eupnea and resp.pattern is not Pattern.EUPNEA:
        reasons.append(Reason.ABNORMAL_PATTERN)
    if resp.pattern is not Pattern.APNEA and not rules.rate_hard_min <= resp.rate <= rules.rate_hard_max:
        reasons.append(Reason.RATE_OUT_OF_RANGE)
    if not reasons and resp.confidence < rules.min_confidence:
        reasons.append(Reason.LOW_CONFIDENCE)

    if any(r in ALERT_REASONS for r in reasons):
        decision = Decision.ALERT
    elif reasons:
        decision = Decision.INCONCLUSIVE
    else:
        decision = Decision.PASS
    return ScreeningReport(temp.body_temp, resp, decision, tuple(reasons), window_seconds)
