"""Respiratory rate estimation and breathing-pattern classification."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import dsp
from .dsp import BreathSignal
from .errors import SignalTooShort

MIN_DURATION = 10.0
AGREEMENT_BPM = 4.0
SPECTRAL_TRUST_SNR = 4.0


class Pattern(str, enum.Enum):
    EUPNEA = "Eupnea"
    BRADYPNEA = "Bradypnea"
    TACHYPNEA = "Tachypnea"
    APNEA = "Apnea"


@dataclass(frozen=True)
class PatternThresholds:
    brady_max: float = 12.0
    tachy_min: float = 20.0
    apnea_rms: float = 0.03
    apnea_snr: float = 2.0

    def __post_init__(self):
        if not 0 < self.brady_max < self.tachy_min:
            raise ValueError("thresholds need 0 < brady_max < tachy_min")


@dataclass(frozen=True)
class RateEstimate:
    rate_spectral: float
    rate_timedomain: float
    fused: float
    confidence: float
    snr: float
    rms: float


@dataclass(frozen=True)
class RespirationEstimate:
    rate: float
    pattern: Pattern
    confidence: float
    rate_spectral: float
    rate_timedomain: float


def estimate_rate(sig: BreathSignal, band=(dsp.BAND_LOW, dsp.BAND_HIGH),
                  min_separation: float = dsp.MIN_SEPARATION,
                  min_prominence: float = dsp.MIN_PROMINENCE,
                  zero_pad_to: int = dsp.DEFAULT_NFFT) -> RateEstimate:
    """Spectral and peak-count rates fused into one estimate.

    ``sig`` should already be detrended and band-passed. When the two routes
    agree within 4 breaths/min the spectral value is used; otherwise the
    spectral value wins only if its peak-to-median ratio is at least 4.
    """
    if sig.duration < MIN_DURATION:
        raise SignalTooShort(f"{sig.duration:.2f} s of signal; need at least {MIN_DURATION:.0f} s")
    freq, snr = dsp.dominant_frequency(dsp.periodogram(sig, zero_pad_to), *band)
    spectral = 60.0 * freq
    timedomain = 60.0 * dsp.count_peaks(sig, min_separation, min_prominence) / sig.duration
    agree = abs(spectral - timedomain) <= AGREEMENT_BPM
    if agree or snr >= SPECTRAL_TRUST_SNR:
        fused = spectral
    else:
        fused = timedomain
    confidence = min(1.0, snr / 10.0) * (1.0 if agree else 0.5)
    rms = float(np.sqrt(np.mean(sig.samples ** 2)))
    return RateEstimate(spectral, timedomain, fused, confidence, snr, rms)


def classify_pattern(sig: BreathSignal, rates: RateEstimate,
                     th: PatternThresholds = PatternThresholds()) -> Pattern:
    rms = float(np.sqrt(np.mean(sig.samples ** 2)))
    if rms < th.apnea_rms or rates.snr < th.apnea_snr:
        return Pattern.APNEA
    if rates.fused < th.brady_max:
        return Pattern.BRADYPNEA
    if rates.fused > th.tachy_min:
        return Pattern.TACHYPNEA
    return Pattern.EUPNEA


def assess(sig: BreathSignal, th: PatternThresholds = PatternThresholds(), **kwargs) -> RespirationEstimate:
    """Rate plus pattern for a conditioned breathing signal."""
    rates = estimate_rate(sig, **kwargs)
    pattern = classify_pattern(sig, rates, th)
    rate = 0.0 if pattern is Pattern.APNEA else rates.fused
    return RespirationEstimate(rate, pattern, rates.confidence, rates.rate_spectral, rates.rate_timedomain)
