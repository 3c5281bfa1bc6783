"""Breathing-signal extraction and frequency estimation.

The chain used by the pipeline is ``roi_mean_series -> detrend -> bandpass``,
followed by two independent rate estimators: the spectral peak of a
zero-padded Hann periodogram, and a prominence-filtered peak count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .errors import InvalidBand, SignalTooShort

BAND_LOW = 0.1
BAND_HIGH = 0.85
FILTER_ORDER = 2
MIN_SEPARATION = 60.0 / 40.0
MIN_PROMINENCE = 0.05
DEFAULT_NFFT = 4096


@dataclass(frozen=True, eq=False)
class BreathSignal:
    samples: np.ndarray
    sample_rate: float
    t0: float = 0.0

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=np.float64)
        if x.ndim != 1 or x.size < 1:
            raise ValueError("samples must be a non-empty 1-D series")
        if not np.all(np.isfinite(x)):
            raise ValueError("samples must be finite")
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "samples", x)

    def __len__(self):
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.samples.size) / self.sample_rate

    def replace(self, samples) -> "BreathSignal":
        return BreathSignal(samples, self.sample_rate, self.t0)


@dataclass(frozen=True, eq=False)
class Spectrum:
    freqs: np.ndarray
    power: np.ndarray
    resolution: float


def roi_mean_series(clip, track) -> BreathSignal:
    """Mean calibrated temperature inside each frame's tracked rect."""
    if len(track.rects) != clip.n_frames:
        raise ValueError(f"track has {len(track.rects)} rects for {clip.n_frames} frames")
    temps = clip.temps
    values = np.array([temps[i][r.slices()].mean() for i, r in enumerate(track.rects)])
    return BreathSignal(values, clip.fps)


def detrend(sig: BreathSignal) -> BreathSignal:
    """Remove the least-squares straight line."""
    if len(sig) < 2:
        raise SignalTooShort("detrend needs at least 2 samples")
    return sig.replace(_detrend_array(sig.samples))


def _detrend_array(x, axis=0):
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[axis]
    # centred abscissa makes the intercept and slope decouple
    u = np.arange(n) - (n - 1) / 2.0
    shape = [1] * x.ndim
    shape[axis] = n
    u = u.reshape(shape)
    mean = x.mean(axis=axis, keepdims=True)
    slope = (u * (x - mean)).sum(axis=axis, keepdims=True) / np.sum(u * u)
    return x - mean - slope * u


def _check_band(low, high, fs):
    if not 0 < low < high < fs / 2.0:
        raise InvalidBand(f"band [{low}, {high}] Hz must satisfy 0 < low < high < {fs / 2.0} Hz")


def butter_bandpass(low, high, fs, order=FILTER_ORDER):
    _check_band(low, high, fs)
    return sps.butter(order, [low, high], btype="bandpass", fs=fs, output="sos")


def _bandpass_array(x, fs, low, high, axis=0):
    sos = butter_bandpass(low, high, fs)
    n = x.shape[axis]
    # 1 s of odd reflection at each end, trimmed again by sosfiltfilt
    padlen = min(int(round(fs)), n - 1)
    return sps.sosfiltfilt(sos, x, axis=axis, padtype="odd", padlen=padlen)


def bandpass(sig: BreathSignal, low: float = BAND_LOW, high: float = BAND_HIGH) -> BreathSignal:
    """Zero-phase Butterworth band-pass (forward then backward pass)."""
    _check_band(low, high, sig.sample_rate)
    if len(sig) < 2:
        raise SignalTooShort("bandpass needs at least 2 samples")
    return sig.replace(_bandpass_array(sig.samples, sig.sample_rate, low, high))


def _nfft(n, zero_pad_to):
    return max(int(n), int(zero_pad_to or DEFAULT_NFFT))


def periodogram(sig: BreathSignal, zero_pad_to: int = DEFAULT_NFFT) -> Spectrum:
    """One-sided Hann periodogram normalized so ``power.sum()`` equals the
    energy of the windowed, mean-removed series (Parseval).

    The mean removed is the window-weighted one, which zeroes the DC bin
    exactly and keeps low-frequency tones from being pulled off their bin.
    """
    x = sig.samples
    n = x.size
    if n < 8:
        raise SignalTooShort("periodogram needs at least 8 samples")
    nfft = _nfft(n, zero_pad_to)
    xw = _windowed(x)
    power = np.abs(np.fft.rfft(xw, nfft)) ** 2 / nfft
    power[1:] *= 2.0
    if nfft % 2 == 0:
        power[-1] /= 2.0
    freqs = np.fft.rfftfreq(nfft, 1.0 / sig.sample_rate)
    return Spectrum(freqs, power, sig.sample_rate / nfft)


def windowed_energy(sig: BreathSignal) -> float:
    """Time-domain counterpart of ``periodogram(sig).power.sum()``."""
    xw = _windowed(sig.samples)
    return float(np.dot(xw, xw))


def _windowed(x):
    if np.ptp(x) == 0:
        return np.zeros_like(x)
    win = np.hanning(x.size)
    return (x - np.dot(win, x) / win.sum()) * win


def dominant_frequency(spec: Spectrum, low: float = BAND_LOW, high: float = BAND_HIGH) -> tuple[float, float]:
    """Peak frequency in [low, high] refined by a parabola through the three
    bins around the maximum, and the peak-to-median in-band power ratio."""
    idx = np.flatnonzero((spec.freqs >= low) & (spec.freqs <= high))
    if idx.size == 0:
        raise InvalidBand(f"no spectrum bins inside [{low}, {high}] Hz")
    band = spec.power[idx]
    k = int(idx[np.argmax(band)])
    peak = spec.power[k]
    med = float(np.median(band))
    if med > 0:
        snr = float(peak / med)
    else:
        snr = float("inf") if peak > 0 else 1.0

    delta = 0.0
    if 0 < k < spec.power.size - 1:
        a, b, c = spec.power[k - 1], peak, spec.power[k + 1]
        denom = a - 2.0 * b + c
        if denom < 0:
            delta = float(np.clip(0.5 * (a - c) / denom, -0.5, 0.5))
    return float(spec.freqs[k] + delta * spec.resolution), snr


def find_breath_peaks(sig: BreathSignal, min_separation: float = MIN_SEPARATION,
                      min_prominence: float = MIN_PROMINENCE):
    """Indices and prominences of qualifying local maxima.

    Peaks below ``min_prominence`` are dropped first; among the rest, any two
    closer than ``min_separation`` are resolved greedily in favour of the
    higher one.
    """
    peaks, props = sps.find_peaks(sig.samples, prominence=min_prominence)
    prom = props["prominences"]
    distance = min_separation * sig.sample_rate
    kept = []
    for i in sorted(range(peaks.size), key=lambda i: (-sig.samples[peaks[i]], peaks[i])):
        if all(abs(peaks[i] - peaks[j]) >= distance for j in kept):
            kept.append(i)
    kept.sort()
    return peaks[kept], prom[kept]


def count_peaks(sig: BreathSignal, min_separation: float = MIN_SEPARATION,
                min_prominence: float = MIN_PROMINENCE) -> int:
    return int(find_breath_peaks(sig, min_separation, min_prominence)[0].size)
