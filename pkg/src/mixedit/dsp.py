"""Waveform primitives: clips, resampling, crop/pad conditioning, STFT, Mel.

Everything operates on mono float64 arrays. Clips are immutable after
construction (the sample buffer is marked read-only) and safe to share
across threads and worker processes.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np
from scipy.signal import upfirdn

from .errors import MixeditError
from .seeding import derive_seed

DEFAULT_RATE = 16000
DEFAULT_DURATION_S = 5.0
DEFAULT_WINDOW = 512
DEFAULT_HOP = 128


class EmptyClip(MixeditError):
    pass


class BadWindowConfig(MixeditError):
    pass


@dataclass(frozen=True, eq=False)
class Clip:
    """Mono waveform with its sample rate. Samples are dimensionless
    amplitudes at nominal full scale +-1.0."""

    samples: np.ndarray
    rate: int

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("clips are mono: expected a 1-D sample array")
        if self.rate <= 0:
            raise ValueError("sample rate must be positive")
        if arr.size and not np.all(np.isfinite(arr)):
            raise ValueError("clip contains non-finite samples")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.rate


def mean_square(clip: Clip | np.ndarray) -> float:
    """Mean-square energy over the whole buffer, padding included."""
    x = clip.samples if isinstance(clip, Clip) else np.asarray(clip)
    if x.size == 0:
        return 0.0
    return float(np.mean(np.square(x)))


def _design_resample_filter(src: int, tgt: int, up: int) -> tuple[np.ndarray, int]:
    """Kaiser-windowed sinc lowpass for polyphase resampling.

    Cutoff sits at 0.475 * min(rates); the stopband edge is the lower
    Nyquist (0.5 * min); length follows the Kaiser estimate for 72 dB
    so the alias band is at least 60 dB down, with 64 taps per phase
    as a floor. Half-length is a multiple of `down` so the group delay
    lands on the output grid exactly.
    """
    down = src * up // tgt
    fs_filter = src * up
    fmin = min(src, tgt)
    cutoff = 0.475 * fmin
    transition = 2.0 * (0.5 * fmin - cutoff)
    atten = 72.0
    beta = 0.1102 * (atten - 8.7)
    n_est = math.ceil((atten - 7.95) / (2.285 * 2 * math.pi * transition / fs_filter))
    n_est = max(n_est, 64 * up)
    half = down * math.ceil(n_est / (2 * down))
    taps = 2 * half + 1
    n = np.arange(taps) - half
    c = 2.0 * cutoff / fs_filter  # cutoff as a fraction of Nyquist
    h = c * np.sinc(c * n) * np.kaiser(taps, beta)
    return h, half


def resample(clip: Clip, target_rate: int) -> Clip:
    """Band-limited resampling via a windowed-sinc polyphase filter.

    Output length is round(len * target / source). Same-rate input is
    returned unchanged.
    """
    if target_rate <= 0:
        raise ValueError("target rate must be positive")
    if target_rate == clip.rate:
        return clip
    if len(clip) == 0:
        return Clip(np.zeros(0), target_rate)
    g = math.gcd(clip.rate, target_rate)
    up, down = target_rate // g, clip.rate // g
    h, half = _design_resample_filter(clip.rate, target_rate, up)
    out_len = round(len(clip) * target_rate / clip.rate)
    # Pad so the delayed convolution covers the full output span.
    pad = math.ceil((half + 1) / up) + math.ceil(down * out_len / up)
    x = np.concatenate([clip.samples, np.zeros(pad)])
    full = upfirdn(h * up, x, up=up, down=down)
    skip = half // down  # exact: half is a multiple of down
    y = full[skip:skip + out_len]
    if len(y) < out_len:
        y = np.concatenate([y, np.zeros(out_len - len(y))])
    return Clip(y, target_rate)


def condition(clip: Clip, duration_s: float = DEFAULT_DURATION_S,
              seed: int = 0) -> Clip:
    """Fix a clip to an exact duration: random-start crop if too long
    (seeded), zero-padding at the end if too short."""
    if len(clip) == 0:
        raise EmptyClip("cannot condition an empty clip")
    target = round(duration_s * clip.rate)
    n = len(clip)
    if n == target:
        return clip
    if n > target:
        start = random.Random(derive_seed(seed)).randrange(n - target + 1)
        return Clip(clip.samples[start:start + target], clip.rate)
    return Clip(np.concatenate([clip.samples, np.zeros(target - n)]), clip.rate)


@dataclass(frozen=True, eq=False)
class Spectrogram:
    """Complex STFT frames, frequency bins by time frames."""

    frames: np.ndarray  # (window//2 + 1, n_frames)
    window: int
    hop: int
    rate: int
    n_samples: int

    def __post_init__(self):
        if self.frames.shape[0] != self.window // 2 + 1:
            raise ValueError("bin count must be window//2 + 1")
        if self.frames.shape[1] < 1:
            raise ValueError("need at least one frame")

    @property
    def n_bins(self) -> int:
        return self.frames.shape[0]

    @property
    def n_frames(self) -> int:
        return self.frames.shape[1]

    def magnitudes(self) -> np.ndarray:
        return np.abs(self.frames)


def _check_window(window: int, hop: int):
    if window <= 0 or hop <= 0:
        raise BadWindowConfig("window and hop must be positive")
    if window % hop != 0 or window // hop < 2:
        raise BadWindowConfig(
            f"hop {hop} must divide window {window} at least twice over "
            "for the overlap-add scheme"
        )


def _hann(window: int) -> np.ndarray:
    # Periodic Hann; shifted squared copies sum to a constant for hop <= window/2.
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(window) / window)


def stft(clip: Clip, window: int = DEFAULT_WINDOW, hop: int = DEFAULT_HOP) -> Spectrogram:
    """Hann-analysis STFT. The signal end is zero-padded to a whole frame."""
    _check_window(window, hop)
    x = clip.samples
    n = len(x)
    if n <= window:
        n_frames = 1
    else:
        n_frames = math.ceil((n - window) / hop) + 1
    padded_len = (n_frames - 1) * hop + window
    if padded_len > n:
        x = np.concatenate([x, np.zeros(padded_len - n)])
    frames = np.lib.stride_tricks.sliding_window_view(x, window)[::hop]
    spec = np.fft.rfft(frames * _hann(window), axis=1).T
    return Spectrogram(np.ascontiguousarray(spec), window, hop, clip.rate, n)


def istft(spec: Spectrogram) -> Clip:
    """Weighted overlap-add inverse; exact on the interior for any
    hop that divides the window."""
    w = _hann(spec.window)
    frames_t = np.fft.irfft(spec.frames.T, n=spec.window, axis=1)
    total = (spec.n_frames - 1) * spec.hop + spec.window
    num = np.zeros(total)
    den = np.zeros(total)
    wsq = w * w
    for f in range(spec.n_frames):
        start = f * spec.hop
        num[start:start + spec.window] += frames_t[f] * w
        den[start:start + spec.window] += wsq
    y = num / np.maximum(den, 1e-12)
    y = y[:spec.n_samples]
    if len(y) < spec.n_samples:
        y = np.concatenate([y, np.zeros(spec.n_samples - len(y))])
    return Clip(y, spec.rate)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int, n_bins: int, rate: int,
                   fmin: float = 0.0, fmax: float | None = None) -> np.ndarray:
    """Triangular Mel filterbank, (n_mels, n_bins). Full-band coverage:
    every row has positive weight."""
    if fmax is None:
        fmax = rate / 2.0
    window = 2 * (n_bins - 1)
    bin_freqs = np.arange(n_bins) * rate / window
    edges = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2))
    bank = np.zeros((n_mels, n_bins))
    for m in range(n_mels):
        lo, center, hi = edges[m], edges[m + 1], edges[m + 2]
        rising = (bin_freqs - lo) / max(center - lo, 1e-12)
        falling = (hi - bin_freqs) / max(hi - center, 1e-12)
        bank[m] = np.maximum(0.0, np.minimum(rising, falling))
        if not bank[m].any():  # very narrow triangle: grab the nearest bin
            bank[m, int(np.argmin(np.abs(bin_freqs - center)))] = 1.0
    return bank


def mel_project(magnitudes: np.ndarray, rate: int, n_mels: int = 80) -> np.ndarray:
    """Project non-negative magnitude frames onto the Mel scale
    (export/visualization only)."""
    mags = np.asarray(magnitudes, dtype=np.float64)
    if mags.ndim != 2:
        raise ValueError("expected a (bins, frames) magnitude matrix")
    if mags.size and mags.min() < 0:
        raise ValueError("magnitudes must be non-negative")
    bank = mel_filterbank(n_mels, mags.shape[0], rate)
    return bank @ mags
