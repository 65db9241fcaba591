"""Spectral machinery: STFT/ISTFT, phase-vocoder time scaling, mel features,
band filters and bilinear resize.

Conventions pinned here so downstream golden files are stable:

* periodic Hann window ``0.5 * (1 - cos(2*pi*n/n_fft))``
* analysis frames start every ``hop`` samples of the reflect-padded input
  (``n_fft//2`` pad on each side), giving ``len//hop + 1`` frames
* inverse transform uses weighted overlap-add with squared-window
  normalization and returns ``(n_frames - 1) * hop`` samples
* mel filters are triangles with peaks on the HTK mel scale
  ``mel(f) = 2595 * log10(1 + f/700)`` and unit peak height
* image resize uses align-corners bilinear sampling
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.signal

from .errors import EmptyAudio, InvalidParams
from .signal import Waveform

Scale = Literal["power", "decibel"]

DB_FLOOR = 1e-10
DB_RANGE = 80.0


@dataclass(frozen=True)
class ComplexSpectrogram:
    """STFT frames: complex bins of shape (n_fft//2 + 1, n_frames)."""

    bins: np.ndarray
    n_fft: int
    hop: int
    sample_rate: int

    def __post_init__(self):
        bins = np.asarray(self.bins, dtype=np.complex128)
        if self.n_fft <= 0 or self.n_fft % 2 != 0:
            raise InvalidParams(f"n_fft must be a positive even integer, got {self.n_fft}")
        if not 1 <= self.hop <= self.n_fft:
            raise InvalidParams(f"hop must be in [1, n_fft], got {self.hop}")
        if bins.ndim != 2 or bins.shape[0] != self.n_fft // 2 + 1:
            raise InvalidParams(f"bins shape {bins.shape} does not match n_fft {self.n_fft}")
        if not np.isfinite(bins).all():
            raise InvalidParams("spectrogram contains non-finite values")
        object.__setattr__(self, "bins", bins)

    @property
    def n_frames(self) -> int:
        return int(self.bins.shape[1])


@dataclass(frozen=True)
class FeatureImage:
    """Real-valued 2-D feature tensor, power- or decibel-scaled."""

    values: np.ndarray
    scale: Scale

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.size == 0:
            raise InvalidParams(f"feature image must be non-empty 2-D, got shape {values.shape}")
        if not np.isfinite(values).all():
            raise InvalidParams("feature image contains non-finite values")
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> tuple[int, int]:
        return (int(self.values.shape[0]), int(self.values.shape[1]))


@dataclass(frozen=True)
class MelParams:
    """Mel-spectrogram front-end parameters."""

    n_fft: int = 1024
    hop: int = 512
    n_mels: int = 64
    fmin: float = 0.0
    fmax: float | None = None  # None means sample_rate / 2
    window: str = "hann"

    def resolve_fmax(self, sample_rate: int) -> float:
        return sample_rate / 2.0 if self.fmax is None else float(self.fmax)


def hann_window(n_fft: int) -> np.ndarray:
    """Periodic Hann window of length n_fft."""
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(n_fft) / n_fft))


def _pad_center(x: np.ndarray, pad: int) -> np.ndarray:
    if x.size >= 2:
        return np.pad(x, pad, mode="reflect")
    # reflect is undefined for a single sample; a constant extension is the
    # degenerate limit and keeps every length >= 1 usable
    return np.pad(x, pad, mode="edge")


def stft(w: Waveform, n_fft: int = 1024, hop: int = 512, window: str = "hann") -> ComplexSpectrogram:
    """Short-time Fourier transform with reflect center padding.

    Frame count is ``len(w)//hop + 1``; frame ``t`` covers padded samples
    ``[t*hop, t*hop + n_fft)``.
    """
    if window != "hann":
        raise InvalidParams(f"unsupported window {window!r}")
    if n_fft <= 0 or n_fft % 2 != 0:
        raise InvalidParams(f"n_fft must be a positive even integer, got {n_fft}")
    if hop < 1 or hop > n_fft:
        raise InvalidParams(f"hop must be in [1, n_fft], got {hop}")
    if len(w) < 1:
        raise EmptyAudio("stft requires at least one sample")

    win = hann_window(n_fft)
    padded = _pad_center(w.samples, n_fft // 2)
    n_frames = len(w) // hop + 1
    starts = np.arange(n_frames) * hop
    frames = np.lib.stride_tricks.sliding_window_view(padded, n_fft)[starts]
    bins = np.fft.rfft(frames * win, axis=1).T
    return ComplexSpectrogram(bins, n_fft=n_fft, hop=hop, sample_rate=w.sample_rate)


def istft(s: ComplexSpectrogram, window: str = "hann") -> Waveform:
    """Inverse STFT via weighted overlap-add with squared-window normalization.

    Center padding is removed; output length is ``(n_frames - 1) * hop``.
    """
    if window != "hann":
        raise InvalidParams(f"unsupported window {window!r}")
    if s.hop > s.n_fft // 2:
        raise InvalidParams(f"istft requires hop <= n_fft/2, got hop {s.hop} for n_fft {s.n_fft}")

    n_frames = s.n_frames
    out_len = (n_frames - 1) * s.hop
    if out_len <= 0:
        # single-frame spectrogram reconstructs to nothing by the length formula
        return Waveform(np.zeros(0), s.sample_rate)

    win = hann_window(s.n_fft)
    frames = np.fft.irfft(s.bins.T, n=s.n_fft, axis=1)
    total = out_len + s.n_fft
    acc = np.zeros(total)
    wsum = np.zeros(total)
    for t in range(n_frames):
        start = t * s.hop
        acc[start : start + s.n_fft] += frames[t] * win
        wsum[start : start + s.n_fft] += win * win
    lo = s.n_fft // 2
    acc = acc[lo : lo + out_len]
    wsum = wsum[lo : lo + out_len]
    nonzero = wsum > 1e-12
    acc[nonzero] /= wsum[nonzero]
    return Waveform(acc, s.sample_rate)


def _wrap_phase(x: np.ndarray) -> np.ndarray:
    return x - 2.0 * np.pi * np.round(x / (2.0 * np.pi))


def phase_vocoder(s: ComplexSpectrogram, rate: float) -> ComplexSpectrogram:
    """Time-scale modification: rate > 1 shortens, rate < 1 lengthens.

    Output frame ``t`` reads fractional source position ``t * rate``;
    magnitudes are linearly interpolated between neighbouring frames and
    phases advance by the expected per-frame increment ``2*pi*hop*k/n_fft``
    plus the wrapped deviation measured between source frames.
    """
    if rate <= 0:
        raise InvalidParams(f"rate must be positive, got {rate}")
    if rate == 1.0:
        return s

    n_out = math.ceil(s.n_frames / rate)
    n_bins = s.bins.shape[0]
    padded = np.concatenate([s.bins, np.zeros((n_bins, 1), dtype=np.complex128)], axis=1)
    mags = np.abs(padded)
    phases = np.angle(padded)

    expected = 2.0 * np.pi * s.hop * np.arange(n_bins) / s.n_fft
    out = np.empty((n_bins, n_out), dtype=np.complex128)
    phase_acc = phases[:, 0].copy()

    for t in range(n_out):
        pos = t * rate
        idx = min(int(pos), s.n_frames - 1)
        frac = pos - idx
        mag = (1.0 - frac) * mags[:, idx] + frac * mags[:, idx + 1]
        out[:, t] = mag * np.exp(1j * phase_acc)
        deviation = _wrap_phase(phases[:, idx + 1] - phases[:, idx] - expected)
        phase_acc += expected + deviation

    return ComplexSpectrogram(out, n_fft=s.n_fft, hop=s.hop, sample_rate=s.sample_rate)


def hz_to_mel(f):
    """HTK mel scale."""
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(sample_rate: int, n_fft: int, n_mels: int, fmin: float = 0.0, fmax: float | None = None) -> np.ndarray:
    """Triangular mel filter matrix of shape (n_mels, n_fft//2 + 1).

    Peaks are equally spaced on the mel scale with unit height; each
    triangle's endpoints sit at the neighbouring filter centers.
    """
    if fmax is None:
        fmax = sample_rate / 2.0
    if n_mels < 2:
        raise InvalidParams(f"n_mels must be >= 2, got {n_mels}")
    if not 0.0 <= fmin < fmax <= sample_rate / 2.0:
        raise InvalidParams(f"need 0 <= fmin < fmax <= nyquist, got fmin={fmin} fmax={fmax}")
    if n_fft <= 0 or n_fft % 2 != 0:
        raise InvalidParams(f"n_fft must be a positive even integer, got {n_fft}")

    mel_points = np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2)
    hz_points = mel_to_hz(mel_points)
    bin_freqs = np.arange(n_fft // 2 + 1) * (sample_rate / n_fft)

    fb = np.zeros((n_mels, n_fft // 2 + 1))
    for i in range(n_mels):
        left, center, right = hz_points[i], hz_points[i + 1], hz_points[i + 2]
        up = (bin_freqs - left) / (center - left)
        down = (right - bin_freqs) / (right - center)
        fb[i] = np.maximum(0.0, np.minimum(up, down))
    return fb


def mel_spectrogram(w: Waveform, p: MelParams | None = None) -> FeatureImage:
    """Decibel mel-spectrogram: |STFT|^2 through the filterbank, then
    ``10*log10(v + 1e-10)`` clamped to an 80 dB window below the maximum."""
    p = p or MelParams()
    spec = stft(w, n_fft=p.n_fft, hop=p.hop, window=p.window)
    power = np.abs(spec.bins) ** 2
    fb = mel_filterbank(w.sample_rate, p.n_fft, p.n_mels, p.fmin, p.resolve_fmax(w.sample_rate))
    mel_power = fb @ power
    db = 10.0 * np.log10(mel_power + DB_FLOOR)
    db = np.maximum(db, db.max() - DB_RANGE)
    return FeatureImage(db, scale="decibel")


def resize_bilinear(img: FeatureImage, out_rows: int, out_cols: int) -> FeatureImage:
    """Align-corners bilinear resize; corner pixels are preserved exactly."""
    if out_rows < 1 or out_cols < 1:
        raise InvalidParams(f"output dims must be >= 1, got {out_rows}x{out_cols}")
    values = img.values
    in_rows, in_cols = values.shape

    def coords(out_n: int, in_n: int) -> np.ndarray:
        if out_n == 1:
            return np.zeros(1)
        return np.arange(out_n, dtype=np.float64) * ((in_n - 1) / (out_n - 1))

    r = coords(out_rows, in_rows)
    c = coords(out_cols, in_cols)
    r0 = np.minimum(r.astype(np.int64), in_rows - 1)
    c0 = np.minimum(c.astype(np.int64), in_cols - 1)
    r1 = np.minimum(r0 + 1, in_rows - 1)
    c1 = np.minimum(c0 + 1, in_cols - 1)
    rf = (r - r0)[:, None]
    cf = (c - c0)[None, :]

    top = values[np.ix_(r0, c0)] * (1 - cf) + values[np.ix_(r0, c1)] * cf
    bottom = values[np.ix_(r1, c0)] * (1 - cf) + values[np.ix_(r1, c1)] * cf
    out = top * (1 - rf) + bottom * rf
    return FeatureImage(out, scale=img.scale)


def _biquad_coeffs(center_hz: float, q: float, sample_rate: int, kind: str):
    w0 = 2.0 * math.pi * center_hz / sample_rate
    alpha = math.sin(w0) / (2.0 * q)
    cos_w0 = math.cos(w0)
    if kind == "bandpass":  # 0 dB peak gain
        b = (alpha, 0.0, -alpha)
    else:  # notch
        b = (1.0, -2.0 * cos_w0, 1.0)
    a0 = 1.0 + alpha
    a = (a0, -2.0 * cos_w0, 1.0 - alpha)
    return np.array(b) / a0, np.array(a) / a0


def _apply_biquad(w: Waveform, center_hz: float, q: float, kind: str) -> Waveform:
    if q <= 0:
        raise InvalidParams(f"q must be positive, got {q}")
    if not 0.0 < center_hz < w.sample_rate / 2.0:
        raise InvalidParams(f"center {center_hz} Hz outside (0, nyquist) for rate {w.sample_rate}")
    b, a = _biquad_coeffs(center_hz, q, w.sample_rate, kind)
    out = scipy.signal.lfilter(b, a, w.samples)
    return Waveform(out, w.sample_rate)


def biquad_bandpass(w: Waveform, center_hz: float, q: float) -> Waveform:
    """Band-pass biquad (0 dB peak gain at the center frequency)."""
    return _apply_biquad(w, center_hz, q, "bandpass")


def biquad_bandstop(w: Waveform, center_hz: float, q: float) -> Waveform:
    """Notch biquad: the center frequency is strongly attenuated."""
    return _apply_biquad(w, center_hz, q, "notch")
