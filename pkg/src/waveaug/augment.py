"""Waveform-level augmentation operators.

Every operator has the signature ``(w, magnitude, rng) -> Waveform`` where
the magnitude is in the operator's natural unit (dB, semitones, rate,
fraction, octaves).  Randomness comes only from the supplied
:class:`~waveaug.rng.RandomSource`, and each operator consumes a fixed,
documented number of draws for a given input length:

    ============  =====================================
    operator      draws
    ============  =====================================
    noise_inject  2 * ceil(len/2) floats (Box-Muller)
    pad, trim     1 (end selector)
    time_mask     1 (mask start)
    gain          1 (gain in dB)
    band_pass     1 (center frequency)
    band_stop     1 (center frequency)
    others        0
    ============  =====================================

That budget is part of the contract: callers can replay a stream to
recover the drawn values, and tests assert the state advance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum, unique

import numpy as np

from . import dsp
from .errors import EmptyAudio, MagnitudeOutOfRange, SilentAudio, UnknownAugmentation
from .rng import RandomSource
from .signal import Waveform, _round_half_up

VOCODER_N_FFT = 1024
VOCODER_HOP = 256

# band filters draw their center frequency log-uniformly from this band
CENTER_LO_HZ = 100.0
CENTER_HI_FRACTION = 0.45


@unique
class AugmentationKind(Enum):
    """The eleven augmentation operators, in canonical order."""

    NOISE_INJECTION = "noise"
    PITCH_SHIFT = "pitch"
    TIME_STRETCH = "stretch"
    PADDING = "pad"
    CLIP = "clip"
    REVERSE = "reverse"
    BAND_PASS_FILTER = "bpf"
    GAIN = "gain"
    TIME_MASK = "time_mask"
    TRIM = "trim"
    BAND_STOP_FILTER = "bsf"

    @classmethod
    def from_name(cls, name: str) -> "AugmentationKind":
        for kind in cls:
            if kind.value == name:
                return kind
        raise UnknownAugmentation(f"unknown augmentation kind {name!r}")


@dataclass(frozen=True)
class MagnitudeSpec:
    """Per-kind magnitude range in natural units.

    ``lo_open`` marks a strict lower bound (clip rejects level 0, which
    would silence the whole buffer).
    """

    kind: AugmentationKind
    unit: str
    lo: float
    hi: float
    default: float
    lo_open: bool = False

    def check(self, value: float) -> float:
        value = float(value)
        if not math.isfinite(value):
            raise MagnitudeOutOfRange(f"{self.kind.value}: magnitude must be finite, got {value}")
        below = value <= self.lo if self.lo_open else value < self.lo
        if below or value > self.hi:
            bracket = "(" if self.lo_open else "["
            raise MagnitudeOutOfRange(
                f"{self.kind.value}: magnitude {value} outside {bracket}{self.lo}, {self.hi}] {self.unit}"
            )
        return value

    def from_level(self, level: float) -> float:
        """Map a normalized level in [0, 1] linearly onto [lo, hi]."""
        level = float(level)
        if not 0.0 <= level <= 1.0:
            raise MagnitudeOutOfRange(f"{self.kind.value}: level {level} outside [0, 1]")
        return self.lo + level * (self.hi - self.lo)


MAGNITUDE_SPECS: dict[AugmentationKind, MagnitudeSpec] = {
    spec.kind: spec
    for spec in (
        MagnitudeSpec(AugmentationKind.NOISE_INJECTION, "dB SNR", 0.0, 60.0, 20.0),
        MagnitudeSpec(AugmentationKind.PITCH_SHIFT, "semitones", -12.0, 12.0, 2.0),
        MagnitudeSpec(AugmentationKind.TIME_STRETCH, "rate", 0.5, 2.0, 1.4),
        MagnitudeSpec(AugmentationKind.PADDING, "fraction", 0.0, 0.5, 0.1),
        MagnitudeSpec(AugmentationKind.CLIP, "peak fraction", 0.0, 1.0, 0.6, lo_open=True),
        MagnitudeSpec(AugmentationKind.REVERSE, "unused", 0.0, 0.0, 0.0),
        MagnitudeSpec(AugmentationKind.BAND_PASS_FILTER, "octaves", 0.5, 4.0, 2.0),
        MagnitudeSpec(AugmentationKind.GAIN, "dB", 0.0, 24.0, 12.0),
        MagnitudeSpec(AugmentationKind.TIME_MASK, "fraction", 0.0, 0.5, 0.1),
        MagnitudeSpec(AugmentationKind.TRIM, "fraction", 0.0, 0.4, 0.1),
        MagnitudeSpec(AugmentationKind.BAND_STOP_FILTER, "octaves", 0.5, 4.0, 2.0),
    )
}


def _checked(kind: AugmentationKind, w: Waveform, magnitude: float) -> float:
    if len(w) == 0:
        raise EmptyAudio(f"{kind.value}: empty input")
    return MAGNITUDE_SPECS[kind].check(magnitude)


def noise_inject(w: Waveform, snr_db: float, rng: RandomSource) -> Waveform:
    """Add white Gaussian noise at the requested signal-to-noise ratio.

    Gaussians come from Box-Muller over paired uniform draws:
    z0 = sqrt(-2 ln(1-u1)) cos(2 pi u2), z1 = the sine twin.  The raw noise
    is rescaled so the measured SNR equals ``snr_db`` exactly.
    """
    snr_db = _checked(AugmentationKind.NOISE_INJECTION, w, snr_db)
    signal_power = float(np.mean(w.samples**2))
    if signal_power == 0.0:
        raise SilentAudio("noise_inject: SNR is undefined for an all-zero signal")

    n_pairs = (len(w) + 1) // 2
    u = rng.next_float_block(2 * n_pairs)
    u1, u2 = u[0::2], u[1::2]
    radius = np.sqrt(-2.0 * np.log(1.0 - u1))
    angle = 2.0 * np.pi * u2
    raw = np.empty(2 * n_pairs)
    raw[0::2] = radius * np.cos(angle)
    raw[1::2] = radius * np.sin(angle)
    raw = raw[: len(w)]

    raw_power = float(np.mean(raw**2))
    if raw_power == 0.0:
        # astronomically unlikely (every draw hit u1 == 0); nothing to add
        return w
    target_power = signal_power / (10.0 ** (snr_db / 10.0))
    noise = raw * math.sqrt(target_power / raw_power)
    return Waveform(w.samples + noise, w.sample_rate)


def _stretch_samples(w: Waveform, rate: float) -> np.ndarray:
    """Phase-vocoder time scaling of the raw samples (rate > 1 shortens)."""
    spec = dsp.stft(w, n_fft=VOCODER_N_FFT, hop=VOCODER_HOP)
    return dsp.istft(dsp.phase_vocoder(spec, rate)).samples


def _fit_length(samples: np.ndarray, target: int) -> np.ndarray:
    if len(samples) >= target:
        return samples[:target]
    return np.concatenate([samples, np.zeros(target - len(samples))])


def pitch_shift(w: Waveform, semitones: float, rng: RandomSource) -> Waveform:
    """Shift pitch by a semitone count without changing duration.

    Stretches duration by r = 2^(semitones/12) with the phase vocoder,
    then resamples the stretched signal by 1/r, which scales every
    frequency by r while restoring the original duration.
    """
    semitones = _checked(AugmentationKind.PITCH_SHIFT, w, semitones)
    ratio = 2.0 ** (semitones / 12.0)
    if ratio == 1.0:
        return w

    stretched = _stretch_samples(w, 1.0 / ratio)
    if len(stretched) == 0:
        # inputs shorter than one vocoder hop resynthesize to nothing
        return Waveform(np.zeros(len(w)), w.sample_rate)
    out_len = max(1, _round_half_up(len(stretched) / ratio))
    positions = np.arange(out_len, dtype=np.float64) * ratio
    shifted = np.interp(positions, np.arange(len(stretched), dtype=np.float64), stretched)
    return Waveform(_fit_length(shifted, len(w)), w.sample_rate)


def time_stretch(w: Waveform, rate: float, rng: RandomSource) -> Waveform:
    """Change duration by 1/rate while preserving pitch; rate > 1 shortens."""
    rate = _checked(AugmentationKind.TIME_STRETCH, w, rate)
    if rate == 1.0:
        return w
    target = _round_half_up(len(w) / rate)
    return Waveform(_fit_length(_stretch_samples(w, rate), target), w.sample_rate)


def pad(w: Waveform, fraction: float, rng: RandomSource) -> Waveform:
    """Overwrite floor(fraction*len) samples with zeros at one end.

    The end (0 = begin, 1 = end) is drawn even when the fraction is zero,
    keeping the draw budget independent of the magnitude.
    """
    fraction = _checked(AugmentationKind.PADDING, w, fraction)
    at_end = rng.next_below(2)
    k = int(fraction * len(w))
    out = w.samples.copy()
    if k:
        if at_end:
            out[len(w) - k :] = 0.0
        else:
            out[:k] = 0.0
    return Waveform(out, w.sample_rate)


def clip(w: Waveform, level: float, rng: RandomSource) -> Waveform:
    """Clamp samples to +/- level * max|x|."""
    level = _checked(AugmentationKind.CLIP, w, level)
    threshold = level * float(np.max(np.abs(w.samples)))
    return Waveform(np.clip(w.samples, -threshold, threshold), w.sample_rate)


def reverse(w: Waveform, magnitude: float, rng: RandomSource) -> Waveform:
    """Reverse playback order; the magnitude argument is ignored."""
    if len(w) == 0:
        raise EmptyAudio("reverse: empty input")
    return Waveform(w.samples[::-1].copy(), w.sample_rate)


def _draw_center_hz(w: Waveform, rng: RandomSource) -> float:
    """Log-uniform center in [100 Hz, 0.45 * sample_rate]; one draw."""
    u = rng.next_float()
    lo = math.log(CENTER_LO_HZ)
    hi = math.log(CENTER_HI_FRACTION * w.sample_rate)
    return math.exp(lo + u * (hi - lo))


def _bandwidth_q(octaves: float) -> float:
    return 1.0 / (2.0 ** (octaves / 2.0) - 2.0 ** (-octaves / 2.0))


def band_pass(w: Waveform, bandwidth_octaves: float, rng: RandomSource) -> Waveform:
    """Band-pass around a randomly drawn center, width in octaves."""
    octaves = _checked(AugmentationKind.BAND_PASS_FILTER, w, bandwidth_octaves)
    center = _draw_center_hz(w, rng)
    return dsp.biquad_bandpass(w, center, _bandwidth_q(octaves))


def gain(w: Waveform, max_db: float, rng: RandomSource) -> Waveform:
    """Scale by a uniform random gain in [-max_db, +max_db] dB."""
    max_db = _checked(AugmentationKind.GAIN, w, max_db)
    g_db = -max_db + rng.next_float() * (2.0 * max_db)
    return Waveform(w.samples * (10.0 ** (g_db / 20.0)), w.sample_rate)


def time_mask(w: Waveform, fraction: float, rng: RandomSource) -> Waveform:
    """Silence floor(fraction*len) contiguous samples at a drawn offset."""
    fraction = _checked(AugmentationKind.TIME_MASK, w, fraction)
    k = int(fraction * len(w))
    start = rng.next_below(len(w) - k + 1)
    out = w.samples.copy()
    out[start : start + k] = 0.0
    return Waveform(out, w.sample_rate)


def trim(w: Waveform, fraction: float, rng: RandomSource) -> Waveform:
    """Remove floor(fraction*len) samples from one randomly chosen end."""
    fraction = _checked(AugmentationKind.TRIM, w, fraction)
    at_end = rng.next_below(2)
    k = int(fraction * len(w))
    kept = w.samples[: len(w) - k] if at_end else w.samples[k:]
    return Waveform(kept.copy(), w.sample_rate)


def band_stop(w: Waveform, bandwidth_octaves: float, rng: RandomSource) -> Waveform:
    """Notch out a randomly drawn center, width in octaves."""
    octaves = _checked(AugmentationKind.BAND_STOP_FILTER, w, bandwidth_octaves)
    center = _draw_center_hz(w, rng)
    return dsp.biquad_bandstop(w, center, _bandwidth_q(octaves))


OPERATORS = {
    AugmentationKind.NOISE_INJECTION: noise_inject,
    AugmentationKind.PITCH_SHIFT: pitch_shift,
    AugmentationKind.TIME_STRETCH: time_stretch,
    AugmentationKind.PADDING: pad,
    AugmentationKind.CLIP: clip,
    AugmentationKind.REVERSE: reverse,
    AugmentationKind.BAND_PASS_FILTER: band_pass,
    AugmentationKind.GAIN: gain,
    AugmentationKind.TIME_MASK: time_mask,
    AugmentationKind.TRIM: trim,
    AugmentationKind.BAND_STOP_FILTER: band_stop,
}


def apply_one(kind: AugmentationKind, w: Waveform, magnitude: float, rng: RandomSource) -> Waveform:
    """Dispatch a single augmentation by kind."""
    return OPERATORS[kind](w, magnitude, rng)


def expected_length(kind: AugmentationKind, length: int, magnitude: float) -> int:
    """The exact output length each operator must produce."""
    if kind is AugmentationKind.TIME_STRETCH:
        return _round_half_up(length / magnitude)
    if kind is AugmentationKind.TRIM:
        return length - int(magnitude * length)
    return length
