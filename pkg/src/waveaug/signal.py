"""Waveform representation, WAV codec, resampling and amplitude utilities.

The in-memory model is mono float64 in nominal [-1, 1].  On disk the library
reads RIFF/WAVE with format code 1 (16-bit PCM) or 3 (32-bit IEEE float) and
always writes float32 mono, which makes write/read round trips bit-exact for
float32-valued buffers.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyAudio, InvalidParams, IoError, MalformedWav, SilentAudio, UnsupportedEncoding

_FMT_PCM = 1
_FMT_IEEE_FLOAT = 3


@dataclass(frozen=True)
class Waveform:
    """Mono sample buffer plus its sample rate in Hz.

    Samples are held as float64 and must all be finite.  A zero-length
    buffer is a legal value (the inverse STFT of a single frame produces
    one); file readers and the STFT reject it at their own boundaries.
    Instances are immutable and safe to share across threads.
    """

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise InvalidParams(f"waveform must be mono (1-D), got shape {samples.shape}")
        if not np.isfinite(samples).all():
            raise InvalidParams("waveform contains NaN or Inf samples")
        if int(self.sample_rate) <= 0:
            raise InvalidParams(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration(self) -> float:
        """Length in seconds."""
        return len(self) / self.sample_rate


def _round_half_up(x: float) -> int:
    """round() with halves away from zero, pinned for all length formulas."""
    return int(np.floor(x + 0.5)) if x >= 0 else -int(np.floor(-x + 0.5))


def read_wav(path) -> Waveform:
    """Read a RIFF/WAVE file into a mono :class:`Waveform`.

    Accepts 16-bit PCM and 32-bit IEEE float; multi-channel audio is
    downmixed by arithmetic mean.  16-bit samples map to [-1, 1) by division
    with 32768.
    """
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc

    if len(raw) < 12 or raw[0:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise MalformedWav(f"{path}: missing RIFF/WAVE header")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(raw):
        chunk_id = raw[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", raw, pos + 4)
        body = raw[pos + 8 : pos + 8 + chunk_size]
        if chunk_id == b"fmt ":
            fmt = body
        elif chunk_id == b"data":
            if len(body) < chunk_size:
                raise MalformedWav(f"{path}: data chunk truncated")
            data = body
        pos += 8 + chunk_size + (chunk_size & 1)  # chunks are word-aligned

    if fmt is None or len(fmt) < 16:
        raise MalformedWav(f"{path}: missing or short fmt chunk")
    if data is None:
        raise MalformedWav(f"{path}: missing data chunk")

    audio_format, channels, sample_rate, _, _, bits = struct.unpack_from("<HHIIHH", fmt, 0)
    if channels < 1:
        raise MalformedWav(f"{path}: zero channels")

    if audio_format == _FMT_PCM and bits == 16:
        frames = np.frombuffer(data[: len(data) - len(data) % (2 * channels)], dtype="<i2")
        scaled = frames.astype(np.float64) / 32768.0
    elif audio_format == _FMT_IEEE_FLOAT and bits == 32:
        frames = np.frombuffer(data[: len(data) - len(data) % (4 * channels)], dtype="<f4")
        scaled = frames.astype(np.float64)
    else:
        raise UnsupportedEncoding(
            f"{path}: format code {audio_format} with {bits} bits; only PCM16 and float32 are supported"
        )

    if scaled.size == 0:
        raise EmptyAudio(f"{path}: zero samples")
    if channels > 1:
        scaled = scaled.reshape(-1, channels).mean(axis=1)
    return Waveform(scaled, sample_rate)


def write_wav(path, w: Waveform) -> None:
    """Write ``w`` as mono little-endian IEEE float32 WAV."""
    payload = w.samples.astype("<f4").tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(payload),
        b"WAVE",
        b"fmt ",
        16,
        _FMT_IEEE_FLOAT,
        1,
        w.sample_rate,
        w.sample_rate * 4,
        4,
        32,
        b"data",
        len(payload),
    )
    try:
        Path(path).write_bytes(header + payload)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def resample(w: Waveform, target_rate: int) -> Waveform:
    """Linear-interpolation resampling to ``target_rate`` Hz.

    Output length is round(len * target / source); aliasing above the target
    Nyquist is accepted as a quality/complexity trade-off.
    """
    if target_rate <= 0:
        raise InvalidParams(f"target_rate must be positive, got {target_rate}")
    if target_rate == w.sample_rate:
        return w
    out_len = _round_half_up(len(w) * target_rate / w.sample_rate)
    if out_len < 1:
        raise EmptyAudio("resample would produce an empty buffer")
    positions = np.arange(out_len, dtype=np.float64) * (w.sample_rate / target_rate)
    out = np.interp(positions, np.arange(len(w), dtype=np.float64), w.samples)
    return Waveform(out, target_rate)


def peak_normalize(w: Waveform, target_peak: float) -> Waveform:
    """Scale so that max|samples| equals ``target_peak`` in (0, 1]."""
    if not 0.0 < target_peak <= 1.0:
        raise InvalidParams(f"target_peak must be in (0, 1], got {target_peak}")
    peak = float(np.max(np.abs(w.samples))) if len(w) else 0.0
    if peak == 0.0:
        raise SilentAudio("cannot normalize an all-zero waveform")
    return Waveform(w.samples * (target_peak / peak), w.sample_rate)
