"""waveaug: deterministic audio data augmentation and mel features.

A search space of waveform augmentations, a uniform random policy sampler,
and a batch feature pipeline, all driven by a pinned 64-bit PRNG so runs
reproduce bit-exactly across machines, worker counts, and languages.
"""

from .augment import (
    MAGNITUDE_SPECS,
    AugmentationKind,
    MagnitudeSpec,
    apply_one,
    band_pass,
    band_stop,
    clip,
    gain,
    noise_inject,
    pad,
    pitch_shift,
    reverse,
    time_mask,
    time_stretch,
    trim,
)
from .dsp import (
    ComplexSpectrogram,
    FeatureImage,
    MelParams,
    biquad_bandpass,
    biquad_bandstop,
    istft,
    mel_filterbank,
    mel_spectrogram,
    phase_vocoder,
    resize_bilinear,
    stft,
)
from .errors import (
    DuplicateKind,
    EmptyAudio,
    InvalidN,
    InvalidParams,
    IoError,
    LayoutMismatch,
    MagnitudeOutOfRange,
    MalformedAraf,
    MalformedWav,
    MissingMetadata,
    SilentAudio,
    UnknownAugmentation,
    UnsupportedEncoding,
    WaveaugError,
)
from .pipeline import (
    DatasetManifest,
    DatasetRecord,
    RunReport,
    ingest,
    read_araf,
    run_augment,
    run_features,
    write_araf,
)
from .policy import (
    DEFAULT_KINDS,
    DEFAULT_N,
    Policy,
    PolicyStep,
    SearchSpace,
    SeedPlan,
    SpaceEntry,
    apply_policy,
    default_space,
    n_from_config,
    sample_policy,
    space_from_config,
)
from .rng import RandomSource, fnv1a64, splitmix64
from .signal import Waveform, peak_normalize, read_wav, resample, write_wav

__version__ = "0.1.0"

__all__ = [
    "AugmentationKind",
    "ComplexSpectrogram",
    "DEFAULT_KINDS",
    "DEFAULT_N",
    "DatasetManifest",
    "DatasetRecord",
    "DuplicateKind",
    "EmptyAudio",
    "FeatureImage",
    "InvalidN",
    "InvalidParams",
    "IoError",
    "LayoutMismatch",
    "MAGNITUDE_SPECS",
    "MagnitudeOutOfRange",
    "MagnitudeSpec",
    "MalformedAraf",
    "MalformedWav",
    "MelParams",
    "MissingMetadata",
    "Policy",
    "PolicyStep",
    "RandomSource",
    "RunReport",
    "SearchSpace",
    "SeedPlan",
    "SilentAudio",
    "SpaceEntry",
    "UnknownAugmentation",
    "UnsupportedEncoding",
    "Waveform",
    "WaveaugError",
    "apply_one",
    "apply_policy",
    "band_pass",
    "band_stop",
    "biquad_bandpass",
    "biquad_bandstop",
    "clip",
    "default_space",
    "fnv1a64",
    "gain",
    "ingest",
    "istft",
    "mel_filterbank",
    "mel_spectrogram",
    "n_from_config",
    "noise_inject",
    "pad",
    "peak_normalize",
    "phase_vocoder",
    "pitch_shift",
    "read_araf",
    "read_wav",
    "resample",
    "resize_bilinear",
    "reverse",
    "run_augment",
    "run_features",
    "sample_policy",
    "space_from_config",
    "splitmix64",
    "stft",
    "time_mask",
    "time_stretch",
    "trim",
    "write_araf",
    "write_wav",
]
