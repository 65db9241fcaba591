"""Exception taxonomy shared across the library.

Every error raised by waveaug derives from :class:`WaveaugError`, so callers
can catch one base class at pipeline boundaries while tests can assert on the
precise failure kind.
"""


class WaveaugError(Exception):
    """Base class for all waveaug errors."""


class MalformedWav(WaveaugError):
    """The file is not a parseable RIFF/WAVE container."""


class MalformedAraf(WaveaugError):
    """The file is not a parseable ARAF tensor container."""


class UnsupportedEncoding(WaveaugError):
    """The WAV uses a codec other than 16-bit PCM or 32-bit IEEE float."""


class EmptyAudio(WaveaugError):
    """An operation received or would produce a zero-length buffer."""


class SilentAudio(WaveaugError):
    """All-zero input where a nonzero signal level is required."""


class InvalidParams(WaveaugError):
    """Parameter combination outside an operation's documented domain."""


class MagnitudeOutOfRange(WaveaugError):
    """Augmentation magnitude outside the kind's allowed range."""


class InvalidN(WaveaugError):
    """Requested policy length is negative or exceeds the search space."""


class UnknownAugmentation(WaveaugError):
    """Config names an augmentation kind that does not exist."""


class DuplicateKind(WaveaugError):
    """Config lists the same augmentation kind more than once."""


class LayoutMismatch(WaveaugError):
    """Dataset files do not follow the declared layout convention."""


class MissingMetadata(WaveaugError):
    """Dataset layout requires a metadata file that is absent."""


class IoError(WaveaugError):
    """File system failure while reading or writing artifacts."""
