"""Exception hierarchy shared across the pipeline.

Every error carries a short machine-readable ``code`` so the CLI can print
coded messages and pick an exit status without string matching.
"""


class RespiscreenError(Exception):
    code = "ERROR"


# clip container

class ClipDecodeError(RespiscreenError, ValueError):
    code = "DECODE_ERROR"


class BadMagic(ClipDecodeError):
    code = "BAD_MAGIC"


class UnsupportedVersion(ClipDecodeError):
    code = "UNSUPPORTED_VERSION"


class TruncatedPayload(ClipDecodeError):
    code = "TRUNCATED_PAYLOAD"


class DimensionOverflow(ClipDecodeError):
    code = "DIMENSION_OVERFLOW"


class NonMonotonicTimestamps(ClipDecodeError):
    code = "NON_MONOTONIC_TIMESTAMPS"


class InvalidClip(RespiscreenError, ValueError):
    code = "INVALID_CLIP"


class NonUniformSampling(InvalidClip):
    code = "NON_UNIFORM_SAMPLING"


class OutOfBounds(RespiscreenError, ValueError):
    code = "OUT_OF_BOUNDS"


# simulator / config

class InvalidScenario(RespiscreenError, ValueError):
    code = "INVALID_SCENARIO"

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class InvalidConfig(RespiscreenError, ValueError):
    code = "INVALID_CONFIG"

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


# detection

class NoFaceFound(RespiscreenError):
    code = "NO_FACE_FOUND"


class RegionTooSmall(RespiscreenError, ValueError):
    code = "REGION_TOO_SMALL"


class NoBreathingRegion(RespiscreenError):
    code = "NO_BREATHING_REGION"


# signal processing

class SignalTooShort(RespiscreenError, ValueError):
    code = "SIGNAL_TOO_SHORT"


class InvalidBand(RespiscreenError, ValueError):
    code = "INVALID_BAND"
