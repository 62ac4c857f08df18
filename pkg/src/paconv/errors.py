"""Exception types shared across the package."""


class PacError(Exception):
    """Base class for every error this library raises on bad data."""


class DepthNotPositive(PacError):
    """Point sits at or behind the image plane where projection is undefined."""


class HorizonSingularity(PacError):
    """Pixel row too close to the principal-point row; ground backprojection diverges."""


class InvalidDimensions(PacError):
    """Zero-sized grid or field."""


class ShapeMismatch(PacError):
    """Tensor shape or dtype disagrees with the operation contract."""


class NonFiniteInput(PacError):
    """NaN or infinity where finite values are required."""


# --- serialization / parsing errors ---

class BadMagic(PacError):
    """Stream does not start with the PACT magic bytes."""


class UnsupportedVersion(PacError):
    """PACT container version this build does not understand."""


class UnknownDtype(PacError):
    """Dtype code outside the supported f32/f64 pair."""


class TruncatedPayload(PacError):
    """PACT stream shorter (or longer) than its header promises."""


class MissingP2(PacError):
    """Calibration text without a P2 projection line."""


class MalformedNumber(PacError):
    """P2 line whose values cannot be read as twelve floats."""


class NonPositiveFocal(PacError):
    """Calibration carrying a non-positive focal length."""
