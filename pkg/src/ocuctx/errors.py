"""Exception types shared across the package.

Batch evaluation catches ``OcuctxError`` per image so that one broken file
does not abort a whole run; anything else is a genuine bug and propagates.
"""


class OcuctxError(Exception):
    """Base class for all errors raised by this package."""


class MaskFormatError(OcuctxError):
    """Mask file is unreadable or not an 8-bit single-channel raster."""


class LabelValidationError(OcuctxError):
    """A pixel carries a label value not declared in the class spec."""


class PairMismatchError(OcuctxError):
    """Ground-truth / prediction masks differ in size or class spec."""


class ConfigError(OcuctxError):
    """Invalid class spec, class-config file, or harness configuration."""


class DegenerateSampleError(OcuctxError):
    """Paired sample has no nonzero differences; the test is undefined."""
