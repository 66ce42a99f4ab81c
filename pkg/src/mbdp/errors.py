"""Exception types shared across the toolkit."""


class MbdpError(Exception):
    """Base class for all toolkit errors."""


class ModelError(MbdpError):
    """Malformed model structure: bad shapes, indices, or distributions."""


class ParseError(MbdpError):
    """Unreadable problem or policy file; message carries line context when known."""


class ImpossibleEvidenceError(MbdpError):
    """Bayes update conditioned on a zero-probability observation."""


class EvaluationError(MbdpError):
    """Joint-policy evaluation hit an incomplete or inconsistent tree."""


class CapacityError(MbdpError):
    """An enumeration would exceed the configured size cap."""


class ConfigError(MbdpError):
    """Invalid solver or benchmark configuration."""
