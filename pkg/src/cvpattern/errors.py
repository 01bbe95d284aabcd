"""Exception hierarchy shared by all modules.

Exit-code mapping used by the CLI: ConfigError/FormatError -> 2,
GenerationError -> 3, NumericalError -> 4.
"""


class CvpatternError(Exception):
    """Base class for all package errors."""


class ConfigError(CvpatternError):
    """Invalid configuration, dimensions, or arguments."""


class FormatError(ConfigError):
    """Malformed or incompatible on-disk file."""


class InvalidChannelError(CvpatternError):
    """Kraus set violates completeness on the truncated space."""


class TruncationOverflowError(CvpatternError):
    """Truncation leaked more probability than the tolerance allows."""

    def __init__(self, leakage: float, tol: float):
        super().__init__(f"truncation leakage {leakage:.3e} exceeds tolerance {tol:.3e}")
        self.leakage = leakage
        self.tol = tol


class GenerationError(CvpatternError):
    """Sample/seed generation failed (e.g. retry budget exhausted)."""


class NumericalError(CvpatternError):
    """Non-finite value encountered during training or evaluation."""
