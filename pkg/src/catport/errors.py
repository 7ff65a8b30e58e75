"""Exception types shared across the simulator.

Each maps to a CLI exit code where relevant: ConfigError and
ImpossibleOutcomeError exit 2, CutoffTooSmallError exits 3, validation
failures exit 1.
"""


class CatportError(Exception):
    """Base class for simulator errors."""


class ConfigError(CatportError):
    """Invalid protocol configuration (bad parameter, inconsistent outcomes)."""


class CutoffTooSmallError(CatportError):
    """Fock-space truncation leaks more probability than the policy allows."""


class UnsupportedRepresentationError(CatportError):
    """Operation applied to a state representation it does not support."""


class ZeroNormError(CatportError):
    """State has (numerically) zero norm where a normalized object is required."""


class ImpossibleOutcomeError(CatportError):
    """Requested measurement outcome has probability below 1e-15."""


class XCorrectionFailedError(CatportError):
    """Physical X correction retained negligible weight (M+ weight < 1e-6)."""
