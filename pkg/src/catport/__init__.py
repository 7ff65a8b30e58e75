"""Simulator for continuous-variable teleportation of a cat-encoded qubit,
with exact branch and dense tensor engines, photon loss, and the sweep
harness behind the `catport` command line tool."""

from .errors import (
    CatportError,
    ConfigError,
    CutoffTooSmallError,
    ImpossibleOutcomeError,
    UnsupportedRepresentationError,
    XCorrectionFailedError,
    ZeroNormError,
)
from .protocol import (
    Outcomes,
    ProtocolConfig,
    TeleportResult,
    approximation_benchmark,
    average_fidelity,
    sample_outcomes,
    teleport,
)
from .loss import LossChannel, lossy_fidelity, lossy_run
from .experiments import (
    SweepSpec,
    find_optimal_xi,
    preset,
    run_sweep,
    write_manifest,
    write_rows,
)

__version__ = "0.1.0"

__all__ = [
    "CatportError",
    "ConfigError",
    "CutoffTooSmallError",
    "ImpossibleOutcomeError",
    "UnsupportedRepresentationError",
    "XCorrectionFailedError",
    "ZeroNormError",
    "Outcomes",
    "ProtocolConfig",
    "TeleportResult",
    "approximation_benchmark",
    "average_fidelity",
    "sample_outcomes",
    "teleport",
    "LossChannel",
    "lossy_fidelity",
    "lossy_run",
    "SweepSpec",
    "find_optimal_xi",
    "preset",
    "run_sweep",
    "write_manifest",
    "write_rows",
    "__version__",
]
