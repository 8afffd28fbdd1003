"""Exception hierarchy for the library.

Everything raised on a violated contract derives from RdmError, so callers
can fence off library failures with a single except clause.
"""


class RdmError(Exception):
    """Base class for all library-specific errors."""


class ZeroNormError(RdmError):
    """State has (numerically) zero norm and cannot be normalized."""


class GridMismatchError(RdmError):
    """Operands live on different grids."""


class BoxTooNarrowError(RdmError):
    """Box well is too narrow for the grid resolution."""


class BoxOutOfDomainError(RdmError):
    """Box interval is not contained in the grid domain."""


class SigmaTooSmallError(RdmError):
    """Gaussian width is below the grid resolution limit."""


class TailTruncationError(RdmError):
    """Packet tail is not negligible at the domain edge."""


class NonpositiveSofteningError(RdmError):
    """Soft-core regularization length must be positive."""


class TimestepTooLargeError(RdmError):
    """Time step violates the spectral anti-aliasing guard."""


class InvalidDurationError(RdmError):
    """Evolution time parameters are inconsistent."""


class EmptyEvolutionError(RdmError):
    """Evolution record contains no snapshots."""


class MisalignedPartitionError(RdmError):
    """Cell partition is not commensurate with the grid or the cadence."""


class CadenceMismatchError(RdmError):
    """Trajectories do not share a common sampling cadence."""


class AllMaskedError(RdmError):
    """No grid point survives the density floor."""


class TooFewSnapshotsError(RdmError):
    """Operation needs more recorded snapshots."""


class MaskedReferenceError(RdmError):
    """Phase reference point lies in a masked region."""


class OverlappingBoxesError(RdmError):
    """Scenario boxes overlap or violate the minimum gap."""


class IncompleteBranchBasisError(RdmError):
    """Supplied branch states do not span the decomposed state."""


class EmptyRegionError(RdmError):
    """Tracking region carries (numerically) no probability."""


class MissingArtifactError(RdmError):
    """Expected run artifact is absent from the run directory."""


class ConfigError(RdmError):
    """Base class for run-configuration errors."""


class ParseError(ConfigError):
    """Configuration text is malformed or contains unknown keys."""


class ValidationError(ConfigError):
    """Configuration value violates a field constraint."""
