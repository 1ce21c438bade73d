"""Exception types shared across the simulator."""


class CfBeamError(Exception):
    """Base class for all simulator errors."""


class InvalidGeometry(CfBeamError):
    """Non-physical geometry input (zero antennas, non-positive distance, ...)."""


class ConfigConflict(CfBeamError):
    """Configuration values that are individually valid but mutually impossible."""


class SingularEffectiveChannel(CfBeamError):
    """Effective channel Gram matrix too ill-conditioned for a ZF inverse."""


class DegenerateColumn(CfBeamError):
    """A composed precoder column collapsed to zero (user unreachable)."""


class BCCExhausted(CfBeamError):
    """A user's codebook log (or the combination set) emptied mid-search."""


class OracleBudgetExceeded(CfBeamError):
    """Exhaustive enumeration would exceed the configured budget."""


class InvalidAssignment(CfBeamError):
    """Beam index outside [0, B) or wrong assignment dimensions."""


class DataError(CfBeamError):
    """Malformed dataset / dump rows."""
