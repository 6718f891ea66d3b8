"""Exception hierarchy.

Every error carries a ``category`` used by the CLI to pick an exit code:
``config`` (2), ``model`` (3) and ``numerical`` (4).
"""


class QFPError(Exception):
    category = "numerical"


class ConfigError(QFPError):
    category = "config"


class SchemaMismatch(QFPError):
    category = "config"


class ModelError(QFPError):
    category = "model"


class LindbladViolation(ModelError):
    pass


class NegativeParameter(ModelError):
    pass


class DegenerateDiffusion(ModelError):
    pass


class NoEquilibrium(ModelError):
    """Raised for unconfined parameters (gamma == 0 or omega0 == 0)."""


class HasEquilibrium(ModelError):
    pass


class ConfinedCase(ModelError):
    """Raised when a dispersion quantity is requested for confined parameters."""


class SingularTime(QFPError):
    pass


class SupportOverflow(QFPError):
    pass


class GridMismatch(QFPError):
    pass


class DomainViolation(QFPError):
    pass


class MassMismatch(QFPError):
    pass


class InfiniteEntropy(QFPError):
    pass


class StabilityViolation(QFPError):
    pass


class RangeOverflow(QFPError):
    """A quantity left the floating-point range (e.g. pull-back covariance at large t)."""


EXIT_CODES = {"config": 2, "model": 3, "numerical": 4}
