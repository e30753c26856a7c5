"""Exception types shared across the package."""


class CrfganError(Exception):
    pass


class ShapeError(CrfganError, ValueError):
    """Operands have incompatible shapes; message carries both shapes."""


class ConfigError(CrfganError, ValueError):
    """Invalid architecture/run configuration."""


class DomainError(CrfganError, ValueError):
    """Input value outside the mathematical domain of an operation."""


class DegenerateBatchError(CrfganError, ValueError):
    """Normalization over a single element in training mode."""


class NonFiniteError(CrfganError, FloatingPointError):
    """An op produced NaN/Inf from finite inputs."""


class NumericalError(CrfganError, RuntimeError):
    """An iterative numeric routine failed to converge or lost validity."""


class CheckpointError(CrfganError, RuntimeError):
    """Checkpoint file missing, corrupt, or incompatible."""


class DataError(CrfganError, ValueError):
    """Malformed input data file."""


class StudyError(CrfganError):
    """Base for observer-study service failures."""


class NotFoundError(StudyError, KeyError):
    """Unknown study/session/pair identifier."""


class ConflictError(StudyError, RuntimeError):
    """Operation conflicts with existing state (double vote, dup session)."""


class ExpiredError(StudyError, RuntimeError):
    """Session passed its single-sitting deadline."""


class ValidationError(StudyError, ValueError):
    """Request payload violates the study protocol."""
