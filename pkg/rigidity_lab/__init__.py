__version__ = '0.1.0'

from .errors import (
    RigidityLabError,
    ComparisonRadiusError,
    ConfigError,
    ConstraintViolationError,
    ConvergenceError,
    CutLocusError,
    DegenerateInputError,
    DiameterGuardError,
    GroupTypeError,
    MembershipError,
    ModelMismatchError
)
