from typing import Optional


class RigidityLabError(Exception):
    pass


class ModelMismatchError(RigidityLabError):
    pass


class ConstraintViolationError(RigidityLabError):
    pass


class DegenerateInputError(RigidityLabError):
    pass


class CutLocusError(RigidityLabError):
    pass


class ComparisonRadiusError(RigidityLabError):
    pass


class DiameterGuardError(RigidityLabError):
    def __init__(self, diameter: float, guard: float, context: str = "atoms"):
        super().__init__(f"diameter of {context} {diameter:.6g} violates guard radius {guard:.6g}")
        self.diameter = diameter
        self.guard = guard


class ConvergenceError(RigidityLabError):
    def __init__(self, message: str, residual: Optional[float] = None):
        super().__init__(message if residual is None else f"{message} (residual {residual:.3e})")
        self.residual = residual


class GroupTypeError(RigidityLabError):
    pass


class MembershipError(RigidityLabError):
    pass


class ConfigError(RigidityLabError):
    pass
