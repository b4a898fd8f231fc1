"""Curvature-comparison estimates for the squared distance function.

Both checks work in orthonormal frames:

* the half-squared Hessian ``grad d (x) grad d + d * Hess d`` at x is close to the identity;
* the mixed derivative ``D_z(-log_x z)``, transported back to z, is close to ``-I``.
"""
from dataclasses import dataclass, field

import numpy as np
from dataclasses_json import dataclass_json

from rigidity_lab.manifolds import FD_STEP, ModelManifold, ModelPoint, TangentOperator


@dataclass_json
@dataclass
class ComparisonCheck:
    distance: float
    defect: float
    bound: float
    slack: float = 1e-12
    holds: bool = field(init=False)

    def __post_init__(self):
        self.holds = self.defect <= self.bound * (1 + 1e-9) + self.slack


def mixed_log_derivative(model: ModelManifold, x: np.ndarray, z: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    """D_z(-log_x z) as a matrix from the frame at z to the frame at x, by central differences."""
    columns = []
    for e in model.frame(z):
        forward = model.log(x, model.exp(z, step * e))
        backward = model.log(x, model.exp(z, -step * e))
        columns.append(-model.to_frame(x, forward - backward) / (2 * step))
    return np.column_stack(columns)


def mixed_log_operator(x: ModelPoint, z: ModelPoint, step: float = FD_STEP) -> TangentOperator:
    return TangentOperator(z, x, mixed_log_derivative(x.model, x.coords, z.coords, step))


def half_squared_hessian_check(model: ModelManifold, x: np.ndarray, z: np.ndarray) -> ComparisonCheck:
    t = model.dist(x, z)
    a = model.lower_curvature_bound
    b = model.upper_curvature_bound
    h = model.half_squared_hessian(x, z)
    defect = float(np.linalg.norm(h - np.eye(model.dimension), 2))
    return ComparisonCheck(t, defect, max(a * a / 3.0, b * b / 2.0) * t * t)


def mixed_derivative_check(model: ModelManifold, x: np.ndarray, z: np.ndarray,
                           step: float = FD_STEP) -> ComparisonCheck:
    t = model.dist(x, z)
    m = mixed_log_derivative(model, x, z, step)
    back = model.transport_matrix(x, z)
    defect = float(np.linalg.norm(back @ m + np.eye(model.dimension), 2))
    return ComparisonCheck(t, defect, 2.0 * model.max_curvature_scale ** 2 * t * t, slack=1e-7)
