"""Barycenters of weighted Dirac measures on the model manifolds and their derivatives."""
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from dataclasses_json import dataclass_json
from loguru import logger
from scipy import linalg

from rigidity_lab.comparison import mixed_log_derivative
from rigidity_lab.errors import (ComparisonRadiusError, ConstraintViolationError, ConvergenceError,
                                 DiameterGuardError, ModelMismatchError)
from rigidity_lab.manifolds import (FD_STEP, Isometry, ModelManifold, ModelPoint, ModelTangent, TangentOperator,
                                    symmetrize)

SOLVER_TOLERANCE = 1e-10
MAX_ITERATIONS = 200
ARMIJO_CONSTANT = 1e-4
NEWTON_EIGENVALUE_FLOOR = 0.25
LINE_SEARCH_FREE_RESIDUAL = 1e-6
ORACLE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Atom:
    weight: float
    point: ModelPoint


@dataclass(frozen=True)
class WeightedDirac:
    atoms: List[Atom]

    def __post_init__(self):
        if not self.atoms:
            raise ConstraintViolationError("a weighted Dirac measure needs at least one atom")
        model = self.atoms[0].point.model
        if any(a.point.model != model for a in self.atoms):
            raise ModelMismatchError("all atoms must live on one model")
        if any(a.weight < -1e-15 or a.weight > 1 + 1e-15 for a in self.atoms):
            raise ConstraintViolationError("weights must lie in [0, 1]")
        total = sum(a.weight for a in self.atoms)
        if abs(total - 1.0) > 1e-12:
            raise ConstraintViolationError(f"weights sum to {total!r}, not 1")

    @staticmethod
    def from_arrays(model: ModelManifold, weights: Sequence[float], points: Sequence[np.ndarray]) -> 'WeightedDirac':
        return WeightedDirac([Atom(float(w), ModelPoint.projected(model, z)) for w, z in zip(weights, points)])

    @property
    def model(self) -> ModelManifold:
        return self.atoms[0].point.model

    @property
    def weights(self) -> np.ndarray:
        return np.array([a.weight for a in self.atoms])

    @property
    def points(self) -> List[np.ndarray]:
        return [a.point.coords for a in self.atoms]

    def diameter(self) -> float:
        return support_diameter(self.model, self.points)

    def pushforward(self, f: Isometry) -> 'WeightedDirac':
        return WeightedDirac([Atom(a.weight, f(a.point)) for a in self.atoms])

    def to_dict(self):
        return {"model": self.model.describe(),
                "atoms": [{"w": a.weight, "coords": a.point.coords.ravel().tolist()} for a in self.atoms]}


@dataclass
class BarycenterResult:
    point: ModelPoint
    gradient_residual: float
    hessian_min_eigenvalue: float
    iterations: int
    energy_trace: List[float] = field(default_factory=list)

    def to_dict(self):
        return {"point": self.point.to_dict(), "gradient_residual": self.gradient_residual,
                "hessian_min_eigenvalue": self.hessian_min_eigenvalue, "iterations": self.iterations}


def support_diameter(model: ModelManifold, points: Sequence[np.ndarray]) -> float:
    d = 0.0
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            d = max(d, model.dist(points[i], points[j]))
    return d


def check_guard(model: ModelManifold, points: Sequence[np.ndarray]):
    diameter = support_diameter(model, points)
    guard = model.barycenter_guard_radius
    if not diameter < guard:
        raise DiameterGuardError(diameter, guard)


# array-level core, shared with the metric-family engine

def energy_at(model: ModelManifold, weights: np.ndarray, points: Sequence[np.ndarray], x: np.ndarray) -> float:
    return 0.5 * sum(w * model.dist(x, z) ** 2 for w, z in zip(weights, points))


def gradient_at(model: ModelManifold, weights: np.ndarray, points: Sequence[np.ndarray], x: np.ndarray) -> np.ndarray:
    """-sum w_i log_x z_i in frame coordinates at x."""
    total = np.zeros(model.dimension)
    for w, z in zip(weights, points):
        total -= w * model.to_frame(x, model.log(x, z))
    return total


def hessian_at(model: ModelManifold, weights: np.ndarray, points: Sequence[np.ndarray], x: np.ndarray) -> np.ndarray:
    total = np.zeros((model.dimension, model.dimension))
    for w, z in zip(weights, points):
        if model.dist(x, z) >= model.comparison_radius:
            raise ComparisonRadiusError(f"atom at distance {model.dist(x, z):.6g} beyond the comparison radius")
        total += w * model.half_squared_hessian(x, z)
    return symmetrize(total)


def solve_at(model: ModelManifold, weights: np.ndarray, points: Sequence[np.ndarray],
             tol: float = SOLVER_TOLERANCE, max_iterations: int = MAX_ITERATIONS,
             guard: bool = True) -> BarycenterResult:
    weights = np.asarray(weights, dtype=float)
    if guard:
        check_guard(model, points)
    x = np.array(points[int(np.argmax(weights))], dtype=float)
    energy = energy_at(model, weights, points, x)
    trace = [energy]
    iterations = 0
    g = gradient_at(model, weights, points, x)
    residual = float(np.linalg.norm(g))
    while residual >= tol and iterations < max_iterations:
        q = hessian_at(model, weights, points, x)
        newton = float(linalg.eigvalsh(q)[0]) >= NEWTON_EIGENVALUE_FLOOR
        step = -linalg.solve(q, g, assume_a='sym') if newton else -g
        t = 1.0
        if not (newton and residual < LINE_SEARCH_FREE_RESIDUAL):
            slope = float(np.dot(g, step))
            while t > 1e-12:
                candidate = model.exp(x, model.from_frame(x, t * step))
                if energy_at(model, weights, points, candidate) <= energy + ARMIJO_CONSTANT * t * slope:
                    break
                t *= 0.5
        x = model.project_point(model.exp(x, model.from_frame(x, t * step)))
        energy = energy_at(model, weights, points, x)
        trace.append(energy)
        iterations += 1
        g = gradient_at(model, weights, points, x)
        residual = float(np.linalg.norm(g))
        logger.debug(f"barycenter iteration {iterations}: residual={residual:.3e} step={t:.3g} newton={newton}")
    if residual >= tol:
        raise ConvergenceError(f"barycenter solver did not converge in {max_iterations} iterations", residual)
    q = hessian_at(model, weights, points, x)
    polished = model.project_point(model.exp(x, model.from_frame(x, -linalg.solve(q, g, assume_a='sym'))))
    g_polished = gradient_at(model, weights, points, polished)
    if np.linalg.norm(g_polished) <= residual:
        x, g = polished, g_polished
        residual = float(np.linalg.norm(g))
        q = hessian_at(model, weights, points, x)
    return BarycenterResult(point=ModelPoint.projected(model, x), gradient_residual=residual,
                            hessian_min_eigenvalue=float(linalg.eigvalsh(q)[0]), iterations=iterations,
                            energy_trace=trace)


# public operations

def energy(mu: WeightedDirac, x: ModelPoint) -> float:
    if x.model != mu.model:
        raise ModelMismatchError("point and measure live on different models")
    return energy_at(mu.model, mu.weights, mu.points, x.coords)


def gradient(mu: WeightedDirac, x: ModelPoint) -> ModelTangent:
    if x.model != mu.model:
        raise ModelMismatchError("point and measure live on different models")
    return ModelTangent.from_frame(x, gradient_at(mu.model, mu.weights, mu.points, x.coords))


def hessian_Q(mu: WeightedDirac, x: ModelPoint) -> TangentOperator:
    if x.model != mu.model:
        raise ModelMismatchError("point and measure live on different models")
    return TangentOperator(x, x, hessian_at(mu.model, mu.weights, mu.points, x.coords))


def solve(mu: WeightedDirac, tol: float = SOLVER_TOLERANCE, max_iterations: int = MAX_ITERATIONS) -> BarycenterResult:
    return solve_at(mu.model, mu.weights, mu.points, tol, max_iterations)


def d_bar_d_weight(mu: WeightedDirac, i: int, result: Optional[BarycenterResult] = None) -> ModelTangent:
    """Derivative of the barycenter along the i-th weight: Q^-1 log_bar(z_i)."""
    result = result or solve(mu)
    model = mu.model
    x = result.point.coords
    q = hessian_at(model, mu.weights, mu.points, x)
    direction = model.to_frame(x, model.log(x, mu.points[i]))
    return ModelTangent.from_frame(result.point, linalg.solve(q, direction, assume_a='sym'))


def d_bar_d_point(mu: WeightedDirac, i: int, result: Optional[BarycenterResult] = None,
                  step: float = FD_STEP) -> TangentOperator:
    """Derivative of the barycenter along the i-th atom, a map T_{z_i} -> T_bar."""
    result = result or solve(mu)
    model = mu.model
    x = result.point.coords
    q = hessian_at(model, mu.weights, mu.points, x)
    m = mixed_log_derivative(model, x, mu.points[i], step)
    return TangentOperator(mu.atoms[i].point, result.point, -mu.weights[i] * linalg.solve(q, m, assume_a='sym'))


def affine_equivariance_check(mu: WeightedDirac, f: Isometry) -> float:
    bar = solve(mu).point
    pushed = solve(mu.pushforward(f)).point
    return mu.model.dist(f(bar).coords, pushed.coords)


@dataclass_json
@dataclass
class ContainmentCheck:
    radius: float
    barycenter_distance: float
    holds: bool = field(init=False)

    def __post_init__(self):
        self.holds = self.barycenter_distance < 2 * self.radius + 1e-12


def containment_check(mu: WeightedDirac, center: ModelPoint, radius: float) -> ContainmentCheck:
    """supp(mu) inside B_radius(center) puts the barycenter inside B_2radius(center)."""
    model = mu.model
    if any(model.dist(center.coords, z) >= radius for z in mu.points):
        raise ConstraintViolationError(f"support is not contained in the ball of radius {radius}")
    bar = solve(mu).point
    return ContainmentCheck(radius, model.dist(center.coords, bar.coords))


@dataclass_json
@dataclass
class HessianBounds:
    diameter: float
    curvature_scale: float
    q_defect: float
    q_defect_bound: float
    q_min_eigenvalue: float
    q_inverse_norm: float
    point_derivative_defect: float
    point_derivative_bound: float
    holds: bool = field(init=False)

    def __post_init__(self):
        self.holds = (self.q_defect <= self.q_defect_bound + 1e-12
                      and self.q_min_eigenvalue >= 0.75 - 1e-12
                      and self.q_inverse_norm <= 4.0 / 3.0 + 1e-12
                      and self.point_derivative_defect <= self.point_derivative_bound + 1e-7)


def hessian_bounds(mu: WeightedDirac, result: Optional[BarycenterResult] = None) -> HessianBounds:
    """Hessian bounds at the barycenter and the worst per-atom derivative defect.

    The per-atom defect is ``|| D_{z_i} bar - Q^-1 w_i transport(z_i -> bar) || / w_i``, bounded by
    ``16 max{a^2, b^2} diam^2``.
    """
    result = result or solve(mu)
    model = mu.model
    x = result.point.coords
    r = mu.diameter()
    c2 = model.max_curvature_scale ** 2
    q = hessian_at(model, mu.weights, mu.points, x)
    eigenvalues = linalg.eigvalsh(q)
    q_inv = linalg.inv(q)
    worst = 0.0
    for i, (w, z) in enumerate(zip(mu.weights, mu.points)):
        if w <= 0:
            continue
        derivative = d_bar_d_point(mu, i, result).matrix
        transported = q_inv @ model.transport_matrix(z, x)
        worst = max(worst, float(np.linalg.norm(derivative - w * transported, 2)) / w)
    return HessianBounds(diameter=r, curvature_scale=math.sqrt(c2),
                          q_defect=float(np.linalg.norm(q - np.eye(model.dimension), 2)),
                          q_defect_bound=2.0 * c2 * r * r,
                          q_min_eigenvalue=float(eigenvalues[0]),
                          q_inverse_norm=float(1.0 / eigenvalues[0]),
                          point_derivative_defect=worst,
                          point_derivative_bound=16.0 * c2 * r * r)


def random_measure(model: ModelManifold, rng: np.random.Generator, atoms: int, radius: float,
                   center: Optional[np.ndarray] = None) -> WeightedDirac:
    """Random measure with support inside the ball of the given radius (diameter below 2 radius)."""
    center = model.random_point(rng, 1.0) if center is None else center
    points = model.sample_ball(rng, center, radius, atoms)
    weights = rng.dirichlet(np.ones(atoms))
    return WeightedDirac.from_arrays(model, weights, points)


def resolve_weight_oracle(mu: WeightedDirac, i: int, result: Optional[BarycenterResult] = None,
                          step: float = 1e-5, tol: float = ORACLE_TOLERANCE) -> np.ndarray:
    """Frame derivative of the barycenter along w_i (other weights fixed) by re-solving at w_i +- step."""
    result = result or solve(mu)
    model = mu.model
    x = result.point.coords
    moved = []
    for sign in (1.0, -1.0):
        weights = mu.weights.copy()
        weights[i] += sign * step
        moved.append(solve_at(model, weights, mu.points, tol).point.coords)
    return model.to_frame(x, model.log(x, moved[0]) - model.log(x, moved[1])) / (2 * step)


def resolve_point_oracle(mu: WeightedDirac, i: int, direction: np.ndarray, result: Optional[BarycenterResult] = None,
                         step: float = 1e-5, tol: float = ORACLE_TOLERANCE) -> np.ndarray:
    """Frame derivative of the barycenter as z_i moves along exp_{z_i}(t v), v given in the frame at z_i."""
    result = result or solve(mu)
    model = mu.model
    x = result.point.coords
    z = mu.points[i]
    moved = []
    for sign in (1.0, -1.0):
        points = list(mu.points)
        points[i] = model.exp(z, model.from_frame(z, sign * step * np.asarray(direction, dtype=float)))
        moved.append(solve_at(model, mu.weights, points, tol).point.coords)
    return model.to_frame(x, model.log(x, moved[0]) - model.log(x, moved[1])) / (2 * step)
