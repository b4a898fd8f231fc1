"""Barycenters along one-parameter families of metrics and measures.

A family is realized on the exponential chart at the origin of a two-dimensional model whose
curvature scale moves with ``s``: the point with chart coordinates ``u`` is ``exp_o((u, 0))``
in the model of radius ``R(s) = R0 * (1 + c * s)``. Weights and chart points move linearly in s.
Derivatives are returned both in chart coordinates and in the frame at the barycenter.
"""
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from dataclasses_json import dataclass_json
from scipy import linalg

from rigidity_lab.barycenter import gradient_at, hessian_at, solve_at, support_diameter
from rigidity_lab.comparison import mixed_log_derivative
from rigidity_lab.errors import ConstraintViolationError, DiameterGuardError
from rigidity_lab.manifolds import FD_STEP, EuclideanSpace, HyperbolicSpace, ModelManifold, Sphere

FAMILY_KINDS = ("flat", "sphere", "hyperbolic")


@dataclass
class MetricFamilyInstance:
    kind: str
    radius0: float
    radius_rate: float
    weights0: np.ndarray
    weight_rates: np.ndarray
    points0: np.ndarray
    point_rates: np.ndarray

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise ConstraintViolationError(f"unknown family kind {self.kind}; expected one of {FAMILY_KINDS}")
        self.weights0 = np.asarray(self.weights0, dtype=float)
        self.weight_rates = np.asarray(self.weight_rates, dtype=float)
        self.points0 = np.asarray(self.points0, dtype=float).reshape(-1, 2)
        self.point_rates = np.asarray(self.point_rates, dtype=float).reshape(-1, 2)
        if abs(self.weights0.sum() - 1.0) > 1e-12 or abs(self.weight_rates.sum()) > 1e-12:
            raise ConstraintViolationError("weight paths must sum to 1 for every s")
        if not (len(self.weights0) == len(self.weight_rates) == len(self.points0) == len(self.point_rates)):
            raise ConstraintViolationError("weight and point paths need one entry per atom")

    # paths

    def radius(self, s: float) -> float:
        return self.radius0 * (1.0 + self.radius_rate * s)

    def signed_curvature(self, s: float) -> float:
        if self.kind == "flat":
            return 0.0
        k = 1.0 / self.radius(s) ** 2
        return k if self.kind == "sphere" else -k

    def curvature_rate(self, s: float) -> float:
        """d/ds of the signed sectional curvature."""
        if self.kind == "flat":
            return 0.0
        r = self.radius(s)
        rate = -2.0 * self.radius0 * self.radius_rate / r ** 3
        return rate if self.kind == "sphere" else -rate

    def weights(self, s: float) -> np.ndarray:
        return self.weights0 + s * self.weight_rates

    def chart_points(self, s: float) -> np.ndarray:
        return self.points0 + s * self.point_rates

    def weight_derivative(self, s: float, step: Optional[float] = None) -> np.ndarray:
        if step is None:
            return self.weight_rates.copy()
        return (self.weights(s + step) - self.weights(s - step)) / (2 * step)

    def point_derivative(self, s: float, step: Optional[float] = None) -> np.ndarray:
        if step is None:
            return self.point_rates.copy()
        return (self.chart_points(s + step) - self.chart_points(s - step)) / (2 * step)

    def model(self, s: float) -> ModelManifold:
        if self.kind == "flat":
            return EuclideanSpace(2)
        if self.kind == "sphere":
            return Sphere(2, self.radius(s))
        return HyperbolicSpace(2, 1.0 / self.radius(s))

    # chart

    def embed(self, s: float, u: np.ndarray) -> np.ndarray:
        model = self.model(s)
        if self.kind == "flat":
            return np.array(u, dtype=float)
        return model.exp(model.origin(), np.array([u[0], u[1], 0.0]))

    def chart(self, s: float, x: np.ndarray) -> np.ndarray:
        model = self.model(s)
        if self.kind == "flat":
            return np.array(x, dtype=float)
        return model.log(model.origin(), x)[:2]

    def jacobian(self, s: float, u: np.ndarray) -> np.ndarray:
        """Differential of embed at u as an ambient matrix (3 x 2, or 2 x 2 when flat)."""
        if self.kind == "flat":
            return np.eye(2)
        radius = self.radius(s)
        rho = float(np.linalg.norm(u))
        if rho < 1e-12:
            return np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
        e = u / rho
        e_perp = np.array([-e[1], e[0]])
        theta = rho / radius
        if self.kind == "sphere":
            radial = np.array([math.cos(theta) * e[0], math.cos(theta) * e[1], -math.sin(theta)])
            stretch = radius * math.sin(theta) / rho
        else:
            radial = np.array([math.cosh(theta) * e[0], math.cosh(theta) * e[1], math.sinh(theta)])
            stretch = radius * math.sinh(theta) / rho
        tangential = np.array([e_perp[0], e_perp[1], 0.0])
        return np.outer(radial, e) + stretch * np.outer(tangential, e_perp)

    def frame_jacobian(self, s: float, u: np.ndarray) -> np.ndarray:
        """Differential of embed at u from chart coordinates to the model frame at embed(u)."""
        model = self.model(s)
        x = self.embed(s, u)
        j = self.jacobian(s, u)
        return np.column_stack([model.to_frame(x, j[:, k]) for k in range(2)])

    def guard_radius(self, s: float) -> float:
        return self.model(s).barycenter_guard_radius

    def diameter(self, s: float) -> float:
        model = self.model(s)
        return support_diameter(model, [self.embed(s, u) for u in self.chart_points(s)])

    def to_dict(self):
        return {"kind": self.kind, "radius0": self.radius0, "radius_rate": self.radius_rate,
                "weights0": self.weights0.tolist(), "weight_rates": self.weight_rates.tolist(),
                "points0": self.points0.tolist(), "point_rates": self.point_rates.tolist()}


@dataclass
class FamilyState:
    """The barycenter and the operators of the family at one parameter value."""
    s: float
    model: ModelManifold
    weights: np.ndarray
    atoms: List[np.ndarray]
    chart_atoms: np.ndarray
    point: np.ndarray
    chart_point: np.ndarray
    q: np.ndarray
    jacobian: np.ndarray


def family_state(instance: MetricFamilyInstance, s: float) -> FamilyState:
    model = instance.model(s)
    weights = instance.weights(s)
    chart_atoms = instance.chart_points(s)
    atoms = [instance.embed(s, u) for u in chart_atoms]
    diameter = support_diameter(model, atoms)
    if not diameter < model.barycenter_guard_radius:
        raise DiameterGuardError(diameter, model.barycenter_guard_radius, f"family atoms at s={s:.6g}")
    result = solve_at(model, weights, atoms)
    x = result.point.coords
    u = instance.chart(s, x)
    return FamilyState(s=s, model=model, weights=weights, atoms=atoms, chart_atoms=chart_atoms, point=x,
                       chart_point=u, q=hessian_at(model, weights, atoms, x),
                       jacobian=instance.frame_jacobian(s, u))


def pulled_back_gradient(instance: MetricFamilyInstance, s: float, u: np.ndarray, weights: np.ndarray,
                         chart_atoms: np.ndarray) -> np.ndarray:
    """The barycenter gradient of the s-metric, pulled back to chart coordinates at u."""
    model = instance.model(s)
    x = instance.embed(s, u)
    atoms = [instance.embed(s, z) for z in chart_atoms]
    g = gradient_at(model, weights, atoms, x)
    return linalg.solve(instance.frame_jacobian(s, u), g)


@dataclass
class BarycenterDerivative:
    chart: np.ndarray
    frame: np.ndarray

    def to_dict(self):
        return {"chart": self.chart.tolist(), "frame": self.frame.tolist()}


def _derivative(state: FamilyState, frame_vector: np.ndarray) -> BarycenterDerivative:
    return BarycenterDerivative(chart=linalg.solve(state.jacobian, frame_vector), frame=frame_vector)


def metric_term(instance: MetricFamilyInstance, state: FamilyState, step: float = FD_STEP) -> np.ndarray:
    s = state.s
    forward = pulled_back_gradient(instance, s + step, state.chart_point, state.weights, state.chart_atoms)
    backward = pulled_back_gradient(instance, s - step, state.chart_point, state.weights, state.chart_atoms)
    d_gradient = (forward - backward) / (2 * step)
    return -linalg.solve(state.q, state.jacobian @ d_gradient, assume_a='sym')


def atom_velocities(instance: MetricFamilyInstance, state: FamilyState) -> List[np.ndarray]:
    """Velocities of the atoms in the frames at the atoms."""
    rates = instance.point_derivative(state.s)
    return [instance.frame_jacobian(state.s, u) @ r for u, r in zip(state.chart_atoms, rates)]


def measure_term(instance: MetricFamilyInstance, state: FamilyState, step: float = FD_STEP) -> np.ndarray:
    model = state.model
    x = state.point
    total = np.zeros(2)
    for w, w_rate, z, z_dot in zip(state.weights, instance.weight_derivative(state.s), state.atoms,
                                   atom_velocities(instance, state)):
        total += w_rate * model.to_frame(x, model.log(x, z))
        total -= w * mixed_log_derivative(model, x, z, step) @ z_dot
    return linalg.solve(state.q, total, assume_a='sym')


def d_bar_d_metric(instance: MetricFamilyInstance, s0: float = 0.0, step: float = FD_STEP) -> BarycenterDerivative:
    """Derivative of the barycenter in s with weights and chart atoms frozen at s0."""
    state = family_state(instance, s0)
    return _derivative(state, metric_term(instance, state, step))


@dataclass_json
@dataclass
class BoundCertificate:
    lhs: float
    budget: float
    curvature_scale: float
    path_speed: float
    metric_speed: float
    diameter: float
    holds: bool = field(init=False)

    def __post_init__(self):
        self.holds = self.lhs <= self.budget + 1e-9


@dataclass
class TotalDerivative:
    derivative: BarycenterDerivative
    certificate: BoundCertificate

    def to_dict(self):
        return {"derivative": self.derivative.to_dict(), "certificate": self.certificate.to_dict()}


def metric_speed(instance: MetricFamilyInstance, s: float) -> float:
    """Estimate of the C^{1,2} norm of the s-derivative of the metric in exponential coordinates."""
    rho = float(np.max(np.linalg.norm(instance.chart_points(s), axis=1), initial=0.0))
    return abs(instance.curvature_rate(s)) * (1.0 + rho * rho)


def d_bar_total(instance: MetricFamilyInstance, s0: float = 0.0, step: float = FD_STEP) -> TotalDerivative:
    """Total derivative of the barycenter with the transported-velocity bound certificate.

    The budget is the sum of the metric and measure estimates:
    ``(32 + 16 max{1, a^2, b^2}) * L * r`` with ``L = max(max |z_i'|, sum |w_i'|) + |g'|``.
    """
    state = family_state(instance, s0)
    model = state.model
    velocity = metric_term(instance, state, step) + measure_term(instance, state, step)
    transported = np.zeros(2)
    for w, z, z_dot in zip(state.weights, state.atoms, atom_velocities(instance, state)):
        transported += w * (model.transport_matrix(z, state.point) @ z_dot)
    lhs = float(np.linalg.norm(velocity - linalg.solve(state.q, transported, assume_a='sym')))
    speeds = [float(np.linalg.norm(v)) for v in atom_velocities(instance, state)]
    g_speed = metric_speed(instance, s0)
    path_speed = max(max(speeds), float(np.sum(np.abs(instance.weight_derivative(s0))))) + g_speed
    r = support_diameter(model, state.atoms)
    c2 = model.max_curvature_scale ** 2
    budget = (32.0 + 16.0 * max(1.0, c2)) * path_speed * r
    certificate = BoundCertificate(lhs=lhs, budget=budget, curvature_scale=math.sqrt(c2), path_speed=path_speed,
                                   metric_speed=g_speed, diameter=r)
    return TotalDerivative(_derivative(state, velocity), certificate)


def resolve_derivative(instance: MetricFamilyInstance, s0: float = 0.0, step: float = 1e-4,
                       freeze_measure: bool = False) -> np.ndarray:
    """Chart derivative of the barycenter by re-solving at s0 +- step."""
    def chart_barycenter(s: float) -> np.ndarray:
        frozen = s0 if freeze_measure else s
        model = instance.model(s)
        atoms = [instance.embed(s, u) for u in instance.chart_points(frozen)]
        result = solve_at(model, instance.weights(frozen), atoms)
        return instance.chart(s, result.point.coords)

    return (chart_barycenter(s0 + step) - chart_barycenter(s0 - step)) / (2 * step)


@dataclass
class AffineLeafField:
    """Leaves s -> u + s * (offset + linear @ u) of a foliation of the chart."""
    offset: np.ndarray
    linear: np.ndarray

    def velocity(self, u: np.ndarray) -> np.ndarray:
        return self.offset + self.linear @ u


def leaf_instance(kind: str, radius0: float, radius_rate: float, weights0: np.ndarray, weight_rates: np.ndarray,
                  chart_points: np.ndarray, field_: AffineLeafField) -> MetricFamilyInstance:
    chart_points = np.asarray(chart_points, dtype=float)
    rates = np.array([field_.velocity(u) for u in chart_points])
    return MetricFamilyInstance(kind, radius0, radius_rate, weights0, weight_rates, chart_points, rates)


def graph_tilt(instance: MetricFamilyInstance, field_: AffineLeafField, s0: float = 0.0) -> float:
    """Angle between the tangent of s -> (s, bar(s)) and the leaf direction through the barycenter."""
    total = d_bar_total(instance, s0)
    state = family_state(instance, s0)
    leaf = state.jacobian @ field_.velocity(state.chart_point)
    a = np.concatenate([[1.0], total.derivative.frame])
    b = np.concatenate([[1.0], leaf])
    cosine = abs(float(np.dot(a, b))) / (np.linalg.norm(a) * np.linalg.norm(b))
    return math.acos(min(1.0, cosine))


def random_instance(kind: str, rng: np.random.Generator, radius: float, atoms: int = 3,
                    center: Optional[np.ndarray] = None, radius0: float = 1.0,
                    vary_metric: bool = True, vary_weights: bool = True) -> MetricFamilyInstance:
    """Random family whose atoms at s=0 lie in a chart ball of the given radius."""
    center = rng.uniform(-0.5, 0.5, size=2) if center is None else np.asarray(center, dtype=float)
    angles = rng.uniform(0, 2 * math.pi, size=atoms)
    radii = radius * np.sqrt(rng.uniform(size=atoms))
    points = center + np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
    weights = rng.dirichlet(np.ones(atoms))
    rates = rng.uniform(-0.1, 0.1, size=atoms) if vary_weights else np.zeros(atoms)
    rates -= rates.mean()
    return MetricFamilyInstance(kind=kind, radius0=radius0,
                                radius_rate=float(rng.uniform(-0.2, 0.2)) if vary_metric else 0.0,
                                weights0=weights, weight_rates=rates, points0=points,
                                point_rates=rng.normal(size=(atoms, 2)))


@dataclass_json
@dataclass
class TiltTrendRow:
    r: float
    mean_tilt: float
    max_tilt: float


def graph_tilt_trend(levels: Sequence[float], rng: np.random.Generator, instances: int = 20,
                     kind: str = "hyperbolic") -> List[TiltTrendRow]:
    """Graph tilt of the same atom configurations shrunk to diameter at most r, for each r in levels."""
    shapes = []
    for _ in range(instances):
        angles = rng.uniform(0, 2 * math.pi, size=3)
        radii = np.sqrt(rng.uniform(size=3))
        unit_points = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
        field_ = AffineLeafField(rng.normal(size=2), 0.5 * rng.normal(size=(2, 2)))
        shapes.append((unit_points, rng.dirichlet(np.ones(3)), field_, float(rng.uniform(-0.2, 0.2))))
    rows = []
    for r in levels:
        tilts = [graph_tilt(leaf_instance(kind, 1.0, rate, weights, np.zeros(3), 0.5 * r * unit_points, field_),
                            field_)
                 for unit_points, weights, field_, rate in shapes]
        rows.append(TiltTrendRow(float(r), float(np.mean(tilts)), float(np.max(tilts))))
    return rows
