"""The equivariant map f~ over the unit tangent bundle of H2 for a perturbed genus-2 boundary action.

A unit vector at x is identified with the endpoint of its geodesic ray. f~(x, xi) is the
barycenter, in the circle of unit vectors at x, of the atoms
xi_j = rho0(gamma_j) rho(gamma_j^-1) xi weighted by the partition of unity at x.
"""
import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np
from dataclasses_json import dataclass_json
from loguru import logger
from scipy import linalg
from tqdm import tqdm

from rigidity_lab.barycenter import WeightedDirac, d_bar_d_point, d_bar_d_weight, solve
from rigidity_lab.circle import CircleMap, FiniteAction, circle_distance, trig_homeomorphism, unwrap_near
from rigidity_lab.errors import DiameterGuardError, ModelMismatchError
from rigidity_lab.fuchsian import H2, ChartTerm, FuchsianLattice, Partition
from rigidity_lab.lie import boundary_angle_action
from rigidity_lab.manifolds import EuclideanSpace, minkowski, mobius_on_hyperboloid

TWO_PI = 2 * math.pi
FIBER_GUARD = 0.5 * math.pi
FIBER = EuclideanSpace(1)
LORENTZ = np.diag([1.0, 1.0, -1.0])


def ideal_vector(psi: float) -> np.ndarray:
    return np.array([math.cos(psi), math.sin(psi), 1.0])


def busemann(z: np.ndarray, psi: float) -> float:
    """Busemann function of the ideal point psi, zero at o."""
    return math.log(-minkowski(z, ideal_vector(psi)))


def direction_to_ideal_point(z: np.ndarray, psi: float) -> np.ndarray:
    """The unit tangent vector at z pointing at psi, minus the gradient of the Busemann function."""
    ell = ideal_vector(psi)
    return ell / (-minkowski(z, ell)) - z


def fiber_angles(z: np.ndarray, psis) -> np.ndarray:
    """Angles, in the frame at z, of the unit vectors pointing at the given ideal points."""
    psis = np.atleast_1d(np.asarray(psis, dtype=float))
    ell = np.column_stack([np.cos(psis), np.sin(psis), np.ones_like(psis)])
    scale = -(ell @ LORENTZ @ z)
    v = ell / scale[:, None] - z
    coords = v @ LORENTZ @ H2.frame(z).T
    return np.mod(np.arctan2(coords[:, 1], coords[:, 0]), TWO_PI)


def fiber_angle(z: np.ndarray, psi: float) -> float:
    return float(fiber_angles(z, [psi])[0])


def endpoint_of(z: np.ndarray, angle: float) -> float:
    u = H2.from_frame(z, np.array([math.cos(angle), math.sin(angle)]))
    ell = z + u
    return float(math.atan2(ell[1], ell[0]) % TWO_PI)


@dataclass(frozen=True, eq=False)
class SuspensionPoint:
    base: np.ndarray
    fiber_angle: float
    endpoint: float

    def to_dict(self):
        return {"base": self.base.tolist(), "fiber_angle": self.fiber_angle, "endpoint": self.endpoint}


@dataclass
class FiberMeasure:
    terms: List[ChartTerm]
    weights: np.ndarray
    angles: np.ndarray
    measure: WeightedDirac

    @property
    def diameter(self) -> float:
        return float(self.angles.max() - self.angles.min())


@dataclass
class FTilde:
    lattice: FuchsianLattice
    partition: Partition
    rho: FiniteAction
    guard: float = FIBER_GUARD

    def __post_init__(self):
        if set(self.rho.generators) != set(self.lattice.generators):
            raise ModelMismatchError(f"action labels {sorted(self.rho.generators)} differ from the lattice's "
                                     f"{sorted(self.lattice.generators)}")

    def atoms(self, x: np.ndarray, xi: float) -> Tuple[List[ChartTerm], np.ndarray, np.ndarray]:
        terms, weights = self.partition.weights(x)
        psis = np.array([float(boundary_angle_action(t.element, self.rho.evaluate(self.rho.inverse_word(t.word), xi)))
                         for t in terms])
        return terms, weights, psis

    def fiber_measure(self, x: np.ndarray, xi: float) -> FiberMeasure:
        terms, weights, psis = self.atoms(x, xi)
        angles = fiber_angles(x, psis)
        reference = angles[int(np.argmax(weights))]
        unwrapped = unwrap_near(angles, reference)
        diameter = float(unwrapped.max() - unwrapped.min())
        if not diameter < self.guard:
            raise DiameterGuardError(diameter, self.guard,
                                     f"fiber atoms at x={np.round(x, 6).tolist()}, xi={xi:.6f}")
        measure = WeightedDirac.from_arrays(FIBER, weights, [np.array([a]) for a in unwrapped])
        return FiberMeasure(terms, weights, unwrapped, measure)

    def __call__(self, x: np.ndarray, xi: float) -> SuspensionPoint:
        fm = self.fiber_measure(x, xi)
        angle = float(solve(fm.measure).point.coords[0]) % TWO_PI
        return SuspensionPoint(np.array(x, dtype=float), angle, endpoint_of(x, angle))


def build_f_tilde(lattice: FuchsianLattice, partition: Partition, rho: FiniteAction) -> FTilde:
    return FTilde(lattice, partition, rho)


def perturbed_action(lattice: FuchsianLattice, amplitude: float, mode: int = 1,
                     phase: float = 0.3) -> Tuple[FiniteAction, CircleMap]:
    """h^-1 rho0 h for the trigonometric displacement h of the given amplitude."""
    h = trig_homeomorphism(amplitude, mode, phase, label="h")
    return lattice.boundary_action().conjugate(h), h


def _samples(lattice: FuchsianLattice, rng: np.random.Generator, count: int) -> Tuple[List[np.ndarray], np.ndarray]:
    return lattice.sample_domain(rng, count), rng.uniform(0.0, TWO_PI, count)


@dataclass_json
@dataclass
class EquivarianceReport:
    samples: int
    residual: float
    worst_label: str
    max_atom_diameter: float
    section_deviation: float


def equivariance_report(f: FTilde, rng: np.random.Generator, samples: int = 1000,
                        quiet: bool = True) -> EquivarianceReport:
    """max over generators and samples of d(f~(g x, rho(g) xi), rho0(g) f~(x, xi)) on endpoints."""
    points, xis = _samples(f.lattice, rng, samples)
    worst = 0.0
    worst_label = ""
    diameter = 0.0
    deviation = 0.0
    for x, xi in tqdm(list(zip(points, xis)), desc="equivariance", disable=quiet):
        fm = f.fiber_measure(x, xi)
        diameter = max(diameter, fm.diameter)
        value = f(x, xi)
        deviation = max(deviation, float(circle_distance(value.fiber_angle, fiber_angle(x, xi))))
        for name, g in f.lattice.generators.items():
            m = g.factors[0]
            gx = H2.project_point(mobius_on_hyperboloid(m, x))
            moved = f(gx, float(f.rho.generators[name](xi)))
            expected = float(boundary_angle_action(m, value.endpoint))
            r = float(circle_distance(moved.endpoint, expected))
            if r > worst:
                worst, worst_label = r, name
    logger.info(f"equivariance residual {worst:.3g} ({worst_label}), max atom diameter {diameter:.4g}")
    return EquivarianceReport(samples, worst, worst_label, diameter, deviation)


def section_deviation(f: FTilde, points: Sequence[np.ndarray], xis: Sequence[float]) -> float:
    """sup of the fiber distance between f~(x, xi) and the unit vector at x pointing at xi."""
    return max(float(circle_distance(f(x, xi).fiber_angle, fiber_angle(x, xi))) for x, xi in zip(points, xis))


@dataclass_json
@dataclass
class LeafProximityReport:
    radius: float
    xi: float
    eta: float
    sup_distance: float
    rows: List[List[float]] = field(default_factory=list)


def leaf_proximity_report(f: FTilde, xi: float, x: np.ndarray, radius: float, rings: int = 4,
                          spokes: int = 12) -> LeafProximityReport:
    """sup over a polar grid of B_R(x) of the fiber distance from f~(y, xi) to the unit vector at y pointing at eta."""
    eta = f(x, xi).endpoint
    rows = []
    worst = 0.0
    for t in np.linspace(0.0, radius, rings + 1):
        for a in (np.linspace(0.0, TWO_PI, spokes, endpoint=False) if t > 0 else [0.0]):
            y = H2.exp(x, H2.from_frame(x, t * np.array([math.cos(a), math.sin(a)])))
            value = float(circle_distance(f(y, xi).fiber_angle, fiber_angle(y, eta)))
            worst = max(worst, value)
            rows.append([float(y[0]), float(y[1]), float(y[2]), float(xi), value])
    return LeafProximityReport(radius, float(xi), eta, worst, rows)


@dataclass_json
@dataclass
class TiltReport:
    samples: int
    max_tilt: float
    max_budget: float
    worst_slack: float
    rows: List[List[float]] = field(default_factory=list)

    @property
    def within_budget(self) -> bool:
        return self.worst_slack <= 1e-8


def _graph(slope: np.ndarray) -> np.ndarray:
    return np.vstack([np.eye(2), slope[None, :]])


def graph_slope(f: FTilde, x: np.ndarray, xi: float) -> Tuple[np.ndarray, float, float]:
    """Covariant angle derivative of f~(., xi) at x, with the barycenter angle and the atom spread.

    The derivative is sum_i dbar/dw_i grad sigma_i + sum_i dbar/dz_i grad theta_i, where
    grad theta_i = -J v_i for the unit vector v_i pointing at the i-th atom.
    """
    fm = f.fiber_measure(x, xi)
    result = solve(fm.measure)
    bar = float(result.point.coords[0])
    grad_sigma = f.partition.weight_gradients(x, fm.terms)
    slope = np.zeros(2)
    for i, theta in enumerate(fm.angles):
        along_weight = float(d_bar_d_weight(fm.measure, i, result).frame_coords()[0])
        along_point = float(d_bar_d_point(fm.measure, i, result).matrix[0, 0])
        slope += along_weight * grad_sigma[i] + along_point * np.array([math.sin(theta), -math.cos(theta)])
    spread = float(np.max(np.abs(fm.angles - bar)))
    return slope, bar, (float(np.sum(np.linalg.norm(grad_sigma, axis=1))) + 1.0) * spread


def tangent_tilt(f: FTilde, x: np.ndarray, xi: float) -> Tuple[float, float]:
    """Grassmannian distance between the tangent planes of the graph of f~(., xi) and of the leaf through it.

    Returns the tilt and its budget: the slopes differ by at most (sum |grad sigma_i| + 1) * spread,
    which bounds the angle between the planes by 2 asin(budget / 2).
    """
    slope, bar, bound = graph_slope(f, x, xi)
    leaf = np.array([math.sin(bar), -math.cos(bar)])
    tilt = float(np.max(linalg.subspace_angles(_graph(slope), _graph(leaf))))
    return tilt, 2.0 * math.asin(min(1.0, 0.5 * bound))


def tangent_tilt_report(f: FTilde, rng: np.random.Generator, samples: int = 200) -> TiltReport:
    points, xis = _samples(f.lattice, rng, samples)
    worst = 0.0
    budget_max = 0.0
    slack = -math.inf
    rows = []
    for x, xi in zip(points, xis):
        tilt, budget = tangent_tilt(f, x, xi)
        worst = max(worst, tilt)
        budget_max = max(budget_max, budget)
        slack = max(slack, tilt - budget)
        rows.append([float(x[0]), float(x[1]), float(x[2]), float(xi), tilt])
    return TiltReport(samples, worst, budget_max, slack, rows)


def tilt_oracle(f: FTilde, x: np.ndarray, xi: float, step: float = 1e-5) -> np.ndarray:
    """Covariant angle derivative of f~(., xi) at x by central differences along geodesics from x."""
    base = f(x, xi).fiber_angle
    slope = np.zeros(2)
    for k in range(2):
        values = []
        for sign in (1.0, -1.0):
            e = np.zeros(2)
            e[k] = sign * step
            y = H2.exp(x, H2.from_frame(x, e))
            moved = f(y, xi).fiber_angle
            transported = H2.transport(x, y, H2.from_frame(x, np.array([math.cos(base), math.sin(base)])))
            c = H2.to_frame(y, transported)
            reference = math.atan2(c[1], c[0])
            values.append(float(unwrap_near(moved - reference, 0.0)))
        slope[k] = (values[0] - values[1]) / (2 * step)
    return slope

