"""Deformation of the PSL2 x PSL2 action on the geodesic boundary of H2 x H2 inside Weyl chambers.

A boundary point is a chamber coordinate (xi, eta, theta): the chamber spanned by the
boundary points xi and eta of the two factors, and the angle theta in [0, pi/2] inside it,
theta = 0 being the face at xi and theta = pi/2 the face at eta. In the chart
tau(theta) = log tan theta the chamber center pi/4 sits at 0, and kappa_g moves theta to
tau^-1(c(g, (xi, eta))^alpha * tau(theta)).
"""
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from dataclasses_json import dataclass_json
from loguru import logger

from rigidity_lab.errors import ConstraintViolationError, DegenerateInputError, GroupTypeError
from rigidity_lab.lie import (PSL2_SQUARED, GroupElement, boundary_angle_action, boundary_angle_derivative,
                              random_group_element)
from rigidity_lab.circle import circle_distance

TWO_PI = 2 * math.pi
HALF_PI = 0.5 * math.pi
CHAMBER_CENTER = 0.25 * math.pi
FACE_TOLERANCE = 1e-15


@dataclass_json
@dataclass(frozen=True)
class ChamberCoordinate:
    xi: float
    eta: float
    theta: float

    def __post_init__(self):
        if not (-FACE_TOLERANCE <= self.theta <= HALF_PI + FACE_TOLERANCE):
            raise ConstraintViolationError(f"chamber angle {self.theta} outside [0, pi/2]")
        object.__setattr__(self, 'xi', float(self.xi % TWO_PI))
        object.__setattr__(self, 'eta', float(self.eta % TWO_PI))
        object.__setattr__(self, 'theta', float(min(max(self.theta, 0.0), HALF_PI)))

    @property
    def on_face(self) -> bool:
        return self.theta == 0.0 or self.theta == HALF_PI

    def distance(self, other: 'ChamberCoordinate') -> float:
        return max(float(circle_distance(self.xi, other.xi)), float(circle_distance(self.eta, other.eta)),
                   abs(self.theta - other.theta))


def tau(theta) -> np.ndarray:
    """Chamber chart, -inf and +inf at the faces."""
    theta = np.asarray(theta, dtype=float)
    with np.errstate(divide='ignore'):
        out = np.log(np.tan(theta))
    out = np.where(theta <= 0.0, -np.inf, out)
    return np.where(theta >= HALF_PI, np.inf, out)


def tau_inverse(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    return np.where(np.isposinf(s), HALF_PI, np.where(np.isneginf(s), 0.0, np.arctan(np.exp(s))))


def chamber_cocycle(g: GroupElement, xi, eta) -> np.ndarray:
    """c(g, (xi, eta)), the product of the boundary derivatives of the two factors."""
    if g.group != PSL2_SQUARED:
        raise GroupTypeError(f"chamber deformation needs {PSL2_SQUARED} elements, got {g.group}")
    first, second = g.factors
    return boundary_angle_derivative(first, xi) * boundary_angle_derivative(second, eta)


def kappa_chart(g: GroupElement, alpha: float, xi, eta, s) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """kappa in the chamber chart, where it scales s = tau(theta) and keeps the faces at -inf and +inf."""
    s = np.asarray(s, dtype=float)
    first, second = g.factors
    new_xi = boundary_angle_action(first, np.asarray(xi, dtype=float))
    new_eta = boundary_angle_action(second, np.asarray(eta, dtype=float))
    if alpha == 0.0:
        return new_xi, new_eta, s.copy()
    return new_xi, new_eta, chamber_cocycle(g, xi, eta) ** alpha * s


def kappa_arrays(g: GroupElement, alpha: float, xi, eta, theta) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    theta = np.asarray(theta, dtype=float)
    first, second = g.factors
    new_xi = boundary_angle_action(first, xi)
    new_eta = boundary_angle_action(second, eta)
    if alpha == 0.0:
        return new_xi, new_eta, theta.copy()
    delta = chamber_cocycle(g, xi, eta) ** alpha
    face = (theta <= 0.0) | (theta >= HALF_PI)
    with np.errstate(invalid='ignore'):
        moved = tau_inverse(delta * tau(theta))
    return new_xi, new_eta, np.where(face, theta, moved)


@dataclass
class ChamberAction:
    alpha: float
    generators: Dict[str, GroupElement] = field(default_factory=dict)
    relations: List[Tuple[str, ...]] = field(default_factory=list)

    def __post_init__(self):
        if self.alpha < 0:
            raise ConstraintViolationError(f"deformation parameter must be non-negative, got {self.alpha}")
        for label, g in self.generators.items():
            if g.group != PSL2_SQUARED:
                raise GroupTypeError(f"generator {label} is a {g.group} element")

    def kappa(self, g: GroupElement, point: ChamberCoordinate) -> ChamberCoordinate:
        xi, eta, theta = kappa_arrays(g, self.alpha, point.xi, point.eta, point.theta)
        return ChamberCoordinate(float(xi), float(eta), float(theta))

    def kappa_arrays(self, g: GroupElement, xi, eta, theta):
        return kappa_arrays(g, self.alpha, xi, eta, theta)

    def word_element(self, word: Sequence[str]) -> GroupElement:
        result = GroupElement.identity(PSL2_SQUARED)
        for label in word:
            result = result @ self.generators[label]
        return result

    def apply_word(self, word: Sequence[str], point: ChamberCoordinate) -> ChamberCoordinate:
        for label in reversed(tuple(word)):
            point = self.kappa(self.generators[label], point)
        return point

    def relation_residual(self, points: Sequence[ChamberCoordinate]) -> float:
        worst = 0.0
        for relation in self.relations:
            for p in points:
                worst = max(worst, self.apply_word(relation, p).distance(p))
        return worst


def build_rho_alpha(alpha: float, generators: Optional[Dict[str, GroupElement]] = None,
                    relations: Optional[List[Tuple[str, ...]]] = None) -> ChamberAction:
    return ChamberAction(alpha, dict(generators or {}), list(relations or []))


def random_chamber_points(rng: np.random.Generator, count: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    return (rng.uniform(0.0, TWO_PI, count), rng.uniform(0.0, TWO_PI, count),
            rng.uniform(0.0, HALF_PI, count))


def _coordinate_distance(a, b) -> np.ndarray:
    return np.maximum(np.maximum(circle_distance(a[0], b[0]), circle_distance(a[1], b[1])),
                      np.abs(np.asarray(a[2]) - np.asarray(b[2])))


@dataclass_json
@dataclass
class ActionPropertyCheck:
    alpha: float
    trials: int
    residual: float
    face_residual: float


def action_property_check(alpha: float, rng: np.random.Generator, trials: int = 1000,
                          scale: float = 0.7) -> ActionPropertyCheck:
    """max over random (g, h, point) of d(kappa_gh point, kappa_g kappa_h point), plus face displacement."""
    action = build_rho_alpha(alpha)
    worst = 0.0
    face_worst = 0.0
    for _ in range(trials):
        g = random_group_element(rng, PSL2_SQUARED, scale=scale)
        h = random_group_element(rng, PSL2_SQUARED, scale=scale)
        xi, eta, theta = (float(v[0]) for v in random_chamber_points(rng, 1))
        direct = action.kappa_arrays(g @ h, xi, eta, theta)
        # composed in the chart: stored angles saturate next to the face at pi/2
        moved_xi, moved_eta, s = kappa_chart(g, alpha, *kappa_chart(h, alpha, xi, eta, tau(theta)))
        composed = (moved_xi, moved_eta, tau_inverse(s))
        worst = max(worst, float(_coordinate_distance(direct, composed)))
        for face in (0.0, HALF_PI):
            moved = action.kappa_arrays(g, xi, eta, face)
            face_worst = max(face_worst, abs(float(moved[2]) - face))
    logger.debug(f"alpha={alpha}: action residual {worst:.3g} over {trials} triples")
    return ActionPropertyCheck(alpha, trials, worst, face_worst)


def continuity_defect(alpha: float, generators: Dict[str, GroupElement], grid: int = 24) -> float:
    """sup over a grid of d(kappa^alpha_s x, kappa^0_s x) over the generators s."""
    angles = np.linspace(0.0, TWO_PI, grid, endpoint=False)
    thetas = np.linspace(0.0, HALF_PI, grid + 1)
    xi, eta, theta = (a.ravel() for a in np.meshgrid(angles, angles, thetas, indexing='ij'))
    worst = 0.0
    for g in generators.values():
        deformed = kappa_arrays(g, alpha, xi, eta, theta)
        standard = kappa_arrays(g, 0.0, xi, eta, theta)
        worst = max(worst, float(np.max(_coordinate_distance(deformed, standard))))
    return worst


@dataclass_json
@dataclass
class CollapseTrace:
    alpha: float
    xi: float
    eta: float
    cocycle: float
    thetas: List[float]
    limit: float
    monotone_from: int

    @property
    def final_gap(self) -> float:
        return abs(self.thetas[-1] - self.limit)

    def rows(self) -> List[List[float]]:
        return [[n, theta, self.xi, self.eta] for n, theta in enumerate(self.thetas)]


def first_monotone_index(values: Sequence[float]) -> int:
    """Index from which the sequence is monotone, in the direction of its last move."""
    diffs = np.diff(values)
    if np.all(diffs == 0):
        return 0
    sign = np.sign(diffs[np.flatnonzero(diffs)[-1]])
    bad = np.flatnonzero(diffs * sign < 0)
    return 0 if len(bad) == 0 else int(bad[-1]) + 1


def chamber_collapse_witness(alpha: float, gamma: GroupElement, xi: float, eta: float, theta0: float,
                             iterations: int = 50, tolerance: float = 1e-12) -> CollapseTrace:
    """Iterate kappa_gamma on the chamber (xi, eta), which gamma must stabilize with c != 1.

    Depending on the sign of log c, theta_n tends to the chamber center or to a face.
    """
    if gamma.group != PSL2_SQUARED:
        raise GroupTypeError(f"collapse witness needs a {PSL2_SQUARED} element")
    first, second = gamma.factors
    drift = max(float(circle_distance(boundary_angle_action(first, xi), xi)),
                float(circle_distance(boundary_angle_action(second, eta), eta)))
    if drift > tolerance:
        raise ConstraintViolationError(f"element moves the chamber ({xi}, {eta}) by {drift:.3g}")
    c = float(chamber_cocycle(gamma, xi, eta))
    if abs(math.log(c)) < 1e-12:
        raise DegenerateInputError(f"cocycle {c} is 1 on this chamber")
    action = build_rho_alpha(alpha)
    start = ChamberCoordinate(xi, eta, theta0)
    point = start
    thetas = [point.theta]
    for _ in range(iterations):
        point = action.kappa(gamma, point)
        thetas.append(point.theta)
    if alpha == 0.0 or start.on_face or theta0 == CHAMBER_CENTER:
        limit = theta0
    elif c < 1.0:
        limit = CHAMBER_CENTER
    else:
        limit = 0.0 if theta0 < CHAMBER_CENTER else HALF_PI
    trace = CollapseTrace(alpha, xi, eta, c, thetas, limit, first_monotone_index(thetas))
    logger.info(f"collapse witness alpha={alpha}, c={c:.4g}: theta_{iterations} = {thetas[-1]:.9f}, "
                f"limit {limit:.9f}")
    return trace


def standard_stabilizer() -> Tuple[GroupElement, float, float]:
    """(diag(e, 1/e), id) with the chamber it stabilizes at angles (0, 0)."""
    return GroupElement.psl2_squared(np.diag([math.e, 1.0 / math.e]), np.eye(2)), 0.0, 0.0
