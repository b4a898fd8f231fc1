"""The genus-2 Fuchsian group of the regular hyperbolic octagon with vertex angle pi/4.

The octagon is centered at the origin o of the hyperboloid. Side k has its midpoint at distance
IN_RADIUS in direction k pi / 4 and the generator g_k translates along that direction by
2 IN_RADIUS, carrying side k + 4 onto side k. g_k and g_(k+4) are inverse to each other.
"""
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np
from dataclasses_json import dataclass_json
from loguru import logger

from rigidity_lab.circle import FiniteAction, mobius_map
from rigidity_lab.errors import ConstraintViolationError, ConvergenceError
from rigidity_lab.lie import PSL2, GroupElement, canonical_sign
from rigidity_lab.manifolds import HyperbolicSpace, mobius_on_hyperboloid

SIDES = 8
IN_RADIUS = math.acosh(1.0 + math.sqrt(2.0))
CIRCUMRADIUS = math.acosh(3.0 + 2.0 * math.sqrt(2.0))
RELATOR_TOLERANCE = 1e-9
SIDE_TOLERANCE = 1e-8
DOMAIN_TOLERANCE = 1e-12

Word = Tuple[str, ...]
H2 = HyperbolicSpace(2)


def rotation_matrix(phi: float) -> np.ndarray:
    return np.array([[math.cos(phi), -math.sin(phi)], [math.sin(phi), math.cos(phi)]])


def point_at(direction: float, distance: float) -> np.ndarray:
    """The point of the hyperboloid at the given distance from o in the given direction."""
    return np.array([math.sinh(distance) * math.cos(direction), math.sinh(distance) * math.sin(direction),
                     math.cosh(distance)])


def cosh_distance(x: np.ndarray, points: np.ndarray) -> np.ndarray:
    """cosh d(x, z) for every row z, clipped at 1."""
    points = np.atleast_2d(points)
    values = points[:, 2] * x[2] - points[:, 0] * x[0] - points[:, 1] * x[1]
    return np.maximum(values, 1.0)


def side_pairing(k: int) -> np.ndarray:
    rotation = rotation_matrix(k * math.pi / 8)
    translation = np.diag([math.exp(IN_RADIUS), math.exp(-IN_RADIUS)])
    return rotation @ translation @ rotation.T


def vertex(m: int) -> np.ndarray:
    return point_at((m % SIDES + 0.5) * math.pi / 4, CIRCUMRADIUS)


def side_midpoint(k: int) -> np.ndarray:
    return point_at((k % SIDES) * math.pi / 4, IN_RADIUS)


def side_vertices(k: int) -> Tuple[int, int]:
    return (k - 1) % SIDES, k % SIDES


def label(k: int) -> str:
    return f"g{k % SIDES}"


def _nearest_vertex(x: np.ndarray, candidates: Sequence[int]) -> int:
    return min(candidates, key=lambda m: float(cosh_distance(x, vertex(m))[0]))


def vertex_cycle_relator() -> Word:
    """Walk the vertex cycle of the side pairing; the cycle transformation is the relator."""
    start = (0, 0)
    v, s = start
    applied = []
    while True:
        k = (s + 4) % SIDES
        applied.append(label(k))
        image = mobius_on_hyperboloid(side_pairing(k), vertex(v))
        v = _nearest_vertex(image, side_vertices(s + 4))
        s = v if v != (s + 4) % SIDES else (v + 1) % SIDES
        if (v, s) == start:
            break
        if len(applied) > 4 * SIDES:
            raise ConvergenceError("vertex cycle did not close")
    return tuple(reversed(applied))


@dataclass
class FuchsianLattice:
    generators: Dict[str, GroupElement]
    relator: Word
    inverse_labels: Dict[str, str]
    in_radius: float = IN_RADIUS
    circumradius: float = CIRCUMRADIUS

    def matrix(self, word: Sequence[str]) -> np.ndarray:
        m = np.eye(2)
        for letter in word:
            m = m @ self.generators[letter].factors[0]
        return m

    def element(self, word: Sequence[str]) -> GroupElement:
        return GroupElement.psl2(self.matrix(word))

    def relator_defect(self) -> float:
        return GroupElement.identity(PSL2).distance_to(self.element(self.relator))

    def side_pairing_defect(self) -> float:
        worst = 0.0
        for k in range(SIDES):
            image = mobius_on_hyperboloid(self.generators[label(k)].factors[0], side_midpoint(k + 4))
            worst = max(worst, float(np.linalg.norm(image - side_midpoint(k))))
        return worst

    def orbit_points(self) -> np.ndarray:
        """g_k o for the eight generators."""
        o = H2.origin()
        return np.array([mobius_on_hyperboloid(self.generators[label(k)].factors[0], o) for k in range(SIDES)])

    def in_domain(self, x: np.ndarray, tolerance: float = DOMAIN_TOLERANCE) -> bool:
        """Dirichlet domain test: d(x, o) <= d(x, g o) for every generator g."""
        return bool(x[2] <= np.min(cosh_distance(x, self.orbit_points())) + tolerance)

    def reduce_to_domain(self, x: np.ndarray, max_steps: int = 1000) -> Tuple[np.ndarray, Word]:
        """(y, word) with y in the closed domain and x = word . y."""
        neighbors = self.orbit_points()
        y = np.array(x, dtype=float)
        word: List[str] = []
        for _ in range(max_steps):
            c = cosh_distance(y, neighbors)
            k = int(np.argmin(c))
            if not c[k] < y[2] - DOMAIN_TOLERANCE * max(1.0, y[2]):
                return y, tuple(word)
            inverse = self.generators[self.inverse_labels[label(k)]].factors[0]
            y = H2.project_point(mobius_on_hyperboloid(inverse, y))
            word.append(label(k))
        raise ConvergenceError(f"point did not reach the fundamental domain in {max_steps} steps")

    def tiles(self, bound: float) -> List[Tuple[Word, np.ndarray]]:
        """Group elements gamma with d(o, gamma o) <= bound, each with one word."""
        o = H2.origin()
        explore = math.cosh(bound + self.circumradius)
        keep = math.cosh(bound)
        seen = {_matrix_key(np.eye(2))}
        queue = deque([((), np.eye(2))])
        found = []
        while queue:
            word, m = queue.popleft()
            if mobius_on_hyperboloid(m, o)[2] <= keep:
                found.append((word, m))
            for letter in self.generators:
                nxt = m @ self.generators[letter].factors[0]
                if mobius_on_hyperboloid(nxt, o)[2] > explore:
                    continue
                key = _matrix_key(nxt)
                if key in seen:
                    continue
                seen.add(key)
                queue.append((word + (letter,), nxt))
        logger.debug(f"{len(found)} tiles within {bound:.3f} of o ({len(seen)} explored)")
        return found

    def boundary_action(self) -> FiniteAction:
        generators = {name: mobius_map(name, g.factors[0]) for name, g in self.generators.items()}
        return FiniteAction(generators, [self.relator], dict(self.inverse_labels))

    def sample_domain(self, rng: np.random.Generator, count: int) -> List[np.ndarray]:
        points = []
        while len(points) < count:
            x = H2.sample_ball(rng, H2.origin(), self.circumradius, 1)[0]
            if self.in_domain(x):
                points.append(x)
        return points


def _matrix_key(m: np.ndarray) -> Tuple[float, ...]:
    return tuple(np.round(canonical_sign(m).ravel(), 6))


def genus_two_lattice() -> FuchsianLattice:
    generators = {label(k): GroupElement.psl2(side_pairing(k)) for k in range(SIDES)}
    inverse_labels = {label(k): label(k + 4) for k in range(SIDES)}
    lattice = FuchsianLattice(generators, vertex_cycle_relator(), inverse_labels)
    defect = lattice.relator_defect()
    if defect > RELATOR_TOLERANCE:
        raise ConstraintViolationError(f"relator {'.'.join(lattice.relator)} is off the identity by {defect:.3g}")
    side_defect = lattice.side_pairing_defect()
    if side_defect > SIDE_TOLERANCE:
        raise ConstraintViolationError(f"generators miss the paired side midpoints by {side_defect:.3g}")
    logger.debug(f"genus-2 relator {'.'.join(lattice.relator)}, defect {defect:.3g}")
    return lattice


# partition of unity

def bump(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    inside = t < 1.0
    safe = np.where(inside, t, 0.0)
    return np.where(inside, np.exp(-1.0 / (1.0 - safe * safe)), 0.0)


def bump_derivative(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    inside = t < 1.0
    safe = np.where(inside, t, 0.0)
    return np.where(inside, bump(safe) * (-2.0 * safe / (1.0 - safe * safe) ** 2), 0.0)


@dataclass
class ChartTerm:
    word: Word
    element: np.ndarray
    center: np.ndarray
    distance: float


@dataclass
class Partition:
    """Bumps of radius `radius` around every translate gamma c of the base centers c."""
    lattice: FuchsianLattice
    radius: float
    base_centers: np.ndarray
    tile_words: List[Word]
    tile_matrices: List[np.ndarray]
    translated: np.ndarray
    owners: np.ndarray

    def terms(self, x: np.ndarray) -> List[ChartTerm]:
        y, word = self.lattice.reduce_to_domain(x)
        outer = self.lattice.matrix(word)
        c = cosh_distance(y, self.translated)
        near = np.flatnonzero(c < math.cosh(self.radius))
        out = []
        for i in near:
            tile = int(self.owners[i])
            element = outer @ self.tile_matrices[tile]
            center = H2.project_point(mobius_on_hyperboloid(outer, self.translated[i]))
            out.append(ChartTerm(word + self.tile_words[tile], element, center, float(math.acosh(c[i]))))
        return out

    def weights(self, x: np.ndarray) -> Tuple[List[ChartTerm], np.ndarray]:
        terms = self.terms(x)
        raw = bump(np.array([t.distance for t in terms]) / self.radius)
        total = float(raw.sum())
        if not total > 0.0:
            raise ConstraintViolationError(f"point {np.round(x, 6).tolist()} is not covered by the charts")
        return terms, raw / total

    def weight_gradients(self, x: np.ndarray, terms: List[ChartTerm]) -> np.ndarray:
        """Gradients of the normalized weights at x, in the frame at x."""
        t = np.array([term.distance for term in terms]) / self.radius
        raw = bump(t)
        total = raw.sum()
        grads = []
        for term, ti in zip(terms, t):
            direction, distance = H2.gradient_direction(x, term.center)
            grads.append(bump_derivative(ti) / self.radius * direction if distance > 0 else np.zeros(2))
        grads = np.array(grads)
        weights = raw / total
        return grads / total - np.outer(weights, grads.sum(axis=0) / total)


def _base_centers(lattice: FuchsianLattice, spacing: float) -> np.ndarray:
    centers = [H2.origin()]
    ring = 1
    while ring * spacing <= lattice.circumradius + spacing:
        d = ring * spacing
        count = max(6, int(math.ceil(2 * math.pi * math.sinh(d) / spacing)))
        for j in range(count):
            x = point_at(2 * math.pi * j / count, d)
            if lattice.in_domain(x):
                centers.append(x)
        ring += 1
    return np.array(centers)


def build_partition(lattice: FuchsianLattice, chart_radius: float = 0.5) -> Partition:
    """Equivariant partition of unity by bumps around the translates of centers in the closed domain."""
    if not 0 < chart_radius < 0.5 * lattice.in_radius:
        raise ConstraintViolationError(f"chart radius {chart_radius} does not lift isometrically "
                                       f"(needs < {0.5 * lattice.in_radius:.6f})")
    centers = _base_centers(lattice, 0.5 * chart_radius)
    reach = max(float(H2.dist(H2.origin(), c)) for c in centers)
    tiles = lattice.tiles(lattice.circumradius + reach + chart_radius + 1e-6)
    translated = []
    owners = []
    for t, (_, m) in enumerate(tiles):
        for c in centers:
            translated.append(mobius_on_hyperboloid(m, c))
            owners.append(t)
    logger.info(f"partition: {len(centers)} base centers, {len(tiles)} tiles, chart radius {chart_radius}")
    return Partition(lattice, chart_radius, centers, [w for w, _ in tiles], [m for _, m in tiles],
                     np.array(translated), np.array(owners, dtype=int))


@dataclass_json
@dataclass
class PartitionReport:
    samples: int
    weight_sum_defect: float
    min_total_bump: float
    max_multiplicity: int
    lift_residual: float
    translates: int
    max_word_length: int
    holds: bool = field(init=False)

    def __post_init__(self):
        self.holds = self.weight_sum_defect < 1e-10 and self.lift_residual < 1e-10 and self.min_total_bump > 0


def partition_report(partition: Partition, rng: np.random.Generator, samples: int = 10_000,
                     lift_pairs: int = 200) -> PartitionReport:
    points = partition.lattice.sample_domain(rng, samples)
    defect = 0.0
    min_total = math.inf
    multiplicity = 0
    words = set()
    for x in points:
        terms, weights = partition.weights(x)
        defect = max(defect, abs(float(weights.sum()) - 1.0))
        min_total = min(min_total, float(bump(np.array([t.distance for t in terms]) / partition.radius).sum()))
        multiplicity = max(multiplicity, len(terms))
        words.update(t.word for t in terms)
    neighbors = [m for w, m in zip(partition.tile_words, partition.tile_matrices) if w]
    residual = 0.0
    for _ in range(lift_pairs):
        center = partition.base_centers[rng.integers(len(partition.base_centers))]
        p, q = H2.sample_ball(rng, center, partition.radius, 2)
        d = H2.dist(p, q)
        shortest = min(H2.dist(p, mobius_on_hyperboloid(m, q)) for m in neighbors)
        residual = max(residual, max(0.0, d - shortest))
    return PartitionReport(samples, defect, min_total, multiplicity, residual, len(words),
                           max((len(w) for w in words), default=0))
