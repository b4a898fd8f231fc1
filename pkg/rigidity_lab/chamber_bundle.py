"""The bundle G/M_Q of based Weyl chamber Q-faces over the symmetric space X = G/K.

Points of X are stored as g g^T (one SPD matrix of determinant 1 per factor). A coset gM_Q is
stored through a canonical representative: the K-part of its generalized Iwasawa decomposition
is replaced by a fixed section of K -> K/M_Q, built block by block from the subspaces the
K-part spans.
"""
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from dataclasses_json import dataclass_json
from loguru import logger
from scipy import linalg

from rigidity_lab.errors import ConstraintViolationError, DegenerateInputError, GroupTypeError, MembershipError
from rigidity_lab.lie import (BoundaryPoint, GroupElement, ParabolicData, flag_action, flag_distance,
                              generalized_iwasawa, nested_orthonormal, random_group_element,
                              reverse_generalized_iwasawa)
from rigidity_lab.manifolds import (ModelManifold, ModelPoint, ProductManifold, SPDMatrices, random_special_orthogonal,
                                    symmetric_function, symmetrize)

LEAF_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class SymmetricSpacePoint:
    group: str
    matrices: Tuple[np.ndarray, ...]

    def __post_init__(self):
        matrices = []
        for p in self.matrices:
            p = symmetrize(np.array(p, dtype=float))
            if np.min(linalg.eigvalsh(p)) <= 0:
                raise ConstraintViolationError("point of G/K is not positive definite")
            det = float(linalg.det(p))
            if abs(det - 1.0) > 1e-9 * max(1.0, float(np.linalg.norm(p)) ** len(p)):
                raise ConstraintViolationError(f"point of G/K has determinant {det!r}, expected 1")
            p.setflags(write=False)
            matrices.append(p)
        object.__setattr__(self, 'matrices', tuple(matrices))

    @staticmethod
    def origin(group: str, n: int = 2) -> 'SymmetricSpacePoint':
        return SymmetricSpacePoint(group, GroupElement.identity(group, n).factors)

    @staticmethod
    def of(g: GroupElement) -> 'SymmetricSpacePoint':
        return SymmetricSpacePoint(g.group, tuple(m @ m.T for m in g.factors))

    @property
    def model(self) -> ModelManifold:
        factors = [SPDMatrices(len(p)) for p in self.matrices]
        return factors[0] if len(factors) == 1 else ProductManifold(factors)

    @property
    def coords(self) -> np.ndarray:
        if len(self.matrices) == 1:
            return self.matrices[0]
        return ProductManifold.join(self.matrices)

    def as_model_point(self) -> ModelPoint:
        return ModelPoint(self.model, self.coords)

    def act(self, g: GroupElement) -> 'SymmetricSpacePoint':
        return SymmetricSpacePoint(self.group, tuple(m @ p @ m.T for m, p in zip(g.factors, self.matrices)))

    def distance(self, other: 'SymmetricSpacePoint') -> float:
        total = 0.0
        for p, q in zip(self.matrices, other.matrices):
            total += SPDMatrices(len(p)).dist(p, q) ** 2
        return math.sqrt(total)

    def root(self) -> GroupElement:
        """The symmetric square root, a representative of the coset gK."""
        return GroupElement(self.group, tuple(symmetric_function(p, np.sqrt) for p in self.matrices))

    def to_dict(self) -> Dict:
        return {"group": self.group, "matrices": [p.tolist() for p in self.matrices]}


def _canonical_frame(k: np.ndarray, parabolic: ParabolicData, factor: int) -> np.ndarray:
    out = np.zeros_like(k)
    for start, end in parabolic.blocks(factor):
        columns = k[:, start:end]
        u, _ = linalg.polar(columns[start:end, :].T)
        out[:, start:end] = columns @ u
    if linalg.det(out) < 0:
        out[:, -1] = -out[:, -1]
    return out


def canonical_representative(g: GroupElement, parabolic: ParabolicData) -> GroupElement:
    k, _, _ = generalized_iwasawa(g, parabolic)
    factors = []
    for f, (gm, km) in enumerate(zip(g.factors, k.factors)):
        m = km.T @ _canonical_frame(km, parabolic, f)
        factors.append(gm @ m)
    return g.like(factors)


@dataclass(frozen=True, eq=False)
class ChamberBundlePoint:
    representative: GroupElement
    parabolic: ParabolicData

    def __post_init__(self):
        self.parabolic._check_group(self.representative)
        object.__setattr__(self, 'representative', canonical_representative(self.representative, self.parabolic))

    @staticmethod
    def base(parabolic: ParabolicData) -> 'ChamberBundlePoint':
        return ChamberBundlePoint(GroupElement.identity(parabolic.group, parabolic.factor_size), parabolic)

    @property
    def group(self) -> str:
        return self.parabolic.group

    def act(self, g: GroupElement) -> 'ChamberBundlePoint':
        return ChamberBundlePoint(g @ self.representative, self.parabolic)

    def same_as(self, other: 'ChamberBundlePoint', tol: float = 1e-9) -> bool:
        """Equality of cosets: g1^-1 g2 lies in M_Q."""
        if self.parabolic != other.parabolic:
            return False
        quotient = self.representative.inverse() @ other.representative
        scale = max(1.0, max(float(np.linalg.norm(m)) for m in self.representative.factors))
        return self.parabolic.in_m(quotient) or self.representative.distance_to(other.representative) < tol * scale

    def to_dict(self) -> Dict:
        return {"representative": self.representative.to_dict(), "theta": sorted(self.parabolic.theta),
                "group": self.parabolic.group, "n": self.parabolic.n}

    @staticmethod
    def from_dict(d: Dict) -> 'ChamberBundlePoint':
        parabolic = ParabolicData(d["group"], d["n"], frozenset(d["theta"]))
        return ChamberBundlePoint(GroupElement.from_dict(d["representative"]), parabolic)


def random_bundle_point(rng: np.random.Generator, parabolic: ParabolicData, scale: float = 0.7) -> ChamberBundlePoint:
    return ChamberBundlePoint(random_group_element(rng, parabolic.group, parabolic.n, scale), parabolic)


# projection and trivialization

def project(v: ChamberBundlePoint) -> SymmetricSpacePoint:
    return SymmetricSpacePoint.of(v.representative)


def forward_face(v: ChamberBundlePoint) -> BoundaryPoint:
    """The face at infinity of the based face gM_Q: the flag gQ."""
    return flag_action(v.representative, v.parabolic.base_flag())


def trivialize(v: ChamberBundlePoint) -> Tuple[SymmetricSpacePoint, BoundaryPoint]:
    k, _, _ = generalized_iwasawa(v.representative, v.parabolic)
    bases = tuple(km[:, :dims[-1]] if dims else km[:, :0] for km, dims in zip(k.factors, v.parabolic.flag_dims))
    return project(v), BoundaryPoint(v.group, bases, v.parabolic.flag_dims)


def complete_flag_frame(xi: BoundaryPoint, factor: int) -> np.ndarray:
    """An element of SO(n) whose leading columns span the flag."""
    basis = xi.bases[factor]
    size = basis.shape[0]
    if basis.shape[1] == size:
        frame = basis.copy()
    elif basis.shape[1] == 0:
        frame = np.eye(size)
    else:
        frame = np.column_stack([basis, linalg.null_space(basis.T)])
    if linalg.det(frame) < 0:
        frame[:, -1] = -frame[:, -1]
    return frame


def reverse_cholesky(s: np.ndarray) -> np.ndarray:
    """Upper-triangular U with positive diagonal and s = U U^T."""
    j = np.eye(len(s))[::-1]
    lower = linalg.cholesky(j @ symmetrize(s) @ j, lower=True)
    return j @ lower @ j


def untrivialize(x: SymmetricSpacePoint, xi: BoundaryPoint, parabolic: ParabolicData) -> ChamberBundlePoint:
    """The inverse of trivialize: the based face over x with face xi at infinity."""
    if x.group != parabolic.group or xi.group != parabolic.group or xi.dims != parabolic.flag_dims:
        raise GroupTypeError(f"cannot pair {x.group} base with {xi.group} face of type {xi.dims}")
    factors = []
    for f, p in enumerate(x.matrices):
        k = complete_flag_frame(xi, f)
        u = reverse_cholesky(k.T @ p @ k)
        factors.append(k @ u)
    return ChamberBundlePoint(GroupElement(parabolic.group, tuple(factors)), parabolic)


# chamber flow

def chamber_flow(v: ChamberBundlePoint, a: GroupElement) -> ChamberBundlePoint:
    if not v.parabolic.in_a_prime(a):
        raise MembershipError("flow element is not in A'_Q")
    return ChamberBundlePoint(v.representative @ a, v.parabolic)


def flow_for_time(v: ChamberBundlePoint, t: float,
                  generator: Optional[Tuple[np.ndarray, ...]] = None) -> ChamberBundlePoint:
    return chamber_flow(v, v.parabolic.flow_element(t, generator))


def flow_orbit(v: ChamberBundlePoint, times: Sequence[float],
               generator: Optional[Tuple[np.ndarray, ...]] = None) -> List[Tuple[float, SymmetricSpacePoint, float]]:
    """(t, base point, drift of the face at infinity) along the orbit."""
    _, face = trivialize(v)
    rows = []
    for t in times:
        w = flow_for_time(v, t, generator)
        base, face_t = trivialize(w)
        rows.append((float(t), base, flag_distance(face, face_t)))
    logger.debug(f"flow orbit over {len(rows)} times, max face drift {max((r[2] for r in rows), default=0.0):.3g}")
    return rows


# faces and leaves

def backward_face(v: ChamberBundlePoint) -> BoundaryPoint:
    """The face at the other end of the flow: nested spans of the last columns, of opposite type."""
    opposite = v.parabolic.opposite()
    bases = []
    for g, dims in zip(v.representative.factors, opposite.flag_dims):
        bases.append(nested_orthonormal(g[:, ::-1][:, :dims[-1]]) if dims else g[:, :0])
    return BoundaryPoint(v.group, tuple(bases), opposite.flag_dims)


def opposite_face(x: SymmetricSpacePoint, xi: BoundaryPoint, parabolic: ParabolicData) -> BoundaryPoint:
    """The face opposite to xi as seen from the base point x."""
    return backward_face(untrivialize(x, xi, parabolic))


@dataclass_json
@dataclass
class LeafMembership:
    defect: float
    tolerance: float = LEAF_TOLERANCE
    holds: bool = field(init=False)

    def __post_init__(self):
        self.holds = self.defect < self.tolerance


def leaf_membership(v: ChamberBundlePoint, xi: BoundaryPoint) -> LeafMembership:
    """Membership of v in the center-stable leaf of the face xi."""
    _, face = trivialize(v)
    return LeafMembership(flag_distance(face, xi))


def unstable_leaf_membership(v: ChamberBundlePoint, eta: BoundaryPoint) -> LeafMembership:
    return LeafMembership(flag_distance(backward_face(v), eta))


def leaf_intersection_defect(v: ChamberBundlePoint, times: Sequence[float]) -> float:
    """How far the flow orbit of v strays from the stable leaf of its face xi and from the unstable leaf
    of the face opposite to xi as seen from project(v)."""
    xi = forward_face(v)
    xi_star = opposite_face(project(v), xi, v.parabolic)
    worst = 0.0
    for t in times:
        w = flow_for_time(v, t)
        worst = max(worst, leaf_membership(w, xi).defect, unstable_leaf_membership(w, xi_star).defect)
    return worst


# fibers

def fiber_coordinate(v: ChamberBundlePoint) -> BoundaryPoint:
    """The point of K/M_Q = G/Q given by x^{-1/2} g for x = g g^T."""
    root = project(v).root()
    k = root.inverse() @ v.representative
    return flag_action(k, v.parabolic.base_flag())


def fiber_distance(v: ChamberBundlePoint, w: ChamberBundlePoint) -> float:
    if project(v).distance(project(w)) > 1e-8:
        raise ConstraintViolationError("fiber distance needs two points over the same base point")
    return flag_distance(fiber_coordinate(v), fiber_coordinate(w))


def fiber_isometry_residual(v: ChamberBundlePoint, w: ChamberBundlePoint, g: GroupElement) -> float:
    """|d(gv, gw) - d(v, w)| for the fiber metric, v and w over the same base point."""
    return abs(fiber_distance(v.act(g), w.act(g)) - fiber_distance(v, w))


def random_fiber_point(rng: np.random.Generator, v: ChamberBundlePoint) -> ChamberBundlePoint:
    """A random point of the fiber through v."""
    root = project(v).root()
    ks = tuple(random_special_orthogonal(rng, len(m)) for m in root.factors)
    return ChamberBundlePoint(root @ root.like(ks), v.parabolic)


def _symmetric_basis(size: int, blocks: Sequence[Tuple[int, int]]) -> List[np.ndarray]:
    """Orthonormal symmetric matrices supported in the diagonal blocks, traceless diagonal part."""
    basis = []
    for i in range(size):
        for j in range(i + 1, size):
            if any(s <= i < e and s <= j < e for s, e in blocks):
                e_ij = np.zeros((size, size))
                e_ij[i, j] = e_ij[j, i] = 1.0 / math.sqrt(2.0)
                basis.append(e_ij)
    ones = np.ones((1, size)) / math.sqrt(size)
    return basis + [np.diag(d) for d in linalg.null_space(ones).T]


def _lift(matrices: Sequence[np.ndarray], factor: int, count: int, size: int) -> List[Tuple[np.ndarray, ...]]:
    out = []
    for m in matrices:
        parts = [np.zeros((size, size)) for _ in range(count)]
        parts[factor] = m
        out.append(tuple(parts))
    return out


def horizontal_directions(parabolic: ParabolicData) -> List[Tuple[np.ndarray, ...]]:
    """A basis of p (traceless symmetric matrices per factor)."""
    size = parabolic.factor_size
    count = len(parabolic.partitions)
    directions = []
    for f in range(count):
        directions += _lift(_symmetric_basis(size, [(0, size)]), f, count, size)
    return directions


def fiber_directions(parabolic: ParabolicData) -> List[Tuple[np.ndarray, ...]]:
    """A basis of the complement of m_Q in k: antisymmetric matrices vanishing on the diagonal blocks."""
    size = parabolic.factor_size
    count = len(parabolic.partitions)
    directions = []
    for f in range(count):
        blocks = parabolic.blocks(f)
        found = []
        for i in range(size):
            for j in range(i + 1, size):
                if any(s <= i < e and s <= j < e for s, e in blocks):
                    continue
                e_ij = np.zeros((size, size))
                e_ij[i, j], e_ij[j, i] = 1.0 / math.sqrt(2.0), -1.0 / math.sqrt(2.0)
                found.append(e_ij)
        directions += _lift(found, f, count, size)
    return directions


def section_directions(parabolic: ParabolicData) -> List[Tuple[np.ndarray, ...]]:
    """A basis of a_Q + n_Q, tangent at e to the orbit N_Q A_Q M_Q."""
    size = parabolic.factor_size
    count = len(parabolic.partitions)
    directions = []
    for f in range(count):
        blocks = parabolic.blocks(f)
        found = _symmetric_basis(size, blocks)
        for start, end in blocks:
            for i in range(start, end):
                for j in range(end, size):
                    e_ij = np.zeros((size, size))
                    e_ij[i, j] = 1.0
                    found.append(e_ij)
        directions += _lift(found, f, count, size)
    return directions


def trace_form(u: Tuple[np.ndarray, ...], v: Tuple[np.ndarray, ...]) -> float:
    return float(sum(np.sum(a * b) for a, b in zip(u, v)))


@dataclass_json
@dataclass
class OrthogonalityReport:
    # structural: antisymmetric against symmetric matrices pairs to zero entrywise
    horizontal_defect: float
    section_defect: float
    fiber_dimension: int
    horizontal_dimension: int


def orthogonality_report(parabolic: ParabolicData) -> OrthogonalityReport:
    """Largest trace-form pairing between fiber directions and horizontal (resp. section) directions."""
    fibers = fiber_directions(parabolic)
    horizontal = horizontal_directions(parabolic)
    section = section_directions(parabolic)
    h = max((abs(trace_form(u, v)) for u in fibers for v in horizontal), default=0.0)
    s = max((abs(trace_form(u, v)) for u in fibers for v in section), default=0.0)
    return OrthogonalityReport(h, s, len(fibers), len(horizontal))


# parallel sets

def a_q_basis(parabolic: ParabolicData) -> List[Tuple[np.ndarray, ...]]:
    """An orthonormal basis of Lie(A_Q): block-diagonal symmetric matrices, traceless per factor."""
    size = parabolic.factor_size
    count = len(parabolic.partitions)
    directions = []
    for f in range(count):
        directions += _lift(_symmetric_basis(size, parabolic.blocks(f)), f, count, size)
    return directions


def retraction(x: SymmetricSpacePoint, parabolic: ParabolicData) -> SymmetricSpacePoint:
    """Projection of x = n a^2 n^T onto the parallel set A_Q o along N_Q."""
    _, a, _ = reverse_generalized_iwasawa(x.root(), parabolic)
    return SymmetricSpacePoint(x.group, tuple(m @ m for m in a.factors))


@dataclass
class ParallelSetSample:
    coefficients: np.ndarray
    points: List[SymmetricSpacePoint]
    retractions: List[SymmetricSpacePoint]

    @property
    def fixed_point_defect(self) -> float:
        return max((p.distance(r) for p, r in zip(self.points, self.retractions)), default=0.0)


def parallel_set_sample(parabolic: ParabolicData, grid: np.ndarray) -> ParallelSetSample:
    """Points exp(2 sum c_i E_i) o of A_Q o for each coefficient row c of the grid, with their retractions."""
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    if grid.size == 0:
        raise DegenerateInputError("empty grid for the parallel set")
    basis = a_q_basis(parabolic)
    if grid.shape[1] != len(basis):
        raise DegenerateInputError(f"grid rows need {len(basis)} coefficients, got {grid.shape[1]}")
    points = []
    for row in grid:
        h = [sum(c * e[f] for c, e in zip(row, basis)) for f in range(len(parabolic.partitions))]
        points.append(SymmetricSpacePoint(parabolic.group, tuple(linalg.expm(2.0 * m) for m in h)))
    return ParallelSetSample(grid, points, [retraction(p, parabolic) for p in points])


def random_symmetric_point(rng: np.random.Generator, group: str, n: int = 3, scale: float = 1.0) -> SymmetricSpacePoint:
    return SymmetricSpacePoint.of(random_group_element(rng, group, n, scale))


@dataclass_json
@dataclass
class NonExpansionReport:
    pairs: int
    violations: int
    worst_ratio: float
    holds: bool = field(init=False)

    def __post_init__(self):
        self.holds = self.violations == 0


def retraction_non_expansion(rng: np.random.Generator, parabolic: ParabolicData, pairs: int,
                             scale: float = 1.0, slack: float = 1e-9) -> NonExpansionReport:
    violations = 0
    worst = 0.0
    for _ in range(pairs):
        x = random_symmetric_point(rng, parabolic.group, parabolic.n, scale)
        y = random_symmetric_point(rng, parabolic.group, parabolic.n, scale)
        d = x.distance(y)
        dr = retraction(x, parabolic).distance(retraction(y, parabolic))
        if d > 0:
            worst = max(worst, dr / d)
        if dr > d * (1 + slack) + slack:
            violations += 1
    return NonExpansionReport(pairs, violations, worst)
