"""Matrix groups SL(n, R), PSL(2, R) and PSL(2, R)^2 with their parabolic structure.

Conventions:

* Iwasawa decompositions are g = k a n with k in SO(n), a positive diagonal and n unit upper
  triangular, so upper-triangular inputs with positive diagonal have k = I.
* A parabolic subgroup is given by the set of simple roots Theta where its block partition
  breaks: for SL(n) root i in Theta puts a break after index i, for PSL(2, R)^2 root j in Theta
  makes the j-th factor use its upper-triangular subgroup instead of the whole factor.
* A point of the boundary G/Q is a partial flag, stored per factor as orthonormal columns whose
  first d_k columns span the k-th subspace. For PSL(2, R) a line spanned by (cos(psi/2), sin(psi/2))
  is the point of the circle at infinity of H^2 with angle psi.
"""
import math
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy import linalg

from rigidity_lab.errors import GroupTypeError, MembershipError

SL = "SL"
PSL2 = "PSL2"
PSL2_SQUARED = "PSL2xPSL2"
GROUPS = (SL, PSL2, PSL2_SQUARED)

DETERMINANT_TOLERANCE = 1e-10
MEMBERSHIP_TOLERANCE = 1e-10
FLAG_TOLERANCE = 1e-9
TWO_PI = 2 * math.pi


def canonical_sign(m: np.ndarray) -> np.ndarray:
    flat = m.ravel()
    scale = float(np.max(np.abs(flat)))
    for value in flat:
        if abs(value) > 1e-12 * scale:
            return -m if value < 0 else m
    return m


def positive_qr(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """QR factorization with a positive diagonal in the triangular factor."""
    q, r = linalg.qr(g)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs, signs[:, None] * r


@dataclass(frozen=True, eq=False)
class GroupElement:
    group: str
    factors: Tuple[np.ndarray, ...]

    def __post_init__(self):
        if self.group not in GROUPS:
            raise GroupTypeError(f"unknown group {self.group}; expected one of {GROUPS}")
        expected = 2 if self.group == PSL2_SQUARED else 1
        if len(self.factors) != expected:
            raise GroupTypeError(f"{self.group} elements have {expected} factor(s), got {len(self.factors)}")
        factors = []
        for m in self.factors:
            m = np.array(m, dtype=float)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise GroupTypeError(f"factor of shape {m.shape} is not a square matrix")
            if self.group != SL and m.shape != (2, 2):
                raise GroupTypeError(f"{self.group} factors are 2 x 2, got {m.shape}")
            scale = max(1.0, float(np.prod(np.linalg.norm(m, axis=0))))
            det = float(linalg.det(m))
            if abs(det - 1.0) > DETERMINANT_TOLERANCE * scale:
                raise MembershipError(f"determinant {det!r} is not 1")
            if self.group != SL:
                m = canonical_sign(m)
            m.setflags(write=False)
            factors.append(m)
        object.__setattr__(self, 'factors', tuple(factors))

    @staticmethod
    def sl(matrix) -> 'GroupElement':
        return GroupElement(SL, (np.asarray(matrix, dtype=float),))

    @staticmethod
    def psl2(matrix) -> 'GroupElement':
        return GroupElement(PSL2, (np.asarray(matrix, dtype=float),))

    @staticmethod
    def psl2_squared(first, second) -> 'GroupElement':
        return GroupElement(PSL2_SQUARED, (np.asarray(first, dtype=float), np.asarray(second, dtype=float)))

    @staticmethod
    def identity(group: str, n: int = 2) -> 'GroupElement':
        count = 2 if group == PSL2_SQUARED else 1
        return GroupElement(group, tuple(np.eye(n if group == SL else 2) for _ in range(count)))

    def like(self, factors: Iterable[np.ndarray]) -> 'GroupElement':
        return GroupElement(self.group, tuple(factors))

    @property
    def projective(self) -> bool:
        return self.group != SL

    @property
    def sizes(self) -> Tuple[int, ...]:
        return tuple(m.shape[0] for m in self.factors)

    def __matmul__(self, other: 'GroupElement') -> 'GroupElement':
        self._check_compatible(other)
        return self.like(a @ b for a, b in zip(self.factors, other.factors))

    def inverse(self) -> 'GroupElement':
        return self.like(linalg.inv(m) for m in self.factors)

    def distance_to(self, other: 'GroupElement') -> float:
        self._check_compatible(other)
        worst = 0.0
        for a, b in zip(self.factors, other.factors):
            d = float(np.linalg.norm(a - b))
            if self.projective:
                d = min(d, float(np.linalg.norm(a + b)))
            worst = max(worst, d)
        return worst

    def _check_compatible(self, other: 'GroupElement'):
        if self.group != other.group or self.sizes != other.sizes:
            raise GroupTypeError(f"incompatible elements: {self.group}{self.sizes} vs {other.group}{other.sizes}")

    def to_dict(self) -> Dict:
        return {"group": self.group, "matrices": [m.tolist() for m in self.factors]}

    @staticmethod
    def from_dict(d: Dict) -> 'GroupElement':
        return GroupElement(d["group"], tuple(np.asarray(m, dtype=float) for m in d["matrices"]))


def random_group_element(rng: np.random.Generator, group: str, n: int = 3, scale: float = 0.7) -> GroupElement:
    def sample(size: int) -> np.ndarray:
        g = linalg.expm(scale * rng.normal(size=(size, size)))
        return g / linalg.det(g) ** (1.0 / size)

    if group == SL:
        return GroupElement.sl(sample(n))
    if group == PSL2:
        return GroupElement.psl2(sample(2))
    return GroupElement.psl2_squared(sample(2), sample(2))


def _block_ranges(sizes: Sequence[int]) -> List[Tuple[int, int]]:
    ends = np.cumsum(sizes)
    return [(int(e - s), int(e)) for s, e in zip(sizes, ends)]


@dataclass(frozen=True)
class ParabolicData:
    group: str
    n: int
    theta: FrozenSet[int]

    def __post_init__(self):
        roots = self.simple_roots
        theta = frozenset(int(i) for i in self.theta)
        if not theta <= roots:
            raise GroupTypeError(f"Theta {sorted(theta)} is not a subset of the simple roots {sorted(roots)}")
        object.__setattr__(self, 'theta', theta)

    @staticmethod
    def sl(n: int, theta: Iterable[int]) -> 'ParabolicData':
        return ParabolicData(SL, n, frozenset(theta))

    @staticmethod
    def psl2(theta: Iterable[int] = (1,)) -> 'ParabolicData':
        return ParabolicData(PSL2, 2, frozenset(theta))

    @staticmethod
    def psl2_squared(theta: Iterable[int]) -> 'ParabolicData':
        return ParabolicData(PSL2_SQUARED, 2, frozenset(theta))

    @staticmethod
    def minimal(group: str, n: int = 2) -> 'ParabolicData':
        data = ParabolicData(group, n, frozenset())
        return ParabolicData(group, n, data.simple_roots)

    @property
    def simple_roots(self) -> FrozenSet[int]:
        if self.group == SL:
            return frozenset(range(1, self.n))
        if self.group == PSL2:
            return frozenset({1})
        return frozenset({1, 2})

    @property
    def partitions(self) -> Tuple[Tuple[int, ...], ...]:
        if self.group == SL:
            breaks = sorted(self.theta) + [self.n]
            sizes, start = [], 0
            for b in breaks:
                sizes.append(b - start)
                start = b
            return (tuple(sizes),)
        if self.group == PSL2:
            return ((1, 1) if 1 in self.theta else (2,),)
        return tuple((1, 1) if j in self.theta else (2,) for j in (1, 2))

    @property
    def flag_dims(self) -> Tuple[Tuple[int, ...], ...]:
        return tuple(tuple(int(d) for d in np.cumsum(p)[:-1]) for p in self.partitions)

    @property
    def factor_size(self) -> int:
        return self.n if self.group == SL else 2

    def opposite(self) -> 'ParabolicData':
        """Parabolic data of the opposite type (reversed block partition)."""
        if self.group == SL:
            return ParabolicData(SL, self.n, frozenset(self.n - i for i in self.theta))
        return self

    def to_dict(self) -> Dict:
        return {"group": self.group, "n": self.n, "theta": sorted(self.theta)}

    @staticmethod
    def from_dict(d: Dict) -> 'ParabolicData':
        return ParabolicData(d["group"], d["n"], frozenset(d["theta"]))

    # block helpers

    def blocks(self, factor: int = 0) -> List[Tuple[int, int]]:
        return _block_ranges(self.partitions[factor])

    def _check_group(self, g: GroupElement):
        if g.group != self.group or any(s != self.factor_size for s in g.sizes):
            raise GroupTypeError(f"element of {g.group}{g.sizes} does not match parabolic data of {self.group}")

    def _lower_mask(self, factor: int) -> np.ndarray:
        size = self.factor_size
        mask = np.zeros((size, size), dtype=bool)
        for i, (start, end) in enumerate(self.blocks(factor)):
            mask[end:, start:end] = True
        return mask

    def _offdiagonal_mask(self, factor: int) -> np.ndarray:
        size = self.factor_size
        mask = np.ones((size, size), dtype=bool)
        for start, end in self.blocks(factor):
            mask[start:end, start:end] = False
        return mask

    def _block_diagonal_part(self, m: np.ndarray, factor: int) -> np.ndarray:
        out = np.zeros_like(m)
        for start, end in self.blocks(factor):
            out[start:end, start:end] = m[start:end, start:end]
        return out

    def _small(self, m: np.ndarray, scale: float) -> bool:
        return float(np.max(np.abs(m), initial=0.0)) <= MEMBERSHIP_TOLERANCE * max(1.0, scale)

    # membership

    def in_parabolic(self, g: GroupElement) -> bool:
        self._check_group(g)
        return all(self._small(m[self._lower_mask(f)], np.linalg.norm(m)) for f, m in enumerate(g.factors))

    def in_levi(self, g: GroupElement) -> bool:
        self._check_group(g)
        return all(self._small(m[self._offdiagonal_mask(f)], np.linalg.norm(m)) for f, m in enumerate(g.factors))

    def in_m(self, g: GroupElement) -> bool:
        if not self.in_levi(g):
            return False
        return all(self._small(m.T @ m - np.eye(len(m)), 1.0) for m in g.factors)

    def in_a(self, g: GroupElement) -> bool:
        if not self.in_levi(g):
            return False
        for f, m in enumerate(g.factors):
            for start, end in self.blocks(f):
                block = m[start:end, start:end]
                if not self._small(block - block.T, np.linalg.norm(block)):
                    return False
                if np.min(linalg.eigvalsh(0.5 * (block + block.T))) <= 0:
                    return False
        return True

    def in_a_prime(self, g: GroupElement) -> bool:
        if not self.in_a(g):
            return False
        for f, m in enumerate(g.factors):
            for start, end in self.blocks(f):
                block = m[start:end, start:end]
                if not self._small(block - block[0, 0] * np.eye(end - start), np.linalg.norm(block)):
                    return False
        return True

    def in_n(self, g: GroupElement) -> bool:
        if not self.in_parabolic(g):
            return False
        for f, m in enumerate(g.factors):
            diagonal = self._block_diagonal_part(m, f)
            if not self._small(diagonal - np.eye(len(m)), 1.0):
                return False
        return True

    # canonical projections

    def levi_projection(self, q: GroupElement) -> GroupElement:
        """P_Theta -> Z_Q, keeping the diagonal blocks."""
        if not self.in_parabolic(q):
            raise MembershipError("element is not in the parabolic subgroup")
        return q.like(self._block_diagonal_part(m, f) for f, m in enumerate(q.factors))

    def decompose(self, q: GroupElement) -> Tuple[GroupElement, GroupElement, GroupElement]:
        """q = m a n with m in M_Q, a in A_Q and n in N_Q."""
        z = self.levi_projection(q)
        ms, as_ = [], []
        for f, zm in enumerate(z.factors):
            m_f, a_f = np.zeros_like(zm), np.zeros_like(zm)
            for start, end in self.blocks(f):
                u, p = linalg.polar(zm[start:end, start:end])
                m_f[start:end, start:end] = u
                a_f[start:end, start:end] = p
            ms.append(m_f)
            as_.append(a_f)
        m = q.like(ms)
        a = q.like(as_)
        n = q.like(linalg.solve(zm, qm) for zm, qm in zip(z.factors, q.factors))
        return m, a, n

    def decompose_reversed(self, q: GroupElement) -> Tuple[GroupElement, GroupElement, GroupElement]:
        """q = n' a' m' with n' in N_Q, a' in A_Q and m' in M_Q."""
        z = self.levi_projection(q)
        ms, as_ = [], []
        for f, zm in enumerate(z.factors):
            m_f, a_f = np.zeros_like(zm), np.zeros_like(zm)
            for start, end in self.blocks(f):
                u, p = linalg.polar(zm[start:end, start:end], side='left')
                m_f[start:end, start:end] = u
                a_f[start:end, start:end] = p
            ms.append(m_f)
            as_.append(a_f)
        n = q.like(linalg.solve(zm.T, qm.T).T for zm, qm in zip(z.factors, q.factors))
        return n, q.like(as_), q.like(ms)

    # samplers

    def random_m(self, rng: np.random.Generator) -> GroupElement:
        factors = []
        for f in range(len(self.partitions)):
            m = np.zeros((self.factor_size, self.factor_size))
            for start, end in self.blocks(f):
                q, r = linalg.qr(rng.normal(size=(end - start, end - start)))
                m[start:end, start:end] = q * np.sign(np.diag(r))
            if linalg.det(m) < 0:
                m[:, 0] = -m[:, 0]
            factors.append(m)
        return GroupElement(self.group, tuple(factors))

    def random_a(self, rng: np.random.Generator, scale: float = 0.5) -> GroupElement:
        factors = []
        for f in range(len(self.partitions)):
            s = np.zeros((self.factor_size, self.factor_size))
            for start, end in self.blocks(f):
                block = rng.normal(size=(end - start, end - start)) * scale
                s[start:end, start:end] = 0.5 * (block + block.T)
            s -= np.trace(s) / self.factor_size * np.eye(self.factor_size)
            factors.append(linalg.expm(s))
        return GroupElement(self.group, tuple(factors))

    def a_prime_generator(self, factor_weights: Optional[Sequence[np.ndarray]] = None) -> Tuple[np.ndarray, ...]:
        """A unit-norm traceless block-scalar diagonal per factor spanning a direction in Lie(A'_Q)."""
        generators = []
        for f, sizes in enumerate(self.partitions):
            if factor_weights is not None:
                coefficients = np.asarray(factor_weights[f], dtype=float)
            else:
                coefficients = np.arange(len(sizes), 0, -1, dtype=float)
            diagonal = np.repeat(coefficients, sizes)
            diagonal -= diagonal.mean()
            norm = np.linalg.norm(diagonal)
            generators.append(np.diag(diagonal / norm) if norm > 0 else np.zeros((self.factor_size,) * 2))
        return tuple(generators)

    def flow_element(self, t: float, generator: Optional[Tuple[np.ndarray, ...]] = None) -> GroupElement:
        generator = generator or self.a_prime_generator()
        return GroupElement(self.group, tuple(np.diag(np.exp(t * np.diag(h))) for h in generator))

    def random_a_prime(self, rng: np.random.Generator, scale: float = 0.5) -> GroupElement:
        weights = [rng.normal(size=len(sizes)) for sizes in self.partitions]
        return self.flow_element(scale, self.a_prime_generator(weights))

    def random_n(self, rng: np.random.Generator, scale: float = 0.7) -> GroupElement:
        factors = []
        for f in range(len(self.partitions)):
            m = np.eye(self.factor_size)
            for i, (start, end) in enumerate(self.blocks(f)):
                m[start:end, end:] = scale * rng.normal(size=(end - start, self.factor_size - end))
            factors.append(m)
        return GroupElement(self.group, tuple(factors))

    def random_parabolic(self, rng: np.random.Generator) -> GroupElement:
        return self.random_m(rng) @ self.random_a(rng) @ self.random_n(rng)

    def base_flag(self) -> 'BoundaryPoint':
        size = self.factor_size
        bases = tuple(np.eye(size)[:, :dims[-1]] if dims else np.zeros((size, 0)) for dims in self.flag_dims)
        return BoundaryPoint(self.group, bases, self.flag_dims)


# decompositions

def generalized_iwasawa(g: GroupElement, parabolic: ParabolicData) -> Tuple[GroupElement, GroupElement, GroupElement]:
    """g = k a_Q n_Q with k in K, a_Q in A_Q, n_Q in N_Q."""
    parabolic._check_group(g)
    ks, as_, ns = [], [], []
    for f, m in enumerate(g.factors):
        q, r = positive_qr(m)
        orthogonal = np.zeros_like(m)
        a = np.zeros_like(m)
        diagonal = np.zeros_like(m)
        for start, end in parabolic.blocks(f):
            u, p = linalg.polar(r[start:end, start:end])
            orthogonal[start:end, start:end] = u
            a[start:end, start:end] = p
            diagonal[start:end, start:end] = r[start:end, start:end]
        ks.append(q @ orthogonal)
        as_.append(a)
        ns.append(linalg.solve(diagonal, r))
    return g.like(ks), g.like(as_), g.like(ns)


def iwasawa(g: GroupElement) -> Tuple[GroupElement, GroupElement, GroupElement]:
    n = g.sizes[0]
    return generalized_iwasawa(g, ParabolicData.minimal(g.group, n))


def reverse_generalized_iwasawa(g: GroupElement,
                                parabolic: ParabolicData) -> Tuple[GroupElement, GroupElement, GroupElement]:
    """g = n_Q a_Q k, read off the decomposition of g^-1."""
    k, a, n = generalized_iwasawa(g.inverse(), parabolic)
    return n.inverse(), a.inverse(), k.inverse()


def cartan(g: GroupElement) -> Tuple[GroupElement, Tuple[np.ndarray, ...], GroupElement]:
    """g = k1 exp(H) k2 with H diagonal and decreasing, per factor."""
    k1s, hs, k2s = [], [], []
    for m in g.factors:
        u, s, vt = linalg.svd(m)
        if linalg.det(u) < 0:
            u[:, -1] = -u[:, -1]
            vt[-1, :] = -vt[-1, :]
        k1s.append(u)
        hs.append(np.log(s))
        k2s.append(vt)
    return g.like(k1s), tuple(hs), g.like(k2s)


def exp_diagonal(g: GroupElement, h: Tuple[np.ndarray, ...]) -> GroupElement:
    return g.like(np.diag(np.exp(x)) for x in h)


# boundary points

@dataclass(frozen=True, eq=False)
class BoundaryPoint:
    group: str
    bases: Tuple[np.ndarray, ...]
    dims: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        bases = []
        for basis, dims in zip(self.bases, self.dims):
            basis = np.array(basis, dtype=float)
            if dims and basis.shape[1] != dims[-1]:
                raise GroupTypeError(f"basis with {basis.shape[1]} columns does not match flag dims {dims}")
            if basis.shape[1] and float(np.max(np.abs(basis.T @ basis - np.eye(basis.shape[1])))) > 1e-12:
                basis = nested_orthonormal(basis)
            basis.setflags(write=False)
            bases.append(basis)
        object.__setattr__(self, 'bases', tuple(bases))
        object.__setattr__(self, 'dims', tuple(tuple(d) for d in self.dims))

    def projectors(self, factor: int) -> List[np.ndarray]:
        basis = self.bases[factor]
        return [basis[:, :d] @ basis[:, :d].T for d in self.dims[factor]]

    def distance(self, other: 'BoundaryPoint') -> float:
        return flag_distance(self, other)

    def same_as(self, other: 'BoundaryPoint', tol: float = FLAG_TOLERANCE) -> bool:
        return flag_distance(self, other) < tol

    @property
    def angles(self) -> Tuple[Optional[float], ...]:
        """Boundary angles of the circle factors (None for a trivial factor)."""
        out = []
        for basis, dims in zip(self.bases, self.dims):
            if dims == (1,) and basis.shape[0] == 2:
                out.append(line_angle(basis[:, 0]))
            else:
                out.append(None)
        return tuple(out)

    @staticmethod
    def from_angles(angles: Sequence[Optional[float]]) -> 'BoundaryPoint':
        group = PSL2 if len(angles) == 1 else PSL2_SQUARED
        bases, dims = [], []
        for psi in angles:
            if psi is None:
                bases.append(np.zeros((2, 0)))
                dims.append(())
            else:
                bases.append(circle_vector(psi)[:, None])
                dims.append((1,))
        return BoundaryPoint(group, tuple(bases), tuple(dims))

    def to_dict(self) -> Dict:
        return {"group": self.group, "bases": [b.tolist() for b in self.bases], "dims": [list(d) for d in self.dims]}

    @staticmethod
    def from_dict(d: Dict) -> 'BoundaryPoint':
        return BoundaryPoint(d["group"], tuple(np.asarray(b, dtype=float).reshape(len(b), -1) for b in d["bases"]),
                             tuple(tuple(x) for x in d["dims"]))


def nested_orthonormal(columns: np.ndarray) -> np.ndarray:
    if columns.shape[1] == 0:
        return columns
    q, _ = linalg.qr(columns, mode='economic')
    return q


def flag_distance(xi: BoundaryPoint, eta: BoundaryPoint) -> float:
    if xi.group != eta.group or xi.dims != eta.dims:
        raise GroupTypeError(f"flags of different types: {xi.dims} vs {eta.dims}")
    worst = 0.0
    for f in range(len(xi.bases)):
        for p, q in zip(xi.projectors(f), eta.projectors(f)):
            worst = max(worst, float(np.linalg.norm(p - q, 2)))
    return worst


def flag_action(g: GroupElement, xi: BoundaryPoint) -> BoundaryPoint:
    if g.group != xi.group or len(g.factors) != len(xi.bases):
        raise GroupTypeError(f"{g.group} does not act on flags of {xi.group}")
    bases = []
    for m, basis in zip(g.factors, xi.bases):
        if m.shape[0] != basis.shape[0]:
            raise GroupTypeError(f"matrix of size {m.shape[0]} does not act on flags in dimension {basis.shape[0]}")
        bases.append(nested_orthonormal(m @ basis))
    return BoundaryPoint(xi.group, tuple(bases), xi.dims)


def random_flag(rng: np.random.Generator, parabolic: ParabolicData) -> BoundaryPoint:
    g = random_group_element(rng, parabolic.group, parabolic.n)
    return flag_action(g, parabolic.base_flag())


# the circle at infinity of H^2

def circle_vector(psi: float) -> np.ndarray:
    return np.array([math.cos(0.5 * psi), math.sin(0.5 * psi)])


def line_angle(v: np.ndarray) -> float:
    return float((2.0 * math.atan2(v[1], v[0])) % TWO_PI)


def boundary_angle_action(m: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Action of a 2 x 2 matrix on boundary angles, values in [0, 2 pi)."""
    psi = np.asarray(psi, dtype=float)
    c, s = np.cos(0.5 * psi), np.sin(0.5 * psi)
    x = m[0, 0] * c + m[0, 1] * s
    y = m[1, 0] * c + m[1, 1] * s
    return np.mod(2.0 * np.arctan2(y, x), TWO_PI)


def boundary_angle_derivative(m: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """d(g psi)/d psi = 1 / |g v|^2 for the unit vector v of the line at psi (det g = 1)."""
    psi = np.asarray(psi, dtype=float)
    c, s = np.cos(0.5 * psi), np.sin(0.5 * psi)
    x = m[0, 0] * c + m[0, 1] * s
    y = m[1, 0] * c + m[1, 1] * s
    return 1.0 / (x * x + y * y)


def cocycle(g: GroupElement, x: BoundaryPoint) -> float:
    """Radon-Nikodym derivative of g_* of the round measure on the circle(s) at infinity."""
    if g.group == SL or g.group != x.group:
        raise GroupTypeError(f"cocycle is implemented for PSL2 and PSL2xPSL2 boundaries, not {g.group}")
    value = 1.0
    for m, basis, dims in zip(g.factors, x.bases, x.dims):
        if dims != (1,):
            raise GroupTypeError("cocycle needs a point of the full circle boundary in every factor")
        gv = m @ basis[:, 0]
        value *= 1.0 / float(np.dot(gv, gv))
    return value


def q_minus() -> ParabolicData:
    return ParabolicData.sl(3, {2})


def q_plus() -> ParabolicData:
    return ParabolicData.sl(3, {1})


def block_pattern(parabolic: ParabolicData, g: GroupElement, factor: int = 0) -> np.ndarray:
    """String pattern of a matrix: '1' on identity entries, '0' on zeros, '*' elsewhere."""
    m = g.factors[factor]
    pattern = np.full(m.shape, '*', dtype=object)
    pattern[np.abs(m) < MEMBERSHIP_TOLERANCE] = '0'
    pattern[np.abs(m - 1.0) < MEMBERSHIP_TOLERANCE] = '1'
    logger.debug(f"pattern of {parabolic.to_dict()}: {pattern.tolist()}")
    return pattern
