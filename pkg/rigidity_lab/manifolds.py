"""Charted model manifolds.

Every model works on plain numpy arrays in its ambient chart:

* ``EuclideanSpace`` -- vectors of R^k.
* ``Sphere`` -- unit vectors of R^(k+1) for the sphere of radius ``R``; tangent vectors are
  the velocities of the scaled point ``R * x``.
* ``HyperbolicSpace`` -- the hyperboloid <x, x>_L = -1 with the time coordinate last, curvature
  ``-a**2``; tangent vectors are velocities of ``x / a``.
* ``SPDMatrices`` -- symmetric positive definite n x n matrices with the affine-invariant metric
  tr(P^-1 U P^-1 V).
* ``ProductManifold`` -- concatenation of flattened factor coordinates.

Operators on tangent spaces are matrices in the orthonormal frames returned by ``frame``.
``ModelPoint`` / ``ModelTangent`` wrap the arrays with validation for the public functions.
"""
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy import linalg

from rigidity_lab.errors import (ComparisonRadiusError, ConstraintViolationError, CutLocusError,
                                 DegenerateInputError, ModelMismatchError)

DEFAULT_TOLERANCE = 1e-10
CONSTRAINT_TOLERANCE = 1e-12
FD_STEP = 1e-5
CUT_LOCUS_MARGIN = 1e-8


def x_coth_x(x: float) -> float:
    if abs(x) < 1e-4:
        return 1.0 + x * x / 3.0 - x ** 4 / 45.0
    return x / math.tanh(x)


def x_cot_x(x: float) -> float:
    if abs(x) < 1e-4:
        return 1.0 - x * x / 3.0 - x ** 4 / 45.0
    return x / math.tan(x)


def symmetric_function(s: np.ndarray, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    w, u = linalg.eigh(symmetrize(s))
    return (u * f(w)) @ u.T


def symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def minkowski(u: np.ndarray, v: np.ndarray) -> float:
    return float(np.dot(u[:-1], v[:-1]) - u[-1] * v[-1])


class ModelManifold:
    kind = "abstract"

    def __init__(self, dimension: int, lower_curvature_bound: float, upper_curvature_bound: float,
                 injectivity_radius: float):
        self.dimension = dimension
        self.lower_curvature_bound = lower_curvature_bound
        self.upper_curvature_bound = upper_curvature_bound
        self.injectivity_radius = injectivity_radius
        self.ambient_shape: Tuple[int, ...] = (dimension,)

    # identity

    def describe(self) -> Dict[str, Any]:
        raise NotImplementedError

    def __eq__(self, other):
        return isinstance(other, ModelManifold) and self.describe() == other.describe()

    def __hash__(self):
        return hash(repr(self.describe()))

    def __repr__(self):
        return f"{self.__class__.__name__}({self.describe()})"

    # radii

    @property
    def max_curvature_scale(self) -> float:
        return max(self.lower_curvature_bound, self.upper_curvature_bound)

    @property
    def comparison_radius(self) -> float:
        b = self.upper_curvature_bound
        return math.pi / (2 * b) if b > 0 else math.inf

    @property
    def convexity_radius(self) -> float:
        return min(self.comparison_radius, 0.5 * self.injectivity_radius)

    @property
    def barycenter_guard_radius(self) -> float:
        b = self.upper_curvature_bound
        c = self.max_curvature_scale
        return min(math.pi / (4 * b) if b > 0 else math.inf,
                   0.5 * self.injectivity_radius,
                   1.0 / (3 * c) if c > 0 else math.inf)

    # chart

    @property
    def ambient_size(self) -> int:
        return int(np.prod(self.ambient_shape))

    def as_array(self, coords: Sequence[float]) -> np.ndarray:
        return np.asarray(coords, dtype=float).reshape(self.ambient_shape)

    def origin(self) -> np.ndarray:
        raise NotImplementedError

    def point_defect(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def tangent_defect(self, x: np.ndarray, v: np.ndarray) -> float:
        raise NotImplementedError

    def project_point(self, x: np.ndarray) -> np.ndarray:
        return x

    def project_tangent(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        return v

    # geometry

    def inner(self, x: np.ndarray, u: np.ndarray, v: np.ndarray) -> float:
        raise NotImplementedError

    def norm(self, x: np.ndarray, v: np.ndarray) -> float:
        return math.sqrt(max(self.inner(x, v, v), 0.0))

    def exp(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def log(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def dist(self, x: np.ndarray, y: np.ndarray) -> float:
        raise NotImplementedError

    def transport(self, x: np.ndarray, y: np.ndarray, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def frame(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def half_squared_hessian(self, x: np.ndarray, z: np.ndarray) -> np.ndarray:
        """Hessian of d(., z)^2 / 2 at x in the frame at x."""
        raise NotImplementedError

    def sectional_curvature(self, x: np.ndarray, u: np.ndarray, v: np.ndarray) -> float:
        raise NotImplementedError

    # frame helpers

    def to_frame(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        return np.array([self.inner(x, e, v) for e in self.frame(x)])

    def from_frame(self, x: np.ndarray, c: np.ndarray) -> np.ndarray:
        return np.tensordot(np.asarray(c, dtype=float), self.frame(x), axes=1)

    def transport_matrix(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Parallel transport x -> y as a matrix from the frame at x to the frame at y."""
        columns = [self.to_frame(y, self.transport(x, y, e)) for e in self.frame(x)]
        return np.column_stack(columns)

    def gradient_direction(self, x: np.ndarray, z: np.ndarray) -> Tuple[np.ndarray, float]:
        v = self.log(x, z)
        t = self.norm(x, v)
        if t == 0.0:
            return np.zeros(self.dimension), 0.0
        return -self.to_frame(x, v) / t, t

    # sampling

    def random_tangent(self, rng: np.random.Generator, x: np.ndarray, scale: float = 1.0) -> np.ndarray:
        return self.from_frame(x, scale * rng.normal(size=self.dimension))

    def random_point(self, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
        o = self.origin()
        return self.sample_ball(rng, o, scale, 1)[0]

    def sample_ball(self, rng: np.random.Generator, center: np.ndarray, radius: float,
                    count: int) -> List[np.ndarray]:
        points = []
        for _ in range(count):
            direction = rng.normal(size=self.dimension)
            direction /= np.linalg.norm(direction)
            r = radius * rng.uniform() ** (1.0 / self.dimension)
            points.append(self.exp(center, self.from_frame(center, r * direction)))
        return points


class EuclideanSpace(ModelManifold):
    kind = "flat"

    def __init__(self, dimension: int = 2):
        super().__init__(dimension, 0.0, 0.0, math.inf)

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind, "dimension": self.dimension}

    def origin(self) -> np.ndarray:
        return np.zeros(self.dimension)

    def point_defect(self, x: np.ndarray) -> float:
        return 0.0 if np.all(np.isfinite(x)) else math.inf

    def tangent_defect(self, x: np.ndarray, v: np.ndarray) -> float:
        return 0.0 if np.all(np.isfinite(v)) else math.inf

    def inner(self, x, u, v) -> float:
        return float(np.dot(u, v))

    def exp(self, x, v):
        return x + v

    def log(self, x, y):
        return y - x

    def dist(self, x, y) -> float:
        return float(np.linalg.norm(y - x))

    def transport(self, x, y, v):
        return np.array(v, dtype=float)

    def frame(self, x):
        return np.eye(self.dimension)

    def to_frame(self, x, v):
        return np.array(v, dtype=float)

    def from_frame(self, x, c):
        return np.array(c, dtype=float)

    def half_squared_hessian(self, x, z):
        return np.eye(self.dimension)

    def sectional_curvature(self, x, u, v) -> float:
        return 0.0


class Sphere(ModelManifold):
    kind = "sphere"

    def __init__(self, dimension: int = 2, radius: float = 1.0):
        if radius <= 0:
            raise ConstraintViolationError(f"sphere radius must be positive, got {radius}")
        super().__init__(dimension, 0.0, 1.0 / radius, math.pi * radius)
        self.radius = radius
        self.ambient_shape = (dimension + 1,)

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind, "dimension": self.dimension, "radius": self.radius}

    def origin(self) -> np.ndarray:
        o = np.zeros(self.dimension + 1)
        o[-1] = 1.0
        return o

    def point_defect(self, x) -> float:
        return abs(float(np.dot(x, x)) - 1.0)

    def tangent_defect(self, x, v) -> float:
        return abs(float(np.dot(x, v))) / max(1.0, float(np.linalg.norm(v)))

    def project_point(self, x):
        return x / np.linalg.norm(x)

    def project_tangent(self, x, v):
        return v - np.dot(x, v) * x

    def inner(self, x, u, v) -> float:
        return float(np.dot(u, v))

    def exp(self, x, v):
        nv = float(np.linalg.norm(v))
        if nv == 0.0:
            return np.array(x, dtype=float)
        theta = nv / self.radius
        return self.project_point(math.cos(theta) * x + math.sin(theta) * (v / nv))

    def _angle(self, x, y) -> Tuple[float, np.ndarray]:
        d = y - x
        q = float(np.dot(d, d))
        perp = d + 0.5 * q * x
        return math.atan2(float(np.linalg.norm(perp)), 1.0 - 0.5 * q), perp

    def log(self, x, y):
        theta, perp = self._angle(x, y)
        if math.pi - theta < CUT_LOCUS_MARGIN:
            raise CutLocusError(f"points are antipodal (angle {theta:.12g}); log is not unique")
        n = float(np.linalg.norm(perp))
        if n == 0.0:
            return np.zeros_like(x, dtype=float)
        return self.radius * theta * perp / n

    def dist(self, x, y) -> float:
        return self.radius * self._angle(x, y)[0]

    def transport(self, x, y, v):
        c = 1.0 + float(np.dot(x, y))
        if c < CUT_LOCUS_MARGIN:
            raise CutLocusError("transport between antipodal points is not unique")
        return v - (float(np.dot(y, v)) / c) * (x + y)

    def frame(self, x):
        pole = self.origin() if x[-1] >= 0 else -self.origin()
        c = 1.0 + float(np.dot(pole, x))
        basis = np.eye(self.dimension + 1)[:self.dimension]
        return np.array([e - (float(np.dot(x, e)) / c) * (pole + x) for e in basis])

    def half_squared_hessian(self, x, z):
        g, t = self.gradient_direction(x, z)
        if t == 0.0:
            return np.eye(self.dimension)
        if t >= math.pi * self.radius:
            raise ComparisonRadiusError(f"distance {t} reaches the conjugate radius")
        radial = np.outer(g, g)
        return radial + x_cot_x(t / self.radius) * (np.eye(self.dimension) - radial)

    def sectional_curvature(self, x, u, v) -> float:
        return 1.0 / self.radius ** 2


class HyperbolicSpace(ModelManifold):
    kind = "hyperbolic"

    def __init__(self, dimension: int = 2, curvature_scale: float = 1.0):
        if curvature_scale <= 0:
            raise ConstraintViolationError(f"curvature scale must be positive, got {curvature_scale}")
        super().__init__(dimension, curvature_scale, 0.0, math.inf)
        self.curvature_scale = curvature_scale
        self.radius = 1.0 / curvature_scale
        self.ambient_shape = (dimension + 1,)

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind, "dimension": self.dimension, "curvature_scale": self.curvature_scale}

    def origin(self) -> np.ndarray:
        o = np.zeros(self.dimension + 1)
        o[-1] = 1.0
        return o

    def point_defect(self, x) -> float:
        if x[-1] <= 0:
            return math.inf
        return abs(minkowski(x, x) + 1.0) / max(1.0, float(x[-1]) ** 2)

    def tangent_defect(self, x, v) -> float:
        scale = max(1.0, float(np.linalg.norm(x)) * float(np.linalg.norm(v)))
        return abs(minkowski(x, v)) / scale

    def project_point(self, x):
        y = np.array(x, dtype=float)
        y[-1] = math.sqrt(1.0 + float(np.dot(y[:-1], y[:-1])))
        return y

    def project_tangent(self, x, v):
        return v + minkowski(x, v) * x

    def inner(self, x, u, v) -> float:
        return minkowski(u, v)

    def exp(self, x, v):
        nv = self.norm(x, v)
        if nv == 0.0:
            return np.array(x, dtype=float)
        theta = nv / self.radius
        return self.project_point(math.cosh(theta) * x + math.sinh(theta) * (v / nv))

    def _angle(self, x, y) -> Tuple[float, float]:
        d = y - x
        s = max(minkowski(d, d), 0.0)
        return 2.0 * math.asinh(0.5 * math.sqrt(s)), s

    def log(self, x, y):
        theta, s = self._angle(x, y)
        w = (y - x) - 0.5 * s * x
        nw = math.sqrt(max(minkowski(w, w), 0.0))
        if nw == 0.0:
            return np.zeros_like(x, dtype=float)
        return self.radius * theta * w / nw

    def dist(self, x, y) -> float:
        return self.radius * self._angle(x, y)[0]

    def transport(self, x, y, v):
        return v + (minkowski(y, v) / (1.0 - minkowski(x, y))) * (x + y)

    def frame(self, x):
        o = self.origin()
        basis = np.eye(self.dimension + 1)[:self.dimension]
        return np.array([e + (float(x[j]) / (1.0 + float(x[-1]))) * (o + x) for j, e in enumerate(basis)])

    def half_squared_hessian(self, x, z):
        g, t = self.gradient_direction(x, z)
        if t == 0.0:
            return np.eye(self.dimension)
        radial = np.outer(g, g)
        return radial + x_coth_x(t / self.radius) * (np.eye(self.dimension) - radial)

    def sectional_curvature(self, x, u, v) -> float:
        return -1.0 / self.radius ** 2


def _half_coth(delta: np.ndarray) -> np.ndarray:
    out = np.ones_like(delta)
    small = np.abs(delta) < 1e-4
    out[small] = 1.0 + delta[small] ** 2 / 12.0
    big = ~small
    out[big] = 0.5 * delta[big] / np.tanh(0.5 * delta[big])
    return out


class SPDMatrices(ModelManifold):
    """Symmetric positive definite matrices with the affine-invariant metric.

    Sectional curvatures lie in [-1/2, 0]; the lower end is attained by the plane spanned by
    diag(1, -1)/sqrt(2) and the symmetric swap matrix / sqrt(2), so ``a = 1/sqrt(2)``.
    """
    kind = "spd"

    def __init__(self, n: int = 2):
        super().__init__(n * (n + 1) // 2, 1.0 / math.sqrt(2.0), 0.0, math.inf)
        self.n = n
        self.ambient_shape = (n, n)
        self._basis = self._symmetric_basis(n)

    @staticmethod
    def _symmetric_basis(n: int) -> np.ndarray:
        basis = []
        for i in range(n):
            e = np.zeros((n, n))
            e[i, i] = 1.0
            basis.append(e)
        for i in range(n):
            for j in range(i + 1, n):
                e = np.zeros((n, n))
                e[i, j] = e[j, i] = 1.0 / math.sqrt(2.0)
                basis.append(e)
        return np.array(basis)

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind, "n": self.n}

    def origin(self) -> np.ndarray:
        return np.eye(self.n)

    def point_defect(self, x) -> float:
        scale = max(1.0, float(np.linalg.norm(x)))
        asym = float(np.linalg.norm(x - x.T)) / scale
        if np.min(linalg.eigvalsh(symmetrize(x))) <= 0:
            return math.inf
        return asym

    def tangent_defect(self, x, v) -> float:
        return float(np.linalg.norm(v - v.T)) / max(1.0, float(np.linalg.norm(v)))

    def project_point(self, x):
        return symmetrize(x)

    def project_tangent(self, x, v):
        return symmetrize(v)

    def _roots(self, p: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        w, u = linalg.eigh(symmetrize(p))
        root = (u * np.sqrt(w)) @ u.T
        inverse_root = (u / np.sqrt(w)) @ u.T
        return root, inverse_root

    def inner(self, x, u, v) -> float:
        a = linalg.solve(x, u, assume_a='pos')
        b = linalg.solve(x, v, assume_a='pos')
        return float(np.trace(a @ b))

    def exp(self, x, v):
        s, si = self._roots(x)
        return symmetrize(s @ symmetric_function(si @ v @ si, np.exp) @ s)

    def log(self, x, y):
        s, si = self._roots(x)
        return symmetrize(s @ symmetric_function(si @ y @ si, np.log) @ s)

    def dist(self, x, y) -> float:
        w = linalg.eigh(symmetrize(y), symmetrize(x), eigvals_only=True)
        return float(np.sqrt(np.sum(np.log(w) ** 2)))

    def transport(self, x, y, v):
        s, si = self._roots(x)
        e = s @ symmetric_function(si @ y @ si, np.sqrt) @ si
        return symmetrize(e @ v @ e.T)

    def frame(self, x):
        s, _ = self._roots(x)
        return np.array([s @ e @ s for e in self._basis])

    def to_frame(self, x, v):
        _, si = self._roots(x)
        w = si @ v @ si
        return np.einsum('kij,ij->k', self._basis, w)

    def half_squared_hessian(self, x, z):
        _, si = self._roots(x)
        w, u = linalg.eigh(symmetrize(si @ z @ si))
        lam = np.log(w)
        factor = _half_coth(lam[:, None] - lam[None, :])
        columns = []
        for e in self._basis:
            hv = u @ (factor * (u.T @ e @ u)) @ u.T
            columns.append(np.einsum('kij,ij->k', self._basis, hv))
        return symmetrize(np.column_stack(columns))

    def sectional_curvature(self, x, u, v) -> float:
        _, si = self._roots(x)
        a = si @ u @ si
        b = si @ v @ si
        c = a @ b - b @ a
        den = self.inner(x, u, u) * self.inner(x, v, v) - self.inner(x, u, v) ** 2
        return -0.25 * float(np.sum(c * c)) / den


class ProductManifold(ModelManifold):
    kind = "product"

    def __init__(self, factors: Sequence[ModelManifold]):
        if not factors:
            raise ConstraintViolationError("product of zero factors")
        self.factors = list(factors)
        super().__init__(sum(f.dimension for f in self.factors),
                         max(f.lower_curvature_bound for f in self.factors),
                         max(f.upper_curvature_bound for f in self.factors),
                         min(f.injectivity_radius for f in self.factors))
        self.ambient_shape = (sum(f.ambient_size for f in self.factors),)
        self._offsets = np.cumsum([0] + [f.ambient_size for f in self.factors])
        self._frame_offsets = np.cumsum([0] + [f.dimension for f in self.factors])

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind, "factors": [f.describe() for f in self.factors]}

    def split(self, x: np.ndarray) -> List[np.ndarray]:
        return [x[self._offsets[i]:self._offsets[i + 1]].reshape(f.ambient_shape)
                for i, f in enumerate(self.factors)]

    def split_frame(self, c: np.ndarray) -> List[np.ndarray]:
        return [c[self._frame_offsets[i]:self._frame_offsets[i + 1]] for i in range(len(self.factors))]

    @staticmethod
    def join(parts: Sequence[np.ndarray]) -> np.ndarray:
        return np.concatenate([np.asarray(p, dtype=float).ravel() for p in parts])

    def _zip(self, *arrays):
        return zip(self.factors, *[self.split(a) for a in arrays])

    def origin(self):
        return self.join([f.origin() for f in self.factors])

    def point_defect(self, x) -> float:
        return max(f.point_defect(xi) for f, xi in self._zip(x))

    def tangent_defect(self, x, v) -> float:
        return max(f.tangent_defect(xi, vi) for f, xi, vi in self._zip(x, v))

    def project_point(self, x):
        return self.join([f.project_point(xi) for f, xi in self._zip(x)])

    def project_tangent(self, x, v):
        return self.join([f.project_tangent(xi, vi) for f, xi, vi in self._zip(x, v)])

    def inner(self, x, u, v) -> float:
        return sum(f.inner(xi, ui, vi) for f, xi, ui, vi in self._zip(x, u, v))

    def exp(self, x, v):
        return self.join([f.exp(xi, vi) for f, xi, vi in self._zip(x, v)])

    def log(self, x, y):
        return self.join([f.log(xi, yi) for f, xi, yi in self._zip(x, y)])

    def dist(self, x, y) -> float:
        return math.sqrt(sum(f.dist(xi, yi) ** 2 for f, xi, yi in self._zip(x, y)))

    def transport(self, x, y, v):
        return self.join([f.transport(xi, yi, vi) for f, xi, yi, vi in self._zip(x, y, v)])

    def frame(self, x):
        rows = []
        for i, (f, xi) in enumerate(self._zip(x)):
            for e in f.frame(xi):
                parts = [np.zeros(g.ambient_size) for g in self.factors]
                parts[i] = e
                rows.append(self.join(parts))
        return np.array(rows)

    def to_frame(self, x, v):
        return np.concatenate([f.to_frame(xi, vi) for f, xi, vi in self._zip(x, v)])

    def from_frame(self, x, c):
        return self.join([f.from_frame(xi, ci) for f, xi, ci in zip(self.factors, self.split(x), self.split_frame(c))])

    def half_squared_hessian(self, x, z):
        return linalg.block_diag(*[f.half_squared_hessian(xi, zi) for f, xi, zi in self._zip(x, z)])

    def sectional_curvature(self, x, u, v) -> float:
        den = self.inner(x, u, u) * self.inner(x, v, v) - self.inner(x, u, v) ** 2
        num = 0.0
        for f, xi, ui, vi in self._zip(x, u, v):
            wedge = f.inner(xi, ui, ui) * f.inner(xi, vi, vi) - f.inner(xi, ui, vi) ** 2
            if wedge > 1e-14 * max(den, 1e-300) and f.dimension > 1:
                num += f.sectional_curvature(xi, ui, vi) * wedge
        return num / den


def model_from_dict(d: Dict[str, Any]) -> ModelManifold:
    kind = d["kind"]
    if kind == EuclideanSpace.kind:
        return EuclideanSpace(d["dimension"])
    if kind == Sphere.kind:
        return Sphere(d["dimension"], d["radius"])
    if kind == HyperbolicSpace.kind:
        return HyperbolicSpace(d["dimension"], d["curvature_scale"])
    if kind == SPDMatrices.kind:
        return SPDMatrices(d["n"])
    if kind == ProductManifold.kind:
        return ProductManifold([model_from_dict(f) for f in d["factors"]])
    raise ModelMismatchError(f"unknown model kind: {kind}")


@dataclass(frozen=True, eq=False)
class ModelPoint:
    model: ModelManifold
    coords: np.ndarray

    def __post_init__(self):
        coords = self.model.as_array(self.coords).copy()
        defect = self.model.point_defect(coords)
        if not defect <= CONSTRAINT_TOLERANCE:
            raise ConstraintViolationError(f"point violates the {self.model.kind} constraint (defect {defect:.3e})")
        coords.setflags(write=False)
        object.__setattr__(self, 'coords', coords)

    @staticmethod
    def projected(model: ModelManifold, coords) -> 'ModelPoint':
        return ModelPoint(model, model.project_point(model.as_array(coords)))

    def same_as(self, other: 'ModelPoint', tol: float = CONSTRAINT_TOLERANCE) -> bool:
        return self.model == other.model and bool(np.allclose(self.coords, other.coords, rtol=tol, atol=tol))

    def to_dict(self) -> Dict[str, Any]:
        return {"model": self.model.describe(), "coords": self.coords.ravel().tolist()}

    @staticmethod
    def from_dict(d: Dict[str, Any]) -> 'ModelPoint':
        return ModelPoint(model_from_dict(d["model"]), np.asarray(d["coords"], dtype=float))


@dataclass(frozen=True, eq=False)
class ModelTangent:
    base: ModelPoint
    vector: np.ndarray

    def __post_init__(self):
        model = self.base.model
        vector = model.as_array(self.vector).copy()
        defect = model.tangent_defect(self.base.coords, vector)
        if not defect <= CONSTRAINT_TOLERANCE:
            raise ConstraintViolationError(f"vector is not tangent to the {model.kind} model (defect {defect:.3e})")
        vector.setflags(write=False)
        object.__setattr__(self, 'vector', vector)

    @property
    def model(self) -> ModelManifold:
        return self.base.model

    @staticmethod
    def projected(base: ModelPoint, vector) -> 'ModelTangent':
        model = base.model
        return ModelTangent(base, model.project_tangent(base.coords, model.as_array(vector)))

    @staticmethod
    def from_frame(base: ModelPoint, c: np.ndarray) -> 'ModelTangent':
        return ModelTangent.projected(base, base.model.from_frame(base.coords, c))

    def frame_coords(self) -> np.ndarray:
        return self.model.to_frame(self.base.coords, self.vector)

    def norm(self) -> float:
        return self.model.norm(self.base.coords, self.vector)

    def scaled(self, factor: float) -> 'ModelTangent':
        return ModelTangent(self.base, factor * self.vector)

    def to_dict(self) -> Dict[str, Any]:
        return {"base": self.base.to_dict(), "coords": self.vector.ravel().tolist()}

    @staticmethod
    def from_dict(d: Dict[str, Any]) -> 'ModelTangent':
        base = ModelPoint.from_dict(d["base"])
        return ModelTangent(base, np.asarray(d["coords"], dtype=float))


@dataclass(frozen=True, eq=False)
class TangentOperator:
    """Linear map T_source -> T_target, stored in the orthonormal frames of both points."""
    source: ModelPoint
    target: ModelPoint
    matrix: np.ndarray

    def apply(self, v: ModelTangent) -> ModelTangent:
        if not v.base.same_as(self.source, 1e-9):
            raise ModelMismatchError("tangent vector is not based at the operator's source point")
        return ModelTangent.from_frame(self.target, self.matrix @ v.frame_coords())

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))

    def eigenvalues(self) -> np.ndarray:
        return linalg.eigvalsh(symmetrize(self.matrix))

    def to_dict(self) -> Dict[str, Any]:
        return {"source": self.source.to_dict(), "target": self.target.to_dict(),
                "matrix": self.matrix.tolist()}


def _check_same_model(p: ModelPoint, q: ModelPoint):
    if p.model != q.model:
        raise ModelMismatchError(f"points live on different models: {p.model} vs {q.model}")


def _check_base(p: ModelPoint, v: ModelTangent):
    _check_same_model(p, v.base)
    if not v.base.same_as(p, 1e-9):
        raise ModelMismatchError("tangent vector is not based at the given point")


def exp_map(p: ModelPoint, v: ModelTangent) -> ModelPoint:
    _check_base(p, v)
    return ModelPoint.projected(p.model, p.model.exp(p.coords, v.vector))


def log_map(p: ModelPoint, q: ModelPoint) -> ModelTangent:
    _check_same_model(p, q)
    model = p.model
    if model.dist(p.coords, q.coords) >= model.injectivity_radius:
        raise CutLocusError(f"distance exceeds the injectivity radius {model.injectivity_radius}")
    return ModelTangent.projected(p, model.log(p.coords, q.coords))


def distance(p: ModelPoint, q: ModelPoint) -> float:
    _check_same_model(p, q)
    return p.model.dist(p.coords, q.coords)


def parallel_transport(p: ModelPoint, q: ModelPoint, v: ModelTangent) -> ModelTangent:
    _check_base(p, v)
    _check_same_model(p, q)
    if p.model.dist(p.coords, q.coords) >= p.model.injectivity_radius:
        raise CutLocusError("no unique minimizing geodesic between the points")
    return ModelTangent.projected(q, p.model.transport(p.coords, q.coords, v.vector))


def grad_distance(x: ModelPoint, z: ModelPoint) -> ModelTangent:
    _check_same_model(x, z)
    model = x.model
    v = model.log(x.coords, z.coords)
    t = model.norm(x.coords, v)
    if t < 1e-14:
        raise DegenerateInputError("gradient of d(., z) is undefined at x = z")
    return ModelTangent.projected(x, -v / t)


def hessian_distance(x: ModelPoint, z: ModelPoint) -> TangentOperator:
    """D_x grad_x d(x, z) in the frame at x."""
    _check_same_model(x, z)
    model = x.model
    g, t = model.gradient_direction(x.coords, z.coords)
    if t == 0.0:
        raise DegenerateInputError("hessian of d(., z) is undefined at x = z")
    if t >= model.comparison_radius:
        raise ComparisonRadiusError(f"distance {t:.6g} exceeds comparison radius {model.comparison_radius:.6g}")
    h = model.half_squared_hessian(x.coords, z.coords)
    return TangentOperator(x, x, symmetrize((h - np.outer(g, g)) / t))


def comparison_eigenvalue_range(model: ModelManifold, t: float) -> Tuple[float, float]:
    a = model.lower_curvature_bound
    b = model.upper_curvature_bound
    low = b / math.tan(b * t) if b > 0 else 1.0 / t
    high = a / math.tanh(a * t) if a > 0 else 1.0 / t
    return low, high


def sample_sectional_curvatures(model: ModelManifold, rng: np.random.Generator, count: int = 200,
                                scale: float = 1.0) -> np.ndarray:
    values = []
    for _ in range(count):
        x = model.random_point(rng, scale)
        u = model.random_tangent(rng, x)
        v = model.random_tangent(rng, x)
        values.append(model.sectional_curvature(x, u, v))
    values = np.array(values)
    logger.debug(f"{model.kind}: sampled sectional curvatures in [{values.min():.4f}, {values.max():.4f}]")
    return values


# isometries

@dataclass(frozen=True)
class Isometry:
    label: str
    model: ModelManifold
    point_map: Callable[[np.ndarray], np.ndarray]

    def __call__(self, p: ModelPoint) -> ModelPoint:
        if p.model != self.model:
            raise ModelMismatchError(f"isometry {self.label} acts on {self.model}, not on {p.model}")
        return ModelPoint.projected(self.model, self.point_map(p.coords))


def identity_isometry(model: ModelManifold) -> Isometry:
    return Isometry("identity", model, lambda x: np.array(x, dtype=float))


def hyperboloid_to_spd(x: np.ndarray) -> np.ndarray:
    return np.array([[x[2] + x[0], x[1]], [x[1], x[2] - x[0]]])


def spd_to_hyperboloid(p: np.ndarray) -> np.ndarray:
    return np.array([0.5 * (p[0, 0] - p[1, 1]), 0.5 * (p[0, 1] + p[1, 0]), 0.5 * (p[0, 0] + p[1, 1])])


def mobius_on_hyperboloid(g: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Action of g in SL(2, R) on the hyperboloid H^2 through P -> g P g^T."""
    return spd_to_hyperboloid(g @ hyperboloid_to_spd(x) @ g.T)


def upper_half_plane_to_hyperboloid(z: complex) -> np.ndarray:
    u, v = z.real, z.imag
    if v <= 0:
        raise ConstraintViolationError(f"{z} is not in the upper half-plane")
    p11 = 1.0 / v
    p01 = u / v
    p00 = (u * u + v * v) / v
    return np.array([0.5 * (p00 - p11), p01, 0.5 * (p00 + p11)])


def hyperboloid_to_upper_half_plane(x: np.ndarray) -> complex:
    return complex(x[1], 1.0) / (x[2] - x[0])


def hyperbolic_isometry(model: HyperbolicSpace, g: np.ndarray) -> Isometry:
    if model.dimension != 2:
        raise ModelMismatchError("PSL(2, R) isometries are implemented for H^2 only")
    g = np.asarray(g, dtype=float)
    return Isometry("mobius", model, lambda x: mobius_on_hyperboloid(g, x))


def spd_congruence(model: SPDMatrices, g: np.ndarray) -> Isometry:
    g = np.asarray(g, dtype=float)
    return Isometry("congruence", model, lambda p: symmetrize(g @ p @ g.T))


def sphere_rotation(model: Sphere, rotation: np.ndarray) -> Isometry:
    rotation = np.asarray(rotation, dtype=float)
    return Isometry("rotation", model, lambda x: rotation @ x)


def euclidean_motion(model: EuclideanSpace, rotation: np.ndarray, translation: np.ndarray) -> Isometry:
    rotation = np.asarray(rotation, dtype=float)
    translation = np.asarray(translation, dtype=float)
    return Isometry("motion", model, lambda x: rotation @ x + translation)


def product_isometry(model: ProductManifold, parts: Sequence[Isometry]) -> Isometry:
    return Isometry("product", model,
                    lambda x: model.join([f.point_map(xi) for f, xi in zip(parts, model.split(x))]))


def random_special_orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = linalg.qr(rng.normal(size=(n, n)))
    q = q * np.sign(np.diag(r))
    if linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_unimodular(rng: np.random.Generator, n: int = 2, scale: float = 0.5) -> np.ndarray:
    g = linalg.expm(scale * rng.normal(size=(n, n)))
    return g / abs(linalg.det(g)) ** (1.0 / n)


def random_isometry(model: ModelManifold, rng: np.random.Generator) -> Isometry:
    if isinstance(model, EuclideanSpace):
        return euclidean_motion(model, random_special_orthogonal(rng, model.dimension), rng.normal(size=model.dimension))
    if isinstance(model, Sphere):
        return sphere_rotation(model, random_special_orthogonal(rng, model.dimension + 1))
    if isinstance(model, HyperbolicSpace):
        return hyperbolic_isometry(model, random_unimodular(rng, 2))
    if isinstance(model, SPDMatrices):
        return spd_congruence(model, random_unimodular(rng, model.n))
    if isinstance(model, ProductManifold):
        return product_isometry(model, [random_isometry(f, rng) for f in model.factors])
    raise ModelMismatchError(f"no isometry sampler for {model}")


def standard_models() -> Dict[str, ModelManifold]:
    return {
        "S2": Sphere(2, 1.0),
        "H2": HyperbolicSpace(2, 1.0),
        "SPD2": SPDMatrices(2),
        "H2xH2": ProductManifold([HyperbolicSpace(2, 1.0), HyperbolicSpace(2, 1.0)]),
    }


def model_by_name(name: str) -> ModelManifold:
    if name == "flat":
        return EuclideanSpace(2)
    models = standard_models()
    if name not in models:
        raise ModelMismatchError(f"unknown model name {name}; expected one of {['flat'] + list(models)}")
    return models[name]
