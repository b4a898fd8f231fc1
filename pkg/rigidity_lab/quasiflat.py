"""Flats, biLipschitz flats and coarse intersections in H2 x H2.

A geodesic of H2 is stored by the boundary angles of its two ideal endpoints; with the null
vectors l(psi) = (cos psi, sin psi, 1) it is

    gamma(t) = (e^t l(forward) + e^-t l(backward)) / sqrt(-2 <l(backward), l(forward)>)

which puts gamma(0) at the foot of the perpendicular from the origin. A flat is a product of two
geodesics, parameterized by arc length in each factor.
"""
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from dataclasses_json import dataclass_json
from loguru import logger
from scipy import optimize
from scipy.spatial import cKDTree

from rigidity_lab.barycenter import solve_at
from rigidity_lab.circle import circle_distance
from rigidity_lab.errors import ConstraintViolationError, DegenerateInputError
from rigidity_lab.manifolds import HyperbolicSpace

H2 = HyperbolicSpace(2)
TWO_PI = 2 * math.pi
ENDPOINT_SEPARATION = 1e-9
DEGENERATE_SPREAD = 1.0
NEIGHBOURS = 8
GRID_SLACK = 0.01
PARALLEL_SLACK = 1e-3


def lorentz(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] - a[..., 2] * b[..., 2]


def h2_distances(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    d = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    return 2.0 * np.arcsinh(0.5 * np.sqrt(np.maximum(lorentz(d, d), 0.0)))


def null_vector(psi: float) -> np.ndarray:
    return np.array([math.cos(psi), math.sin(psi), 1.0])


def ideal_angle(x: np.ndarray) -> np.ndarray:
    """Boundary angle seen from the origin; tends to the ideal endpoint along a geodesic ray."""
    x = np.asarray(x, dtype=float)
    return np.mod(np.arctan2(x[..., 1], x[..., 0]), TWO_PI)


def _dual(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """A vector Minkowski-orthogonal to both a and b."""
    c = np.cross(a, b)
    return np.array([c[0], c[1], -c[2]])


@dataclass_json
@dataclass(frozen=True)
class Geodesic:
    backward: float
    forward: float

    def __post_init__(self):
        if float(circle_distance(self.backward, self.forward)) < ENDPOINT_SEPARATION:
            raise DegenerateInputError(f"geodesic endpoints {self.backward} and {self.forward} coincide")

    def _ends(self) -> Tuple[np.ndarray, np.ndarray, float]:
        l1 = null_vector(self.backward)
        l2 = null_vector(self.forward)
        return l1, l2, math.sqrt(-2.0 * float(lorentz(l1, l2)))

    def point(self, t) -> np.ndarray:
        l1, l2, scale = self._ends()
        t = np.asarray(t, dtype=float)[..., None]
        return (np.exp(t) * l2 + np.exp(-t) * l1) / scale

    def velocity(self, t) -> np.ndarray:
        l1, l2, scale = self._ends()
        t = np.asarray(t, dtype=float)[..., None]
        return (np.exp(t) * l2 - np.exp(-t) * l1) / scale

    def normal(self) -> np.ndarray:
        """Unit spacelike normal of the plane through the geodesic; tangent to H2 along it."""
        l1, l2, _ = self._ends()
        n = _dual(l1, l2)
        return n / math.sqrt(float(lorentz(n, n)))

    def distance_to(self, x: np.ndarray) -> np.ndarray:
        return np.arcsinh(np.abs(lorentz(x, self.normal())))

    def parameter_of(self, x: np.ndarray) -> np.ndarray:
        """Arc-length parameter of the orthogonal projection of x onto the geodesic."""
        l1, l2, _ = self._ends()
        return 0.5 * np.log(lorentz(x, l1) / lorentz(x, l2))

    def endpoints(self) -> List[float]:
        return [float(self.backward), float(self.forward)]


def geodesic_through(x: np.ndarray, v: np.ndarray) -> Geodesic:
    """The geodesic through x with unit tangent v."""
    x = np.asarray(x, dtype=float)
    v = H2.project_tangent(x, np.asarray(v, dtype=float))
    v = v / H2.norm(x, v)
    return Geodesic(float(ideal_angle(x - v)), float(ideal_angle(x + v)))


def crossing_point(a: Geodesic, b: Geodesic) -> Optional[np.ndarray]:
    """The point where two geodesics of H2 cross, None when they do not meet."""
    p = _dual(a.normal(), b.normal())
    norm = float(lorentz(p, p))
    if norm >= -1e-14:
        return None
    p = p / math.sqrt(-norm)
    return H2.project_point(p if p[2] > 0 else -p)


@dataclass_json
@dataclass(frozen=True)
class Flat:
    first: Geodesic
    second: Geodesic

    def point(self, u, v) -> np.ndarray:
        u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
        return np.concatenate([self.first.point(u), self.second.point(v)], axis=-1)

    def distance_to(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return np.hypot(self.first.distance_to(points[..., :3]), self.second.distance_to(points[..., 3:]))

    def parameters_of(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        points = np.asarray(points, dtype=float)
        return self.first.parameter_of(points[..., :3]), self.second.parameter_of(points[..., 3:])

    def endpoints(self) -> List[float]:
        return self.first.endpoints() + self.second.endpoints()


def flat_from_endpoints(angles: Sequence[float]) -> Flat:
    return Flat(Geodesic(angles[0], angles[1]), Geodesic(angles[2], angles[3]))


def product_distances(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.hypot(h2_distances(x[..., :3], y[..., :3]), h2_distances(x[..., 3:], y[..., 3:]))


def random_geodesic(rng: np.random.Generator) -> Geodesic:
    center = rng.uniform(0.0, TWO_PI)
    half = rng.uniform(0.35 * math.pi, 0.5 * math.pi)
    return Geodesic(float((center - half) % TWO_PI), float((center + half) % TWO_PI))


def random_flat(rng: np.random.Generator) -> Flat:
    return Flat(random_geodesic(rng), random_geodesic(rng))


# biLipschitz flats

@dataclass
class SampledFlat:
    L: float
    seed: int
    window: float
    params: np.ndarray
    images: np.ndarray
    lipschitz_estimate: float
    amplitude: float = 0.0
    frequency: float = 0.0
    base: Optional[Flat] = None

    @property
    def n(self) -> int:
        return len(self.params)

    @property
    def spacing(self) -> float:
        return float(self.params[1] - self.params[0])

    def flat_points(self) -> np.ndarray:
        return self.images.reshape(-1, 6)

    def to_dict(self):
        return {"L": self.L, "seed": self.seed, "window": self.window, "n": self.n,
                "lipschitz_estimate": self.lipschitz_estimate, "amplitude": self.amplitude,
                "frequency": self.frequency, "base": self.base.endpoints() if self.base else None}


def lipschitz_estimate(params: np.ndarray, images: np.ndarray) -> float:
    """max(ratio, 1 / ratio) of image distance to parameter distance over horizontally and vertically adjacent pairs."""
    h = float(params[1] - params[0])
    ratios = np.concatenate([(product_distances(images[:-1, :], images[1:, :]) / h).ravel(),
                             (product_distances(images[:, :-1], images[:, 1:]) / h).ravel()])
    return float(max(np.max(ratios), 1.0 / np.min(ratios)))


def perturbed_geodesic(geodesic: Geodesic, s: np.ndarray, amplitude: float, frequency: float,
                       phase: float) -> np.ndarray:
    """gamma(s) pushed along the normal by amplitude * sin(frequency * s + phase)."""
    offset = (amplitude * np.sin(frequency * s + phase))[..., None]
    return np.cosh(offset) * geodesic.point(s) + np.sinh(offset) * geodesic.normal()


def make_bilipschitz_flat(L: float, seed: int = 0, window: float = 10.0, n: int = 100,
                          amplitude: Optional[float] = None) -> SampledFlat:
    """Product of two normally perturbed geodesics, sampled on an n x n grid over [-window, window]^2.

    The speed of a perturbed factor is sqrt(cosh^2(delta) + delta'^2) with delta the normal offset.
    Without an amplitude the offset is acosh(L) sin(s + phase), whose largest speed is exactly L;
    with one, the frequency is chosen so that cosh^2(amplitude) + (amplitude * frequency)^2 = L^2.
    """
    if L < 1.0:
        raise ConstraintViolationError(f"biLipschitz constant must be at least 1, got {L}")
    if n < 2:
        raise ConstraintViolationError(f"grid needs at least two points per side, got {n}")
    rng = np.random.default_rng(seed)
    base = random_flat(rng)
    phases = rng.uniform(0.0, TWO_PI, 2)
    if amplitude is None:
        eps, omega = math.acosh(L), 1.0
    else:
        eps = float(amplitude)
        if math.cosh(eps) > L:
            raise ConstraintViolationError(f"amplitude {eps} needs L >= cosh(amplitude) = {math.cosh(eps):.6f}")
        omega = math.sqrt(L * L - math.cosh(eps) ** 2) / eps if eps > 0 else 0.0
    s = np.linspace(-window, window, n)
    first = perturbed_geodesic(base.first, s, eps, omega, phases[0])
    second = perturbed_geodesic(base.second, s, eps, omega, phases[1])
    images = np.concatenate([np.broadcast_to(first[:, None, :], (n, n, 3)),
                             np.broadcast_to(second[None, :, :], (n, n, 3))], axis=-1)
    estimate = lipschitz_estimate(s, images)
    logger.debug(f"biLipschitz flat L={L} amplitude={eps:.4f} frequency={omega:.4f}: L^={estimate:.6f}")
    return SampledFlat(L, seed, window, s, images, estimate, eps, omega, base)


def product_distance_identity(q: SampledFlat, rng: np.random.Generator, pairs: int = 1000) -> float:
    """max over sampled pairs of |d^2 - |p - p'|^2| / max(1, |p - p'|^2); zero exactly on flats."""
    n = q.n
    i = rng.integers(0, n, size=(pairs, 2))
    j = rng.integers(0, n, size=(pairs, 2))
    d = product_distances(q.images[i[:, 0], j[:, 0]], q.images[i[:, 1], j[:, 1]])
    delta = (q.params[i[:, 0]] - q.params[i[:, 1]]) ** 2 + (q.params[j[:, 0]] - q.params[j[:, 1]]) ** 2
    return float(np.max(np.abs(d ** 2 - delta) / np.maximum(1.0, delta)))


# flat fitting

@dataclass_json
@dataclass
class FlatFit:
    L: float
    window: float
    n: int
    hausdorff: float
    forward: float
    reverse: float
    endpoints: List[float]
    evaluations: int = 0

    @property
    def symmetric(self) -> bool:
        return abs(self.forward - self.reverse) <= GRID_SLACK + 0.5 * self.hausdorff

    def flat(self) -> Flat:
        return flat_from_endpoints(self.endpoints)


def _check_spread(points: np.ndarray, label: str):
    spread = float(np.max(h2_distances(points[0], points)))
    if spread < DEGENERATE_SPREAD:
        raise DegenerateInputError(f"{label} samples lie in a ball of radius {spread:.4g}")


def _guarded_objective(build, objective):
    def evaluate(angles):
        try:
            candidate = build(angles)
        except DegenerateInputError:
            return math.inf
        return objective(candidate)
    return evaluate


def _refine(initial: Sequence[float], build, objective) -> Tuple[np.ndarray, int]:
    result = optimize.minimize(_guarded_objective(build, objective), np.asarray(initial, dtype=float),
                               method='Powell', options={'xtol': 1e-10, 'ftol': 1e-12, 'maxfev': 4000})
    evaluate = _guarded_objective(build, objective)
    best = np.asarray(result.x, dtype=float)
    if not evaluate(best) <= evaluate(initial):
        best = np.asarray(initial, dtype=float)
    return np.mod(best, TWO_PI), int(result.nfev)


def windowed_hausdorff(flat: Flat, points: np.ndarray, n: int) -> Tuple[float, float]:
    """(samples -> flat, flat -> samples) on the parameter window covered by the samples' projections."""
    forward = float(np.max(flat.distance_to(points)))
    u, v = flat.parameters_of(points)
    tree = cKDTree(np.column_stack([u, v]))
    gu, gv = np.meshgrid(np.linspace(u.min(), u.max(), n), np.linspace(v.min(), v.max(), n), indexing='ij')
    grid = np.column_stack([gu.ravel(), gv.ravel()])
    k = min(NEIGHBOURS, len(points))
    _, index = tree.query(grid, k=k)
    index = np.asarray(index).reshape(len(grid), k)
    targets = flat.point(grid[:, 0], grid[:, 1])
    reverse = float(np.max(np.min(product_distances(targets[:, None, :], points[index]), axis=1)))
    return forward, reverse


def fit_flat(q: SampledFlat) -> FlatFit:
    """Fit a product of geodesics to the samples: ideal endpoints from the far rows and columns of
    the grid, then Powell refinement of the largest sample-to-flat distance."""
    points = q.flat_points()
    _check_spread(points[:, :3], "first factor")
    _check_spread(points[:, 3:], "second factor")
    mid = q.n // 2
    initial = [float(ideal_angle(q.images[0, mid, :3])), float(ideal_angle(q.images[-1, mid, :3])),
               float(ideal_angle(q.images[mid, 0, 3:])), float(ideal_angle(q.images[mid, -1, 3:]))]
    angles, evaluations = _refine(initial, flat_from_endpoints, lambda f: float(np.max(f.distance_to(points))))
    flat = flat_from_endpoints(angles)
    forward, reverse = windowed_hausdorff(flat, points, q.n)
    fit = FlatFit(q.L, q.window, q.n, max(forward, reverse), forward, reverse, [float(a) for a in angles],
                  evaluations)
    logger.info(f"flat fit L={q.L}: hausdorff {fit.hausdorff:.6f} (forward {forward:.6f}, reverse {reverse:.6f})")
    return fit


@dataclass_json
@dataclass
class ShadowingRow:
    L: float
    lipschitz_estimate: float
    amplitude: float
    hausdorff: float


@dataclass_json
@dataclass
class ShadowingReport:
    seed: int
    window: float
    n: int
    rows: List[ShadowingRow] = field(default_factory=list)

    @property
    def monotone(self) -> bool:
        values = [r.hausdorff for r in sorted(self.rows, key=lambda r: r.L)]
        return all(b >= a - 1e-9 for a, b in zip(values, values[1:]))

    @property
    def exact_at_one(self) -> bool:
        return all(r.hausdorff <= GRID_SLACK for r in self.rows if r.L == 1.0)


def shadowing_regression(levels: Sequence[float] = (1.0, 1.01, 1.02, 1.05), seed: int = 0, window: float = 10.0,
                         n: int = 100) -> ShadowingReport:
    report = ShadowingReport(seed, window, n)
    for L in levels:
        q = make_bilipschitz_flat(L, seed, window, n)
        fit = fit_flat(q)
        report.rows.append(ShadowingRow(L, q.lipschitz_estimate, q.amplitude, fit.hausdorff))
    return report


# coarse intersections

@dataclass_json
@dataclass(frozen=True)
class SingularGeodesic:
    """A geodesic in one factor times a point in the other."""
    factor: int
    geodesic: Geodesic
    anchor: List[float]

    def _split(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        points = np.asarray(points, dtype=float)
        moving, fixed = (points[..., :3], points[..., 3:]) if self.factor == 0 else (points[..., 3:], points[..., :3])
        return moving, fixed

    def point(self, t) -> np.ndarray:
        moving = self.geodesic.point(t)
        fixed = np.broadcast_to(np.asarray(self.anchor, dtype=float), moving.shape)
        return np.concatenate([moving, fixed] if self.factor == 0 else [fixed, moving], axis=-1)

    def distance_to(self, points: np.ndarray) -> np.ndarray:
        moving, fixed = self._split(points)
        return np.hypot(self.geodesic.distance_to(moving), h2_distances(fixed, np.asarray(self.anchor)))

    def parameter_of(self, points: np.ndarray) -> np.ndarray:
        return self.geodesic.parameter_of(self._split(points)[0])


def _same_geodesic(a: Geodesic, b: Geodesic, tol: float = 1e-9) -> bool:
    return (float(circle_distance(a.backward, b.backward)) < tol and float(circle_distance(a.forward, b.forward)) < tol) \
        or (float(circle_distance(a.backward, b.forward)) < tol and float(circle_distance(a.forward, b.backward)) < tol)


def flat_intersection(f1: Flat, f2: Flat) -> Optional[SingularGeodesic]:
    """F1 cap F2 when the flats share exactly one factor geodesic and cross in the other."""
    for factor, (shared, a, b) in enumerate([(f1.first, f1.second, f2.second), (f1.second, f1.first, f2.first)]):
        other = f2.first if factor == 0 else f2.second
        if _same_geodesic(shared, other) and not _same_geodesic(a, b):
            p = crossing_point(a, b)
            if p is not None:
                return SingularGeodesic(factor, shared, p.tolist())
    return None


def _grid_near(f: Flat, g: Flat, radius: float, window: float, n: int) -> Tuple[np.ndarray, np.ndarray]:
    s = np.linspace(-window, window, n)
    u, v = np.meshgrid(s, s, indexing='ij')
    points = f.point(u.ravel(), v.ravel())
    keep = g.distance_to(points) <= radius
    return points[keep], np.column_stack([u.ravel()[keep], v.ravel()[keep]])


def _full_axes(params: np.ndarray, window: float, n: int) -> List[int]:
    reach = 2.0 * window - 2.0 * (2.0 * window / (n - 1))
    return [axis for axis in range(2) if float(np.ptp(params[:, axis])) >= reach]


def _fit_singular(points: np.ndarray, params: np.ndarray, factor: int) -> SingularGeodesic:
    moving = points[:, :3] if factor == 0 else points[:, 3:]
    fixed = points[:, 3:] if factor == 0 else points[:, :3]
    order = np.argsort(params[:, factor])
    initial = [float(ideal_angle(moving[order[0]])), float(ideal_angle(moving[order[-1]]))]
    angles, _ = _refine(initial, lambda a: Geodesic(a[0], a[1]),
                        lambda g: float(np.max(g.distance_to(moving))))
    anchor = _barycenter(fixed)
    return SingularGeodesic(factor, Geodesic(angles[0], angles[1]), anchor.tolist())


def _barycenter(points: np.ndarray) -> np.ndarray:
    unique = np.unique(np.round(points, 12), axis=0)
    weights = np.full(len(unique), 1.0 / len(unique))
    return solve_at(H2, weights, list(unique), guard=False).point.coords


def fit_coarse_intersection(f1: Flat, f2: Flat, radius: float, window: float = 10.0,
                            n: int = 100) -> Tuple[Optional[SingularGeodesic], np.ndarray, int]:
    """Sample N_R(F1) cap N_R(F2) from both flats' grids and fit a singular geodesic to it.

    Returns the fit (None unless the intersection is one-dimensional), the samples and the dimension estimate.
    """
    near1, params1 = _grid_near(f1, f2, radius, window, n)
    near2, _ = _grid_near(f2, f1, radius, window, n)
    if len(near1) == 0 and len(near2) == 0:
        raise DegenerateInputError(f"flats are disjoint at scale {radius}")
    samples = np.concatenate([near1, near2]) if len(near2) else near1
    axes = _full_axes(params1, window, n) if len(near1) else []
    dimension = len(axes)
    if dimension != 1:
        return None, samples, dimension
    return _fit_singular(near1, params1, axes[0]), samples, dimension


@dataclass_json
@dataclass
class IntersectionScale:
    radius: float
    samples: int
    dimension: int
    degenerate: bool
    spread: float
    fit_distance: Optional[float]

    @property
    def spread_ratio(self) -> float:
        return self.spread / self.radius

    @property
    def within_bound(self) -> bool:
        return self.spread <= 3.0 * self.radius


@dataclass_json
@dataclass
class CoarseIntersectionReport:
    window: float
    n: int
    shared: Optional[SingularGeodesic]
    scales: List[IntersectionScale] = field(default_factory=list)

    @property
    def stable(self) -> bool:
        ratios = [s.spread_ratio for s in self.scales if not s.degenerate]
        return not ratios or max(ratios) <= 2.0 * min(ratios)

    @property
    def holds(self) -> bool:
        return self.stable and all(s.within_bound for s in self.scales if not s.degenerate)


def _fit_to_reference(fit: SingularGeodesic, reference: SingularGeodesic, window: float, n: int) -> float:
    t = np.linspace(-window, window, n)
    there = float(np.max(reference.distance_to(fit.point(t))))
    back = float(np.max(fit.distance_to(reference.point(t))))
    return max(there, back)


def coarse_intersection_probe(f1: Flat, f2: Flat, radii: Sequence[float] = (2.0, 4.0, 8.0), window: float = 10.0,
                              n: int = 100) -> CoarseIntersectionReport:
    shared = flat_intersection(f1, f2)
    report = CoarseIntersectionReport(window, n, shared)
    for radius in radii:
        fit, samples, dimension = fit_coarse_intersection(f1, f2, radius, window, n)
        degenerate = dimension == 2
        spread = float(np.max(shared.distance_to(samples))) if shared is not None and not degenerate else 0.0
        distance = None
        if fit is not None and shared is not None and dimension == 1:
            distance = _fit_to_reference(fit, shared, 0.5 * window, n)
        scale = IntersectionScale(float(radius), len(samples), dimension, degenerate, spread, distance)
        if degenerate:
            logger.warning(f"R={radius}: coarse intersection is two-dimensional, the flats coincide on the window")
        else:
            logger.info(f"R={radius}: {len(samples)} samples, spread {spread:.4f} (ratio {scale.spread_ratio:.4f}), "
                        f"fit distance {distance}")
        report.scales.append(scale)
    return report


@dataclass_json
@dataclass
class ParallelismReport:
    radius: float
    sup_distance: float
    inf_distance: float

    @property
    def parallel(self) -> bool:
        return self.sup_distance - self.inf_distance <= PARALLEL_SLACK


def parallelism_check(f1: Flat, f2: Flat, f3: Flat, radius: float = 2.0, window: float = 10.0,
                      n: int = 100) -> ParallelismReport:
    """Distance between the fitted coarse intersections of (F1, F2) and (F1, F3) along the window; constant when parallel."""
    a, _, da = fit_coarse_intersection(f1, f2, radius, window, n)
    b, _, db = fit_coarse_intersection(f1, f3, radius, window, n)
    if a is None or b is None or da != 1 or db != 1:
        raise DegenerateInputError(f"coarse intersections are not one-dimensional (dimensions {da}, {db})")
    t = np.linspace(-0.5 * window, 0.5 * window, n)
    distances = b.distance_to(a.point(t))
    return ParallelismReport(float(radius), float(np.max(distances)), float(np.min(distances)))


def standard_flat_triple(shift: float = 2.0, angle: float = 0.5 * math.pi) -> Tuple[Flat, Flat, Flat]:
    """F1 = (a, b), F2 = (a, c), F3 = (a, d): c crosses b at the origin, d crosses b at b(shift), both at the given angle."""
    a = Geodesic(math.pi, 0.0)
    b = Geodesic(1.5 * math.pi, 0.5 * math.pi)
    o = H2.origin()
    rotate = np.array([[math.cos(angle), -math.sin(angle), 0.0], [math.sin(angle), math.cos(angle), 0.0], [0, 0, 1.0]])
    c = geodesic_through(o, rotate @ b.velocity(0.0))
    x = b.point(shift)
    tangent = b.velocity(shift)
    normal = b.normal()
    d = geodesic_through(x, math.cos(angle) * tangent + math.sin(angle) * normal)
    return Flat(a, b), Flat(a, c), Flat(a, d)
