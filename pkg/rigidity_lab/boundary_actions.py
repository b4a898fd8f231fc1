"""Expansion certificates, semi-conjugacy residuals and the probes built on them."""
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from dataclasses_json import dataclass_json
from loguru import logger

from rigidity_lab.circle import CircleMap, FiniteAction, circle_distance
from rigidity_lab.errors import ModelMismatchError

RESIDUAL_SAMPLES = 10_000
CERTIFICATE_RESOLUTION = 4096
COLLAPSE_TOLERANCE = 1e-12


@dataclass_json
@dataclass
class CoverArc:
    start: float
    end: float
    word: List[str]
    min_derivative: float

    @property
    def length(self) -> float:
        return self.end - self.start

    def depth(self, x: np.ndarray, period: float) -> np.ndarray:
        """Distance from x to the complement of the arc (0 outside)."""
        if self.length >= period:
            return np.full(np.shape(x), 0.5 * period)
        u = np.mod(np.asarray(x, dtype=float) - self.start, period)
        return np.where(u <= self.length, np.minimum(u, self.length - u), 0.0)


@dataclass_json
@dataclass
class ExpansionCertificate:
    lam: float
    cover: List[CoverArc]
    lebesgue_number: float
    max_word_length: int
    best_lambda: float
    region: Optional[List[float]] = None
    holds: bool = False
    message: str = ""

    @property
    def witness_length(self) -> int:
        return max((len(arc.word) for arc in self.cover), default=0)


def _region_grid(period: float, resolution: int, region: Optional[Sequence[float]]) -> np.ndarray:
    if region is None:
        return (np.arange(resolution) + 0.5) * period / resolution
    start, end = region
    return np.linspace(start, end, resolution)


def lebesgue_number(cover: Sequence[CoverArc], period: float, points: np.ndarray) -> float:
    """min over the points of the largest depth inside a cover element."""
    if not cover:
        return 0.0
    depths = np.max(np.array([arc.depth(points, period) for arc in cover]), axis=0)
    return float(np.min(depths))


def _good_arcs(action: FiniteAction, word: Tuple[str, ...], lam: float, grid: np.ndarray,
               step: float) -> List[CoverArc]:
    period = action.period
    derivative = action.word_derivative(word, grid)
    good = derivative >= lam
    if good.all():
        return [CoverArc(0.0, period, list(word), float(derivative.min()))]
    if not good.any():
        return []
    # rotate so the circular runs do not wrap
    first_bad = int(np.argmin(good))
    order = np.roll(np.arange(len(grid)), -first_bad)
    arcs = []
    run = []
    for i in list(order) + [order[0]]:
        if good[i]:
            run.append(i)
        elif run:
            start = grid[run[0]]
            length = (len(run) - 1) * step
            arcs.append(CoverArc(float(start), float(start + length), list(word), float(derivative[run].min())))
            run = []
    return [arc for arc in arcs if arc.length > 0]


def _tighten(action: FiniteAction, arc: CoverArc, lam: float, step: float, refinement: int) -> Optional[CoverArc]:
    """Shrink the arc until the derivative stays above lam on a refined grid."""
    while arc.length > 0:
        fine = np.linspace(arc.start, arc.end, max(3, int(round(arc.length / step)) * refinement + 1))
        low = float(np.min(action.word_derivative(arc.word, fine)))
        if low >= lam:
            return CoverArc(arc.start, arc.end, arc.word, low)
        arc = CoverArc(arc.start + step, arc.end - step, arc.word, arc.min_derivative)
    return None


def find_expansion_certificate(action: FiniteAction, lam: float, max_word_length: int = 6,
                               region: Optional[Sequence[float]] = None,
                               resolution: int = CERTIFICATE_RESOLUTION, refinement: int = 10) -> ExpansionCertificate:
    """Search words by increasing length for arcs where they expand by at least lam.

    Failure is reported in the certificate (holds False) together with the best lambda seen,
    the smallest over the circle of the largest derivative of any searched word.
    """
    period = action.period
    grid = (np.arange(resolution) + 0.5) * period / resolution
    step = period / resolution
    targets = _region_grid(period, resolution, region)
    best = np.zeros_like(grid)
    candidates: List[CoverArc] = []
    length = 0
    for word in action.reduced_words(max_word_length):
        if len(word) != length:
            if candidates and lebesgue_number(candidates, period, targets) > 0:
                break
            length = len(word)
        best = np.maximum(best, action.word_derivative(word, grid))
        for arc in _good_arcs(action, word, lam, grid, step):
            tightened = _tighten(action, arc, lam, step, refinement)
            if tightened is not None:
                candidates.append(tightened)
    best_lambda = float(np.min(best)) if region is None else float(np.min(np.interp(
        np.mod(targets, period), grid, best, period=period)))
    number = lebesgue_number(candidates, period, targets)
    if number <= 0:
        logger.info(f"no lambda={lam} certificate up to word length {max_word_length}; best lambda {best_lambda:.4f}")
        return ExpansionCertificate(lam, [], 0.0, max_word_length, best_lambda,
                                    list(region) if region is not None else None, False,
                                    f"no cover up to word length {max_word_length}")
    cover = _prune(candidates, period, targets)
    number = lebesgue_number(cover, period, targets)
    logger.info(f"lambda={lam} certificate with {len(cover)} arc(s), word length <= "
                f"{max(len(a.word) for a in cover)}, Lebesgue number {number:.4g}")
    return ExpansionCertificate(lam, cover, number, max_word_length, best_lambda,
                                list(region) if region is not None else None, True, "")


def _prune(candidates: List[CoverArc], period: float, points: np.ndarray) -> List[CoverArc]:
    depths = np.array([arc.depth(points, period) for arc in candidates])
    used = sorted(set(int(i) for i in np.argmax(depths, axis=0)))
    return [candidates[i] for i in used]


@dataclass_json
@dataclass
class CertificateCheck:
    lam: float
    worst_ratio: float
    lebesgue_number: float
    holds: bool = field(init=False)

    def __post_init__(self):
        self.holds = self.worst_ratio >= 1.0 and self.lebesgue_number > 0


def verify_certificate(action: FiniteAction, certificate: ExpansionCertificate, refinement: int = 10,
                       resolution: int = CERTIFICATE_RESOLUTION) -> CertificateCheck:
    """Re-check every witness on a grid finer than the search grid."""
    period = action.period
    worst = math.inf
    for arc in certificate.cover:
        fine = np.linspace(arc.start, arc.end, max(3, int(arc.length / period * resolution) * refinement + 1))
        worst = min(worst, float(np.min(action.word_derivative(arc.word, fine))) / certificate.lam)
    targets = _region_grid(period, resolution * refinement, certificate.region)
    return CertificateCheck(certificate.lam, worst if certificate.cover else 0.0,
                            lebesgue_number(certificate.cover, period, targets))


def _check_labels(rho: FiniteAction, rho0: FiniteAction):
    if set(rho.generators) != set(rho0.generators):
        raise ModelMismatchError(f"actions have different generators: {sorted(rho.generators)} vs {sorted(rho0.generators)}")


def semiconjugacy_residual(rho: FiniteAction, rho0: FiniteAction, phi: CircleMap,
                           samples: int = RESIDUAL_SAMPLES) -> float:
    """max over generators s and samples x of d(rho0(s) phi(x), phi(rho(s) x))."""
    _check_labels(rho, rho0)
    x = np.linspace(0.0, rho.period, samples, endpoint=False)
    phi_x = phi(x)
    worst = 0.0
    for label, f in rho.generators.items():
        lhs = rho0.generators[label](phi_x)
        rhs = phi(f(x))
        worst = max(worst, float(np.max(circle_distance(lhs, rhs, rho0.period))))
    return worst


def sup_distance(phi1: CircleMap, phi2: CircleMap, samples: int = RESIDUAL_SAMPLES) -> float:
    x = np.linspace(0.0, phi1.period, samples, endpoint=False)
    return float(np.max(circle_distance(phi1(x), phi2(x), phi1.target_period)))


def bilipschitz_distance(f: CircleMap, g: CircleMap, samples: int = RESIDUAL_SAMPLES) -> float:
    """sup |log f' - log g'|, the log of the Lipschitz constants of f o g^-1 and g o f^-1."""
    x = np.linspace(0.0, f.period, samples, endpoint=False)
    return float(np.max(np.abs(np.log(f.derivative_at(x)) - np.log(g.derivative_at(x)))))


@dataclass_json
@dataclass
class UniquenessVerdict:
    residual_first: float
    residual_second: float
    sup_distance: float
    lebesgue_number: Optional[float]
    preconditions_hold: bool
    verdict: Optional[bool]
    message: str = ""


def uniqueness_probe(rho: FiniteAction, rho0: FiniteAction, phi1: CircleMap, phi2: CircleMap,
                     certificate: Optional[ExpansionCertificate], tolerance: float = 1e-8,
                     conclusion_tolerance: float = 1e-6, samples: int = RESIDUAL_SAMPLES) -> UniquenessVerdict:
    """Two semi-conjugacies closer than the Lebesgue number of an expansion cover of rho0 coincide."""
    r1 = semiconjugacy_residual(rho, rho0, phi1, samples)
    r2 = semiconjugacy_residual(rho, rho0, phi2, samples)
    d = sup_distance(phi1, phi2, samples)
    number = certificate.lebesgue_number if certificate is not None and certificate.holds else None
    problems = []
    if r1 >= tolerance or r2 >= tolerance:
        problems.append(f"residuals {r1:.3g}, {r2:.3g} exceed {tolerance:.3g}")
    if number is None:
        problems.append("no expansion certificate for the target action")
    elif d >= number:
        problems.append(f"sup distance {d:.3g} is not below the Lebesgue number {number:.3g}")
    if problems:
        logger.info(f"uniqueness probe: preconditions unmet ({'; '.join(problems)})")
        return UniquenessVerdict(r1, r2, d, number, False, None, "; ".join(problems))
    return UniquenessVerdict(r1, r2, d, number, True, d < conclusion_tolerance)


@dataclass_json
@dataclass
class InjectivityReport:
    residual: float
    bilipschitz_distance: float
    expansion_margin: float
    preconditions_hold: bool
    scales: List[float]
    witnesses: int
    examples: List[List[float]]
    verdict: Optional[bool]
    message: str = ""

    @property
    def injective(self) -> bool:
        return self.witnesses == 0


def conjugacy_upgrade_probe(rho: FiniteAction, rho0: FiniteAction, phi: CircleMap,
                            certificate: Optional[ExpansionCertificate], tolerance: float = 1e-8,
                            samples: int = 1000, depth: int = 12,
                            collapse_tolerance: float = COLLAPSE_TOLERANCE) -> InjectivityReport:
    """Look for pairs x != y with phi(x) = phi(y) at scales epsilon / lambda'^n."""
    residual = semiconjugacy_residual(rho, rho0, phi)
    distance = max(bilipschitz_distance(rho.generators[s], rho0.generators[s]) for s in rho.generators)
    if certificate is not None and certificate.holds:
        margin = certificate.lam * math.exp(-certificate.witness_length * distance)
        epsilon = certificate.lebesgue_number
    else:
        margin = 0.0
        epsilon = 0.1 * rho.period
    problems = []
    if residual >= tolerance:
        problems.append(f"residual {residual:.3g} exceeds {tolerance:.3g}")
    if certificate is None or not certificate.holds:
        problems.append("no expansion certificate for the target action")
    elif margin <= 1.0:
        problems.append(f"biLipschitz distance {distance:.3g} leaves no expansion (lambda' = {margin:.4f})")
    ratio = margin if margin > 1.0 else 2.0
    scales = [epsilon / ratio ** n for n in range(depth)]
    x = np.linspace(0.0, rho.period, samples, endpoint=False)
    phi_x = phi(x)
    witnesses = 0
    examples = []
    for scale in scales:
        y = x + scale
        collapsed = circle_distance(phi_x, phi(y), phi.target_period) <= collapse_tolerance
        witnesses += int(np.count_nonzero(collapsed))
        for i in np.flatnonzero(collapsed)[:max(0, 5 - len(examples))]:
            examples.append([float(x[i]), float(y[i])])
    holds = not problems
    logger.debug(f"upgrade probe: {witnesses} collapse witness(es) over {len(scales)} scales")
    return InjectivityReport(residual, distance, margin, holds, scales, witnesses, examples,
                             (witnesses == 0) if holds else None, "; ".join(problems))
