"""Denjoy blow-up of a circle action along one orbit.

Each orbit point o_i is replaced by an inserted interval of length r_i. The blown-up action
carries inserted intervals affinely onto each other and agrees with the base action on the
complement; collapsing every inserted interval back to its orbit point semi-conjugates it
onto the base action.
"""
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from dataclasses_json import dataclass_json
from intervaltree import IntervalTree
from loguru import logger

from rigidity_lab.circle import CircleMap, FiniteAction, identity_map
from rigidity_lab.errors import ConstraintViolationError, DegenerateInputError

ORBIT_DEPTH_CAP = 10_000
ORBIT_POINT_CAP = 100_000
ORBIT_TOLERANCE = 1e-11
NUMERIC_INTERVAL_FLOOR = 1e-9


def geometric_schedule(count: int, offset: int = 4) -> List[float]:
    """r_i = 2^-(i + offset)."""
    return [2.0 ** -(i + offset) for i in range(count)]


def inverse_square_schedule(count: int, total: float = 0.5) -> List[float]:
    """r_i proportional to 1 / (i + 1)^2, scaled to the requested total."""
    raw = 1.0 / np.arange(1, count + 1, dtype=float) ** 2
    return list(total * raw / raw.sum())


class _OrbitIndex:
    """Orbit points of the circle keyed on a tolerance grid."""

    def __init__(self, period: float, tolerance: float):
        self.period = period
        self.tolerance = tolerance
        self.keys: Dict[int, int] = {}

    def _key(self, x: float) -> int:
        return int(round(x / self.tolerance))

    def find(self, x: float) -> int:
        for candidate in (x, x - self.period, x + self.period):
            key = self._key(candidate)
            for k in (key - 1, key, key + 1):
                if k in self.keys:
                    return self.keys[k]
        return -1

    def add(self, x: float, index: int):
        self.keys[self._key(x)] = index


def orbit(base: FiniteAction, seed: float, count: int, max_depth: int = ORBIT_DEPTH_CAP
          ) -> Tuple[List[float], List[int], Dict[str, List[int]]]:
    """Breadth-first orbit of the seed under the letters of the action.

    Returns the points in discovery order, their word lengths and, per letter, the index of
    the image of every point (-1 when the image was not reached).
    """
    period = base.period
    letters = base.letters
    maps = {letter: base.letter_map(letter) for letter in letters}
    index = _OrbitIndex(period, ORBIT_TOLERANCE * period)
    points = [float(np.mod(seed, period))]
    depths = [0]
    index.add(points[0], 0)
    queue = deque([0])
    while queue and len(points) < count:
        i = queue.popleft()
        if depths[i] >= max_depth:
            raise ConstraintViolationError(f"orbit depth cap {max_depth} reached with {len(points)} of {count} points")
        for letter in letters:
            image = float(np.mod(maps[letter].lift(np.float64(points[i])), period))
            if index.find(image) >= 0:
                continue
            index.add(image, len(points))
            points.append(image)
            depths.append(depths[i] + 1)
            queue.append(len(points) - 1)
            if len(points) >= count:
                break
    if len(points) < count:
        raise ConstraintViolationError(f"orbit of {seed} is finite ({len(points)} points); "
                                       f"cannot insert {count} intervals")
    images = {}
    for letter in letters:
        lifted = maps[letter].lift(np.asarray(points))
        images[letter] = [index.find(float(np.mod(y, period))) for y in lifted]
    return points, depths, images


@dataclass
class DenjoyBlowup:
    base: FiniteAction
    action: FiniteAction
    collapse: CircleMap
    points: List[float]
    lengths: List[float]
    images: Dict[str, List[int]]
    itree: IntervalTree = field(default_factory=IntervalTree)

    @property
    def inserted_length(self) -> float:
        return float(sum(self.lengths))

    @property
    def period(self) -> float:
        return self.action.period

    def interval_at(self, y: float) -> Optional[int]:
        """The orbit index of the inserted interval containing y, if any."""
        v = float(np.mod(y, self.period))
        hits = self.itree[v]
        if not hits:
            return None
        return next(iter(hits)).data

    def interval_bounds(self, i: int) -> Tuple[float, float]:
        for iv in self.itree:
            if iv.data == i:
                return iv.begin, iv.end
        raise ConstraintViolationError(f"orbit point {i} has no inserted interval")


class _BlowupGeometry:
    """Sorted orbit positions with cumulative inserted lengths."""

    def __init__(self, period: float, points: Sequence[float], lengths: Sequence[float]):
        self.period = period
        order = np.argsort(points)
        self.order = order
        self.rank = np.empty_like(order)
        self.rank[order] = np.arange(len(order))
        self.positions = np.asarray(points, dtype=float)[order]
        self.widths = np.asarray(lengths, dtype=float)[order]
        self.cumulative = np.concatenate([[0.0], np.cumsum(self.widths)])
        self.total = float(self.cumulative[-1])
        self.blown_period = period + self.total
        self.starts = self.positions + self.cumulative[:-1]

    def embed(self, x) -> np.ndarray:
        """Base point to blown-up point; orbit points go to the left end of their interval."""
        x = np.asarray(x, dtype=float)
        turns = np.floor(x / self.period)
        u = x - turns * self.period
        k = np.searchsorted(self.positions, u, side='left')
        return turns * self.blown_period + u + self.cumulative[k]

    def locate(self, y) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Turns, offset in one period, sorted index of the last interval start <= offset and inside flag."""
        y = np.asarray(y, dtype=float)
        turns = np.floor(y / self.blown_period)
        v = y - turns * self.blown_period
        k = np.searchsorted(self.starts, v, side='right') - 1
        safe = np.clip(k, 0, max(len(self.starts) - 1, 0))
        inside = (k >= 0) & (v <= self.starts[safe] + self.widths[safe])
        return turns, v, k, inside

    def collapse(self, y) -> np.ndarray:
        turns, v, k, inside = self.locate(y)
        safe = np.clip(k, 0, max(len(self.starts) - 1, 0))
        outside = v - self.cumulative[k + 1]
        return turns * self.period + np.where(inside, self.positions[safe], outside)


def _blown_generator(base_map: CircleMap, geometry: _BlowupGeometry, image_index: Sequence[int]
                     ) -> Tuple[Callable, Callable]:
    image_rank = np.array([geometry.rank[j] if j >= 0 else -1 for j in image_index], dtype=int)
    image_rank = image_rank[geometry.order]

    def lift(y):
        y = np.asarray(y, dtype=float)
        turns, v, k, inside = geometry.locate(y)
        safe = np.clip(k, 0, len(geometry.starts) - 1)
        out = geometry.embed(base_map.lift(geometry.collapse(y)))
        q = base_map.lift(geometry.positions[safe] + turns * geometry.period)
        m = image_rank[safe]
        m_safe = np.clip(m, 0, len(geometry.starts) - 1)
        target_width = np.where(m >= 0, geometry.widths[m_safe], 0.0)
        t = (v - geometry.starts[safe]) / np.where(geometry.widths[safe] > 0, geometry.widths[safe], 1.0)
        q_turns = np.round((q - geometry.positions[m_safe]) / geometry.period)
        into_interval = q_turns * geometry.blown_period + geometry.starts[m_safe] + t * target_width
        inserted = inside & (m >= 0)
        collapsed = inside & (m < 0)
        out = np.where(inserted, into_interval, out)
        return np.where(collapsed, geometry.embed(q), out)

    def derivative(y):
        y = np.asarray(y, dtype=float)
        _, _, k, inside = geometry.locate(y)
        safe = np.clip(k, 0, len(geometry.starts) - 1)
        m = image_rank[safe]
        m_safe = np.clip(m, 0, len(geometry.starts) - 1)
        ratio = np.where(m >= 0, geometry.widths[m_safe], 0.0) / geometry.widths[safe]
        return np.where(inside, ratio, base_map.derivative_at(geometry.collapse(y)))

    return lift, derivative


def denjoy_blowup(base: FiniteAction, seed: float, schedule: Sequence[float], max_total: Optional[float] = None,
                  max_depth: int = ORBIT_DEPTH_CAP) -> DenjoyBlowup:
    """Blow up the orbit of the seed, inserting an interval of length schedule[i] at the i-th orbit point."""
    period = base.period
    lengths = [float(r) for r in schedule]
    if any(r < 0 for r in lengths):
        raise DegenerateInputError("interval lengths must be non-negative")
    while lengths and lengths[-1] == 0.0:
        lengths.pop()
    if not lengths:
        return DenjoyBlowup(base, base, identity_map(period, "collapse"), [], [], {})
    if len(lengths) > ORBIT_POINT_CAP:
        raise ConstraintViolationError(f"schedule asks for {len(lengths)} orbit points, cap is {ORBIT_POINT_CAP}")
    budget = 0.5 * period if max_total is None else max_total
    total = math.fsum(lengths)
    while total >= budget:
        logger.warning(f"inserted length {total:.4g} exceeds {budget:.4g}; halving the schedule")
        lengths = [0.5 * r for r in lengths]
        total = math.fsum(lengths)
    points, depths, images = orbit(base, seed, len(lengths), max_depth)
    logger.info(f"blowing up {len(points)} orbit points (word length <= {max(depths)}), inserted length {total:.6g}")
    geometry = _BlowupGeometry(period, points, lengths)

    generators = {}
    for label, g in base.generators.items():
        lift, derivative = _blown_generator(g, geometry, images[label])
        inverse_lift = None
        inverse_label = base.inverse_labels.get(label)
        if inverse_label is not None:
            inverse_lift, _ = _blown_generator(base.letter_map(inverse_label), geometry,
                                               images[inverse_label])
        generators[label] = CircleMap(label, lift, derivative, inverse_lift, geometry.blown_period)
    action = FiniteAction(generators, list(base.relations), dict(base.inverse_labels), base.check_relations)
    collapse = CircleMap("collapse", geometry.collapse, None, None, geometry.blown_period, period)

    itree = IntervalTree()
    for i, width in enumerate(lengths):
        if width > 0:
            start = float(geometry.starts[geometry.rank[i]])
            itree[start:start + width] = i
    return DenjoyBlowup(base, action, collapse, points, lengths, images, itree)


def collapse_from_tree(blowup: DenjoyBlowup) -> CircleMap:
    """A second collapsing map read off the interval tree in blown-up coordinates."""
    intervals = sorted(blowup.itree)
    begins = np.array([iv.begin for iv in intervals])
    ends = np.array([iv.end for iv in intervals])
    removed = np.concatenate([[0.0], np.cumsum(ends - begins)])
    period = blowup.period
    base_period = blowup.base.period

    def lift(y):
        y = np.asarray(y, dtype=float)
        turns = np.floor(y / period)
        v = y - turns * period
        k = np.searchsorted(begins, v, side='right') - 1
        safe = np.clip(k, 0, len(begins) - 1)
        inside = (k >= 0) & (v <= ends[safe])
        point = begins[safe] - removed[safe]
        outside = v - removed[k + 1]
        return turns * base_period + np.where(inside, point, outside)

    return CircleMap("collapse-tree", lift, None, None, period, base_period)


@dataclass_json
@dataclass
class InvarianceReport:
    letter: str
    start_index: int
    iterations: int
    steps_inside: int
    numeric_steps: int
    numeric_agreement: int
    left_at: Optional[int] = None

    @property
    def holds(self) -> bool:
        return self.left_at is None and self.numeric_agreement == self.numeric_steps


def invariance_check(blowup: DenjoyBlowup, letter: Optional[str] = None, iterations: int = 10_000,
                     start_index: int = 0) -> InvarianceReport:
    """Follow an interior point of an inserted interval under one generator.

    The orbit index is followed exactly; the numeric blown-up map is compared against it while
    the interval is longer than NUMERIC_INTERVAL_FLOOR.
    """
    if not blowup.lengths:
        raise DegenerateInputError("nothing was inserted")
    letter = letter or blowup.action.labels[0]
    f = blowup.action.letter_map(letter)
    images = blowup.images[letter]
    index = start_index
    begin, end = blowup.interval_bounds(index)
    y = 0.5 * (begin + end)
    numeric = True
    numeric_steps = 0
    agreement = 0
    left_at = None
    steps = 0
    for n in range(1, iterations + 1):
        index = images[index]
        if index < 0 or blowup.lengths[index] <= 0:
            left_at = n
            break
        steps = n
        if numeric:
            y = float(f.lift(np.float64(y)))
            if blowup.lengths[index] < NUMERIC_INTERVAL_FLOOR * blowup.period:
                numeric = False
                continue
            numeric_steps += 1
            if blowup.interval_at(y) == index:
                agreement += 1
    report = InvarianceReport(letter, start_index, iterations, steps, numeric_steps, agreement, left_at)
    logger.info(f"invariance under {letter}: {steps} step(s) inside inserted intervals, "
                f"{agreement}/{numeric_steps} numeric agreement")
    return report


def monotonicity_defect(phi: CircleMap, samples: int = 10_000) -> float:
    """Largest backwards step of the lift on a grid, and the degree error over one period."""
    x = np.linspace(0.0, phi.period, samples + 1)
    y = phi.lift(x)
    backwards = float(max(0.0, -np.min(np.diff(y))))
    degree = abs(float(y[-1] - y[0]) - phi.target_period)
    return max(backwards, degree)
