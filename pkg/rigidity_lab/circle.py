"""Circle homeomorphisms given by their lifts to the real line, and finitely generated circle actions.

A circle of period P is R / P Z. A map between circles of periods P and P' is stored as a monotone
lift F with F(x + P) = F(x) + P'. Words are tuples of generator labels acting right to left, so
the word (a, b) is the map a o b.
"""
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy import linalg, optimize

from rigidity_lab.errors import ConstraintViolationError, ModelMismatchError
from rigidity_lab.lie import boundary_angle_derivative, positive_qr

TWO_PI = 2 * math.pi
RELATION_SAMPLES = 10_000
RELATION_TOLERANCE = 1e-8
DERIVATIVE_STEP = 1e-6

Word = Tuple[str, ...]
Lift = Callable[[np.ndarray], np.ndarray]


def circle_distance(x, y, period: float = TWO_PI) -> np.ndarray:
    d = np.mod(np.asarray(x, dtype=float) - np.asarray(y, dtype=float), period)
    return np.minimum(d, period - d)


def unwrap_near(x, reference, period: float = TWO_PI) -> np.ndarray:
    """The representative of x modulo the period closest to the reference."""
    x = np.asarray(x, dtype=float)
    return x - period * np.round((x - reference) / period)


@dataclass(frozen=True)
class CircleMap:
    label: str
    lift: Lift
    derivative: Optional[Lift] = None
    inverse_lift: Optional[Lift] = None
    period: float = TWO_PI
    target_period: Optional[float] = None

    def __post_init__(self):
        if self.target_period is None:
            object.__setattr__(self, 'target_period', self.period)

    def __call__(self, x) -> np.ndarray:
        return np.mod(self.lift(np.asarray(x, dtype=float)), self.target_period)

    def derivative_at(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.derivative is not None:
            return self.derivative(x)
        h = DERIVATIVE_STEP * self.period
        return (self.lift(x + h) - self.lift(x - h)) / (2 * h)

    def compose(self, inner: 'CircleMap', label: Optional[str] = None) -> 'CircleMap':
        """self o inner."""
        if not math.isclose(inner.target_period, self.period, rel_tol=1e-12):
            raise ModelMismatchError(f"cannot compose {self.label} (period {self.period}) after "
                                     f"{inner.label} (target period {inner.target_period})")
        outer = self

        def lift(x):
            return outer.lift(inner.lift(x))

        def derivative(x):
            return outer.derivative_at(inner.lift(x)) * inner.derivative_at(x)

        inverse_lift = None
        if outer.inverse_lift is not None and inner.inverse_lift is not None:
            def inverse_lift(y):
                return inner.inverse_lift(outer.inverse_lift(y))

        return CircleMap(label or f"{outer.label}.{inner.label}", lift, derivative, inverse_lift,
                         inner.period, outer.target_period)

    def inverse(self, label: Optional[str] = None) -> 'CircleMap':
        if self.inverse_lift is None:
            raise ConstraintViolationError(f"circle map {self.label} has no inverse lift")
        forward = self

        def derivative(y):
            return 1.0 / forward.derivative_at(forward.inverse_lift(y))

        return CircleMap(label or f"{self.label}^-1", self.inverse_lift, derivative, self.lift,
                         self.target_period, self.period)

    def iterate(self, x, n: int) -> np.ndarray:
        """The n-th iterate of the lift."""
        if n < 0:
            return self.inverse().iterate(x, -n)
        y = np.asarray(x, dtype=float)
        for _ in range(n):
            y = self.lift(y)
        return y


def identity_map(period: float = TWO_PI, label: str = "id") -> CircleMap:
    def same(x):
        return np.asarray(x, dtype=float).copy()

    return CircleMap(label, same, lambda x: np.ones_like(np.asarray(x, dtype=float)), same, period)


def rotation(angle: float, period: float = TWO_PI, label: str = "rotation") -> CircleMap:
    return CircleMap(label, lambda x: np.asarray(x, dtype=float) + angle,
                     lambda x: np.ones_like(np.asarray(x, dtype=float)),
                     lambda y: np.asarray(y, dtype=float) - angle, period)


def _mobius_lift(m: np.ndarray) -> Lift:
    q, r = positive_qr(m)
    shift = 2.0 * math.atan2(q[1, 0], q[0, 0])

    def lift(psi):
        psi = np.asarray(psi, dtype=float)
        turns = np.floor(psi / TWO_PI)
        phi = 0.5 * (psi - TWO_PI * turns)
        x = r[0, 0] * np.cos(phi) + r[0, 1] * np.sin(phi)
        y = r[1, 1] * np.sin(phi)
        y = np.where(y < 0, 0.0, y) + 0.0
        return TWO_PI * turns + 2.0 * np.arctan2(y, x) + shift

    return lift


def mobius_map(label: str, m: np.ndarray) -> CircleMap:
    """The boundary action of a matrix of SL(2, R) on angles psi in [0, 2 pi)."""
    m = np.asarray(m, dtype=float)
    forward = _mobius_lift(m)
    backward = _mobius_lift(linalg.inv(m))
    offset = -TWO_PI * round(float(forward(backward(np.float64(0.0)))) / TWO_PI)

    def inverse_lift(y):
        return backward(y) + offset

    return CircleMap(label, forward, lambda psi: boundary_angle_derivative(m, psi), inverse_lift)


def trig_homeomorphism(amplitude: float, mode: int = 1, phase: float = 0.0, period: float = TWO_PI,
                       label: str = "h") -> CircleMap:
    """x -> x + amplitude * sin(2 pi mode x / period + phase), displacement at most the amplitude."""
    k = TWO_PI * mode / period
    if abs(amplitude) * k >= 1.0:
        raise ConstraintViolationError(f"amplitude {amplitude} is too large for a homeomorphism of mode {mode}")

    def lift(x):
        x = np.asarray(x, dtype=float)
        return x + amplitude * np.sin(k * x + phase)

    def derivative(x):
        return 1.0 + amplitude * k * np.cos(k * np.asarray(x, dtype=float) + phase)

    def inverse_lift(y):
        y = np.asarray(y, dtype=float)
        return optimize.newton(lambda x: lift(x) - y, y, fprime=derivative, tol=1e-14, maxiter=100)

    return CircleMap(label, lift, derivative, inverse_lift, period)


def rotation_number(f: CircleMap, x0: float = 0.0, iterations: int = 1000) -> float:
    """Rotation number in turns, estimated from an orbit of the lift."""
    if not math.isclose(f.period, f.target_period, rel_tol=1e-12):
        raise ModelMismatchError(f"{f.label} maps between circles of different periods")
    x = f.iterate(np.float64(x0), iterations)
    return float((x - x0) / (iterations * f.period))


@dataclass
class FiniteAction:
    generators: Dict[str, CircleMap]
    relations: List[Word] = field(default_factory=list)
    inverse_labels: Dict[str, str] = field(default_factory=dict)
    check_relations: bool = True

    def __post_init__(self):
        if not self.generators:
            raise ConstraintViolationError("an action needs at least one generator")
        periods = {round(g.period, 12) for g in self.generators.values()}
        periods |= {round(g.target_period, 12) for g in self.generators.values()}
        if len(periods) != 1:
            raise ModelMismatchError(f"generators act on circles of different periods: {sorted(periods)}")
        pairs = dict(self.inverse_labels)
        for a, b in self.inverse_labels.items():
            pairs[b] = a
        self.inverse_labels = pairs
        self.relations = [tuple(r) for r in self.relations]
        if self.check_relations and self.relations:
            residual = self.relation_residual()
            if residual > RELATION_TOLERANCE:
                raise ConstraintViolationError(f"relations hold only up to {residual:.3g}")

    @property
    def period(self) -> float:
        return next(iter(self.generators.values())).period

    @property
    def labels(self) -> List[str]:
        return list(self.generators)

    @property
    def letters(self) -> List[str]:
        """Generator labels and the labels of their inverses."""
        out = list(self.generators)
        for label in self.generators:
            inverse = self.inverse_labels.get(label)
            if inverse is not None and inverse not in out:
                out.append(inverse)
        return out

    def letter_map(self, letter: str) -> CircleMap:
        if letter in self.generators:
            return self.generators[letter]
        base = self.inverse_labels.get(letter)
        if base is not None and base in self.generators:
            return self.generators[base].inverse(letter)
        raise ModelMismatchError(f"unknown letter {letter}; known: {self.letters}")

    def inverse_letter(self, letter: str) -> str:
        if letter not in self.inverse_labels:
            raise ModelMismatchError(f"no inverse recorded for {letter}")
        return self.inverse_labels[letter]

    def inverse_word(self, word: Sequence[str]) -> Word:
        return tuple(self.inverse_letter(letter) for letter in reversed(word))

    def evaluate_lift(self, word: Sequence[str], x) -> np.ndarray:
        y = np.asarray(x, dtype=float)
        for letter in reversed(tuple(word)):
            y = self.letter_map(letter).lift(y)
        return y

    def evaluate(self, word: Sequence[str], x) -> np.ndarray:
        return np.mod(self.evaluate_lift(word, x), self.period)

    def word_derivative(self, word: Sequence[str], x) -> np.ndarray:
        y = np.asarray(x, dtype=float)
        total = np.ones_like(y)
        for letter in reversed(tuple(word)):
            f = self.letter_map(letter)
            total = total * f.derivative_at(y)
            y = f.lift(y)
        return total

    def word_map(self, word: Sequence[str]) -> CircleMap:
        word = tuple(word)
        if not word:
            return identity_map(self.period)
        result = self.letter_map(word[-1])
        for letter in reversed(word[:-1]):
            result = self.letter_map(letter).compose(result)
        return result

    def relation_residual(self, samples: int = RELATION_SAMPLES) -> float:
        x = np.linspace(0.0, self.period, samples, endpoint=False)
        worst = 0.0
        for relation in self.relations:
            worst = max(worst, float(np.max(circle_distance(self.evaluate(relation, x), x, self.period))))
        logger.debug(f"relation residual over {len(self.relations)} relation(s): {worst:.3g}")
        return worst

    def reduced_words(self, max_length: int) -> Iterator[Word]:
        """Freely reduced words in the letters, by increasing length."""
        letters = self.letters
        layer: List[Word] = [()]
        for _ in range(max_length):
            next_layer = []
            for word in layer:
                for letter in letters:
                    if word and self.inverse_labels.get(word[-1]) == letter:
                        continue
                    extended = word + (letter,)
                    next_layer.append(extended)
                    yield extended
            layer = next_layer

    def conjugate(self, h: CircleMap) -> 'FiniteAction':
        """The action s -> h^-1 o s o h, semi-conjugate to this one through h."""
        h_inverse = h.inverse()
        generators = {label: h_inverse.compose(g.compose(h), label) for label, g in self.generators.items()}
        return FiniteAction(generators, list(self.relations), dict(self.inverse_labels), self.check_relations)
