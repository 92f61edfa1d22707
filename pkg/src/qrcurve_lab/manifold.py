"""Target manifolds (Euclidean space, unit-lattice flat torus) and form fields on them."""
import abc
import itertools
import math
import re
from enum import Enum
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, conint

from qrcurve_lab.errors import DegreeError, DimensionMismatchError
from qrcurve_lab.exterior import Covector, MultiIndex, comass, sort_with_sign
from qrcurve_lab.logging import getLogger
from qrcurve_lab.models.specs import OptimizerConfig

logger = getLogger(name=__name__)

TWO_PI = 2.0 * math.pi
DEFAULT_STEP = 1e-5


class ManifoldKind(str, Enum):
    EUCLIDEAN = "euclidean"
    FLAT_TORUS = "flat_torus"


class TargetManifold(BaseModel):
    kind: ManifoldKind
    dim: conint(ge=2)

    class Config:
        frozen = True

    @classmethod
    def euclidean(cls, m: int) -> "TargetManifold":
        return cls(kind=ManifoldKind.EUCLIDEAN, dim=m)

    @classmethod
    def flat_torus(cls, m: int) -> "TargetManifold":
        return cls(kind=ManifoldKind.FLAT_TORUS, dim=m)

    @property
    def is_torus(self) -> bool:
        return self.kind == ManifoldKind.FLAT_TORUS

    def distance(self, a, b):
        if self.is_torus:
            return torus_distance(a, b)
        return np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), axis=-1)

    def sample(self, count: int, seed: int = 0, box: Tuple[float, float] = (-1.0, 1.0)) -> np.ndarray:
        """Uniform points: the fundamental domain [0,1)^m on a torus, the box otherwise."""
        rng = np.random.default_rng(seed)
        low, high = (0.0, 1.0) if self.is_torus else box
        return rng.uniform(low, high, size=(count, self.dim))

    def __str__(self) -> str:
        return f"T^{self.dim}" if self.is_torus else f"R^{self.dim}"


def canonical_rep(a) -> np.ndarray:
    """Componentwise reduction of covering coordinates to [0, 1)."""
    reduced = np.mod(np.asarray(a, dtype=float), 1.0)
    return np.where(reduced >= 1.0, 0.0, reduced)


def torus_distance(a, b):
    """Flat distance on R^m / Z^m, vectorized over leading axes.

    The unit lattice is orthogonal, so the minimum over the 3^m translates of
    the canonical difference splits into independent per-coordinate minima.
    """
    delta = canonical_rep(a) - canonical_rep(b)
    wrapped = np.minimum(np.abs(delta), 1.0 - np.abs(delta))
    return np.sqrt(np.sum(wrapped * wrapped, axis=-1))


class Coefficient(abc.ABC):
    """A scalar function evaluated on stacked points of shape (N, m)."""

    periodic: bool = False

    @abc.abstractmethod
    def __call__(self, points: np.ndarray) -> np.ndarray:
        ...

    def partial(self, coordinate: int, h: float = DEFAULT_STEP) -> "Coefficient":
        """Derivative in the 0-based coordinate; analytic when the subclass knows it."""
        return FiniteDifference(self, coordinate, h)

    @property
    def sup(self) -> Optional[float]:
        return None

    @property
    def constant_value(self) -> Optional[float]:
        return None

    @property
    def is_zero(self) -> bool:
        return self.constant_value == 0.0

    @property
    def tag(self) -> str:
        return type(self).__name__.lower()


class Constant(Coefficient):
    periodic = True

    def __init__(self, value: float = 1.0):
        self.value = float(value)

    def __call__(self, points):
        return np.full(np.shape(points)[0], self.value)

    def partial(self, coordinate, h=DEFAULT_STEP):
        return Constant(0.0)

    @property
    def sup(self):
        return abs(self.value)

    @property
    def constant_value(self):
        return self.value

    @property
    def tag(self):
        return "const"


class Trig(Coefficient):
    """amplitude * sin(2 pi x_j + phase); `sin:j` and `cos:j` in configs."""

    periodic = True

    def __init__(self, coordinate: int, amplitude: float = 1.0, phase: float = 0.0):
        self.coordinate = coordinate
        self.amplitude = float(amplitude)
        self.phase = float(phase)

    @classmethod
    def sin(cls, coordinate: int) -> "Trig":
        return cls(coordinate)

    @classmethod
    def cos(cls, coordinate: int) -> "Trig":
        return cls(coordinate, phase=math.pi / 2)

    def __call__(self, points):
        return self.amplitude * np.sin(TWO_PI * points[:, self.coordinate] + self.phase)

    def partial(self, coordinate, h=DEFAULT_STEP):
        if coordinate != self.coordinate:
            return Constant(0.0)
        return Trig(self.coordinate, TWO_PI * self.amplitude, self.phase + math.pi / 2)

    @property
    def sup(self):
        return abs(self.amplitude)

    @property
    def tag(self):
        return f"trig:{self.coordinate + 1}"


class Linear(Coefficient):
    """x_j; only meaningful on Euclidean targets."""

    def __init__(self, coordinate: int):
        self.coordinate = coordinate

    def __call__(self, points):
        return np.asarray(points[:, self.coordinate], dtype=float)

    def partial(self, coordinate, h=DEFAULT_STEP):
        return Constant(1.0 if coordinate == self.coordinate else 0.0)

    @property
    def tag(self):
        return f"lin:{self.coordinate + 1}"


class Gaussian(Coefficient):
    """exp(-|x - center|^2 / (2 width^2)); a smooth bump for Euclidean targets."""

    def __init__(self, width: float, center: Optional[Sequence[float]] = None):
        self.width = float(width)
        self.center = None if center is None else np.asarray(center, dtype=float)

    def __call__(self, points):
        shifted = points if self.center is None else points - self.center
        return np.exp(-np.sum(shifted * shifted, axis=1) / (2.0 * self.width ** 2))

    @property
    def sup(self):
        return 1.0

    @property
    def tag(self):
        return f"gauss:{self.width}"


class Product(Coefficient):
    def __init__(self, *factors: Coefficient):
        self.factors = factors
        self.periodic = all(f.periodic for f in factors)

    def __call__(self, points):
        value = np.ones(np.shape(points)[0])
        for factor in self.factors:
            value = value * factor(points)
        return value

    def partial(self, coordinate, h=DEFAULT_STEP):
        summands = []
        for i, factor in enumerate(self.factors):
            derivative = factor.partial(coordinate, h)
            if derivative.is_zero:
                continue
            summands.append(Product(*self.factors[:i], derivative, *self.factors[i + 1:]))
        return Sum(*summands) if summands else Constant(0.0)

    @property
    def sup(self):
        bounds = [f.sup for f in self.factors]
        return None if any(b is None for b in bounds) else float(np.prod(bounds))

    @property
    def constant_value(self):
        values = [f.constant_value for f in self.factors]
        return None if any(v is None for v in values) else float(np.prod(values))


class Sum(Coefficient):
    def __init__(self, *summands: Coefficient):
        self.summands = summands
        self.periodic = all(s.periodic for s in summands)

    def __call__(self, points):
        value = np.zeros(np.shape(points)[0])
        for summand in self.summands:
            value = value + summand(points)
        return value

    def partial(self, coordinate, h=DEFAULT_STEP):
        parts = [s.partial(coordinate, h) for s in self.summands]
        parts = [p for p in parts if not p.is_zero]
        return Sum(*parts) if parts else Constant(0.0)

    @property
    def sup(self):
        bounds = [s.sup for s in self.summands]
        return None if any(b is None for b in bounds) else float(sum(bounds))

    @property
    def constant_value(self):
        values = [s.constant_value for s in self.summands]
        return None if any(v is None for v in values) else float(sum(values))


class FiniteDifference(Coefficient):
    """Central difference of another coefficient along one coordinate."""

    def __init__(self, base: Coefficient, coordinate: int, h: float = DEFAULT_STEP):
        if h <= 0:
            raise ValueError("finite-difference step must be positive")
        self.base = base
        self.coordinate = coordinate
        self.h = h
        self.periodic = base.periodic

    def __call__(self, points):
        shift = np.zeros(np.shape(points)[1])
        shift[self.coordinate] = self.h
        return (self.base(points + shift) - self.base(points - shift)) / (2.0 * self.h)


class FunctionCoefficient(Coefficient):
    """A user-supplied vectorized function with an optional analytic gradient (N, m) -> (N, m)."""

    def __init__(self, function, gradient=None, periodic: bool = False, sup: Optional[float] = None, name: str = "fn"):
        self.function = function
        self.gradient = gradient
        self.periodic = periodic
        self._sup = sup
        self.name = name

    def __call__(self, points):
        return np.asarray(self.function(points), dtype=float)

    def partial(self, coordinate, h=DEFAULT_STEP):
        if self.gradient is None:
            return FiniteDifference(self, coordinate, h)
        gradient = self.gradient
        return FunctionCoefficient(
            lambda points: np.asarray(gradient(points), dtype=float)[:, coordinate],
            periodic=self.periodic,
            name=f"d{coordinate + 1}{self.name}",
        )

    @property
    def sup(self):
        return self._sup

    @property
    def tag(self):
        return self.name


_TAG = re.compile(r"\*\s*(const|sin:\d+|cos:\d+|lin:\d+|gauss:\d+(?:\.\d+)?)\s*$")


def parse_coefficient_tag(tag: str, m: int) -> Coefficient:
    name, _, argument = tag.partition(":")
    if name == "const":
        return Constant(1.0)
    if name == "gauss":
        return Gaussian(float(argument))
    coordinate = int(argument)
    if not 1 <= coordinate <= m:
        raise DimensionMismatchError(f"coefficient tag {tag!r} names coordinate outside 1..{m}")
    if name == "sin":
        return Trig.sin(coordinate - 1)
    if name == "cos":
        return Trig.cos(coordinate - 1)
    return Linear(coordinate - 1)


class FormTerm(NamedTuple):
    index: MultiIndex
    coefficient: Coefficient
    weight: float = 1.0


class FormField:
    """A degree-k differential form sum_t weight_t * c_t(x) dx_{I_t} on a target manifold.

    Points are covering coordinates. On a flat torus every coefficient must be
    Z^m-periodic. `is_closed` and `sup_bound` are declarations, checked
    statistically by `check_closed` and `check_sup_bound`.
    """

    def __init__(
        self,
        target: TargetManifold,
        degree: int,
        terms: Sequence[FormTerm] = (),
        is_closed: bool = False,
        sup_bound: Optional[float] = None,
        name: str = "",
    ):
        m = target.dim
        if not 0 <= degree:
            raise DegreeError(f"form degree must be nonnegative, got {degree}")
        kept = []
        for term in terms:
            index = MultiIndex(term.index, ambient_dim=m)
            if index.degree != degree:
                raise DegreeError(f"form {name!r}: term {index} has degree {index.degree}, expected {degree}")
            if target.is_torus and not term.coefficient.periodic:
                raise DimensionMismatchError(f"form {name!r}: coefficient {term.coefficient.tag} is not Z^{m}-periodic")
            if term.weight == 0.0 or term.coefficient.is_zero:
                continue
            kept.append(FormTerm(index, term.coefficient, float(term.weight)))
        self.target = target
        self.degree = degree
        self.terms: Tuple[FormTerm, ...] = tuple(kept)
        self.is_closed = is_closed
        self.sup_bound = sup_bound
        self.name = name

    @classmethod
    def constant(
        cls,
        target: TargetManifold,
        covector: Covector,
        is_closed: bool = True,
        sup_bound: Optional[float] = None,
        name: str = "",
    ) -> "FormField":
        if covector.ambient_dim != target.dim:
            raise DimensionMismatchError(f"covector lives in R^{covector.ambient_dim}, target is {target}")
        terms = [FormTerm(index, Constant(1.0), value) for index, value in covector.coeffs.items()]
        return cls(target, covector.degree, terms, is_closed=is_closed, sup_bound=sup_bound, name=name)

    @classmethod
    def zero(cls, target: TargetManifold, degree: int, name: str = "") -> "FormField":
        return cls(target, degree, (), is_closed=True, sup_bound=0.0, name=name)

    @classmethod
    def parse(
        cls,
        target: TargetManifold,
        degree: int,
        literals: Sequence[str],
        is_closed: bool = False,
        sup_bound: Optional[float] = None,
        name: str = "",
    ) -> "FormField":
        """Build from literals ``"<covector literal> [* tag]"``, e.g. ``"0.5 dx1 * sin:3"``."""
        terms: List[FormTerm] = []
        for literal in literals:
            match = _TAG.search(literal)
            coefficient: Coefficient = Constant(1.0)
            body = literal
            if match:
                coefficient = parse_coefficient_tag(match.group(1), target.dim)
                body = literal[: match.start()]
            covector = Covector.parse(body, target.dim, degree=degree)
            terms.extend(FormTerm(index, coefficient, value) for index, value in covector.coeffs.items())
        return cls(target, degree, terms, is_closed=is_closed, sup_bound=sup_bound, name=name)

    @property
    def ambient_dim(self) -> int:
        return self.target.dim

    @property
    def is_constant(self) -> bool:
        return all(term.coefficient.constant_value is not None for term in self.terms)

    def index_array(self) -> np.ndarray:
        return np.array([term.index.zero_based() for term in self.terms], dtype=int).reshape(-1, self.degree)

    def coefficient_matrix(self, points: np.ndarray) -> np.ndarray:
        """weight_t * c_t(x) for stacked points (N, m), shape (N, terms)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.ambient_dim:
            raise DimensionMismatchError(f"points have {points.shape[1]} coordinates, form lives on {self.target}")
        if not self.terms:
            return np.zeros((points.shape[0], 0))
        return np.column_stack([term.weight * term.coefficient(points) for term in self.terms])

    def evaluate_on(self, points: np.ndarray, frames: np.ndarray) -> np.ndarray:
        """omega_{p}(frame) for stacked points (N, m) and frames (N, m, k)."""
        coefficients = self.coefficient_matrix(points)
        if not self.terms:
            return np.zeros(coefficients.shape[0])
        if self.degree == 0:
            return coefficients.sum(axis=1)
        minors = np.linalg.det(np.asarray(frames, dtype=float)[:, self.index_array(), :])
        return np.sum(minors * coefficients, axis=1)

    def __add__(self, other: "FormField") -> "FormField":
        self._check_compatible(other)
        sup = None if self.sup_bound is None or other.sup_bound is None else self.sup_bound + other.sup_bound
        return FormField(
            self.target,
            self.degree,
            self.terms + other.terms,
            is_closed=self.is_closed and other.is_closed,
            sup_bound=sup,
            name=f"({self.name} + {other.name})",
        )

    def scale(self, factor: float) -> "FormField":
        return FormField(
            self.target,
            self.degree,
            [FormTerm(t.index, t.coefficient, factor * t.weight) for t in self.terms],
            is_closed=self.is_closed,
            sup_bound=None if self.sup_bound is None else abs(factor) * self.sup_bound,
            name=f"{factor}*{self.name}",
        )

    def __neg__(self) -> "FormField":
        return self.scale(-1.0)

    def __sub__(self, other: "FormField") -> "FormField":
        return self + (-other)

    def wedge(self, other: "FormField") -> "FormField":
        if other.target != self.target:
            raise DimensionMismatchError(f"forms live on {self.target} and {other.target}")
        degree = self.degree + other.degree
        terms = []
        if degree <= self.ambient_dim:
            for a, b in itertools.product(self.terms, other.terms):
                sign, index = sort_with_sign(a.index + b.index)
                if index is None:
                    continue
                coefficient = _multiply(a.coefficient, b.coefficient)
                terms.append(FormTerm(index, coefficient, sign * a.weight * b.weight))
        sup = None if self.sup_bound is None or other.sup_bound is None else self.sup_bound * other.sup_bound
        return FormField(
            self.target,
            degree,
            terms,
            is_closed=self.is_closed and other.is_closed,
            sup_bound=sup,
            name=f"{self.name}^{other.name}",
        )

    def _check_compatible(self, other: "FormField"):
        if other.target != self.target:
            raise DimensionMismatchError(f"forms live on {self.target} and {other.target}")
        if other.degree != self.degree:
            raise DegreeError(f"form degrees differ: {self.degree} vs {other.degree}")

    def check_closed(self, samples: int = 32, seed: int = 0, h: float = DEFAULT_STEP) -> bool:
        points = self.target.sample(samples, seed=seed)
        for point in points:
            residual = exterior_derivative(self, point, h).norm()
            scale = 1.0 + float(np.max(np.abs(self.coefficient_matrix(point)), initial=0.0))
            if residual > 1e-6 * scale:
                logger.warning(
                    "form declared closed has nonzero exterior derivative",
                    extra={"context": {"form": self.name, "point": point.tolist(), "residual": residual}},
                )
                return False
        return True

    def check_sup_bound(self, samples: int = 256, seed: int = 0, cfg: Optional[OptimizerConfig] = None) -> bool:
        if self.sup_bound is None:
            return True
        points = self.target.sample(1 if self.is_constant else samples, seed=seed)
        observed = max((comass(eval_form(self, p), cfg) for p in points), default=0.0)
        return observed <= self.sup_bound * (1 + 1e-6)

    def __repr__(self) -> str:
        return f"FormField({self.name!r}, degree={self.degree}, target={self.target}, terms={len(self.terms)})"


def _multiply(a: Coefficient, b: Coefficient) -> Coefficient:
    if a.constant_value is not None and b.constant_value is not None:
        return Constant(a.constant_value * b.constant_value)
    if a.constant_value == 1.0:
        return b
    if b.constant_value == 1.0:
        return a
    return Product(a, b)


def eval_form(form: FormField, x) -> Covector:
    """The fiber covector form_x at covering coordinates x."""
    point = np.asarray(x, dtype=float).reshape(1, -1)
    values = form.coefficient_matrix(point)[0]
    coeffs: Dict[MultiIndex, float] = {}
    for term, value in zip(form.terms, values):
        coeffs[term.index] = coeffs.get(term.index, 0.0) + float(value)
    return Covector(form.ambient_dim, form.degree, coeffs)


def derivative_field(form: FormField, h: float = DEFAULT_STEP) -> FormField:
    """d(form) as a form field of degree k + 1 (analytic partials where known)."""
    m = form.ambient_dim
    terms = []
    if form.degree < m:
        for term in form.terms:
            for j in range(m):
                if (j + 1) in term.index:
                    continue
                derivative = term.coefficient.partial(j, h)
                if derivative.is_zero:
                    continue
                sign, index = sort_with_sign((j + 1,) + tuple(term.index))
                terms.append(FormTerm(index, derivative, sign * term.weight))
    return FormField(form.target, form.degree + 1, terms, is_closed=True, name=f"d{form.name}")


def exterior_derivative(form: FormField, x, h: float = DEFAULT_STEP) -> Covector:
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    if form.degree >= form.ambient_dim:
        return Covector.zero(form.ambient_dim, form.degree + 1)
    return eval_form(derivative_field(form, h), x)


def inf_comass(
    form: FormField,
    samples: int,
    cfg: Optional[OptimizerConfig] = None,
    box: Tuple[float, float] = (-1.0, 1.0),
    seed: int = 0,
) -> float:
    """Sampled infimum of the pointwise comass of `form`."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    origin = np.zeros(form.ambient_dim)
    if form.is_constant:
        return comass(eval_form(form, origin), cfg)
    cache: Dict[Covector, float] = {}
    lowest = math.inf
    for point in form.target.sample(samples, seed=seed, box=box):
        covector = eval_form(form, point)
        if covector not in cache:
            cache[covector] = comass(covector, cfg)
        lowest = min(lowest, cache[covector])
    return lowest
