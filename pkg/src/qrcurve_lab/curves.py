"""Smooth curve maps R^n -> N, pullback densities, distortion, and the torus linear family."""
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from qrcurve_lab.errors import DegreeError, DimensionMismatchError, ObstructionError, SignViolationError
from qrcurve_lab.exterior import Covector, comass
from qrcurve_lab.logging import getLogger
from qrcurve_lab.manifold import FormField, TargetManifold, canonical_rep, eval_form, torus_distance
from qrcurve_lab.models.reports import DistortionReport
from qrcurve_lab.models.specs import GridSpec, OptimizerConfig, SampleSpec
from qrcurve_lab.numbers import Scalar, format_scalar, is_exact
from qrcurve_lab.parallel import chunk_bounds, fan_out, grid_points

logger = getLogger(name=__name__)

DEFAULT_STEP = 1e-5
ETA = 1e-12
MAX_OBSTRUCTION_ORDER = 100_000

Evaluator = Callable[[np.ndarray], np.ndarray]


class CurveMap:
    """A smooth map f: R^n -> N.

    `evaluator` maps stacked points (N, n) to covering coordinates (N, m);
    `jacobian`, when given, maps them to differentials (N, m, n). Without it
    the differential is a central difference with step `h`.
    """

    def __init__(
        self,
        domain_dim: int,
        target: TargetManifold,
        evaluator: Evaluator,
        jacobian: Optional[Evaluator] = None,
        h: float = DEFAULT_STEP,
        name: str = "curve",
    ):
        if domain_dim < 2:
            raise DimensionMismatchError(f"curve domain dimension must be at least 2, got {domain_dim}")
        if target.dim < domain_dim:
            raise DimensionMismatchError(f"target {target} is smaller than the domain R^{domain_dim}")
        if h <= 0:
            raise ValueError("finite-difference step must be positive")
        self.domain_dim = domain_dim
        self.target = target
        self.evaluator = evaluator
        self.jacobian = jacobian
        self.h = h
        self.name = name

    @property
    def n(self) -> int:
        return self.domain_dim

    @property
    def m(self) -> int:
        return self.target.dim

    def _points(self, x) -> np.ndarray:
        points = np.atleast_2d(np.asarray(x, dtype=float))
        if points.shape[1] != self.domain_dim:
            raise DimensionMismatchError(f"{self.name} takes points of R^{self.domain_dim}, got {points.shape[1]}")
        return points

    def evaluate(self, x) -> np.ndarray:
        points = self._points(x)
        values = np.asarray(self.evaluator(points), dtype=float).reshape(len(points), self.m)
        return values[0] if np.ndim(x) == 1 else values

    def __call__(self, x) -> np.ndarray:
        return self.evaluate(x)

    def positions(self, points: np.ndarray) -> np.ndarray:
        """Image points reduced to the fundamental domain on a torus target."""
        values = self.evaluate(self._points(points))
        return canonical_rep(values) if self.target.is_torus else values

    def differentials(self, points: np.ndarray) -> np.ndarray:
        points = self._points(points)
        if self.jacobian is not None:
            return np.asarray(self.jacobian(points), dtype=float).reshape(len(points), self.m, self.n)
        return self.finite_differentials(points)

    def finite_differentials(self, points: np.ndarray) -> np.ndarray:
        points = self._points(points)
        columns = []
        for j in range(self.n):
            shift = np.zeros(self.n)
            shift[j] = self.h
            forward = self.evaluate(points + shift)
            backward = self.evaluate(points - shift)
            columns.append((forward - backward) / (2.0 * self.h))
        return np.stack(columns, axis=2)

    def check_differential(self, samples: int = 32, seed: int = 0, box: Tuple[float, float] = (-2.0, 2.0)) -> float:
        """Largest relative gap between the analytic and finite-difference differentials."""
        if self.jacobian is None:
            return 0.0
        points = np.random.default_rng(seed).uniform(box[0], box[1], size=(samples, self.n))
        analytic = self.differentials(points)
        numeric = self.finite_differentials(points)
        scale = np.maximum(1.0, np.abs(analytic).max(axis=(1, 2)))
        return float(np.max(np.abs(analytic - numeric).max(axis=(1, 2)) / scale))

    def __repr__(self) -> str:
        return f"CurveMap({self.name!r}, R^{self.n} -> {self.target})"


class TorusLinearCurve(CurveMap):
    """x -> (x, x . y) on R^n, followed by the quotient onto T^{n+1}."""

    def __init__(self, y: Sequence[Scalar]):
        self.y_exact: Tuple[Scalar, ...] = tuple(y)
        self.y = np.array([float(v) for v in self.y_exact])
        n = len(self.y)
        matrix = np.vstack([np.eye(n), self.y[np.newaxis, :]])
        self.matrix = matrix
        super().__init__(
            n,
            TargetManifold.flat_torus(n + 1),
            evaluator=lambda points: np.column_stack([points, points @ self.y]),
            jacobian=lambda points: np.broadcast_to(matrix, (len(points), n + 1, n)),
            name="torus_linear",
        )

    @property
    def is_rational(self) -> bool:
        return all(is_exact(v) for v in self.y_exact)

    @property
    def distortion_bound(self) -> float:
        """(1 + |y|)^n, the quasiregularity constant of the family."""
        return (1.0 + float(np.linalg.norm(self.y))) ** self.n

    @property
    def exact_quotient(self) -> float:
        return (1.0 + float(self.y @ self.y)) ** (self.n / 2.0)

    def slope_literals(self) -> List[str]:
        return [format_scalar(v) for v in self.y_exact]


def torus_volume_form(n: int) -> FormField:
    """dx1^...^dxn on T^{n+1}: unit comass, pulls back to vol under every torus linear curve."""
    target = TargetManifold.flat_torus(n + 1)
    return FormField.constant(target, Covector.basis(n + 1, range(1, n + 1)), sup_bound=1.0, name="omega")


def identity(n: int) -> CurveMap:
    return linear(np.eye(n), name="identity")


def scaling(n: int, factor: float) -> CurveMap:
    return linear(factor * np.eye(n), name=f"scaling:{factor}")


def linear(matrix, name: str = "linear") -> CurveMap:
    matrix = np.asarray(matrix, dtype=float)
    m, n = matrix.shape
    return CurveMap(
        n,
        TargetManifold.euclidean(m),
        evaluator=lambda points: points @ matrix.T,
        jacobian=lambda points: np.broadcast_to(matrix, (len(points), m, n)),
        name=name,
    )


def polynomial_demo() -> CurveMap:
    """(x1^2, x2) on R^2."""

    def jacobian(points):
        result = np.zeros((len(points), 2, 2))
        result[:, 0, 0] = 2.0 * points[:, 0]
        result[:, 1, 1] = 1.0
        return result

    return CurveMap(
        2,
        TargetManifold.euclidean(2),
        evaluator=lambda points: np.column_stack([points[:, 0] ** 2, points[:, 1]]),
        jacobian=jacobian,
        name="polynomial",
    )


def constant_map(n: int, value: Sequence[float]) -> CurveMap:
    value = np.asarray(value, dtype=float)
    m = len(value)
    return CurveMap(
        n,
        TargetManifold.euclidean(m),
        evaluator=lambda points: np.broadcast_to(value, (len(points), m)).copy(),
        jacobian=lambda points: np.zeros((len(points), m, n)),
        name="constant",
    )


BUILTINS: Dict[str, Callable[..., CurveMap]] = {
    "identity": identity,
    "linear": linear,
    "scaling": scaling,
    "polynomial": lambda n=2: polynomial_demo(),
    "constant": constant_map,
}


def differential(f: CurveMap, x) -> np.ndarray:
    point = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(point)):
        raise ValueError(f"differential needs a finite point, got {point.tolist()}")
    return f.differentials(point)[0]


def operator_norm(matrix) -> float:
    return float(np.linalg.svd(np.asarray(matrix, dtype=float), compute_uv=False)[0])


def operator_norms(matrices: np.ndarray) -> np.ndarray:
    return np.linalg.svd(matrices, compute_uv=False)[:, 0]


def _check_top_degree(f: CurveMap, form: FormField):
    if form.target != f.target:
        raise DimensionMismatchError(f"form lives on {form.target}, curve maps into {f.target}")
    if form.degree != f.n:
        raise DegreeError(f"density needs a form of degree {f.n}, got {form.degree}")


def pullback_density(f: CurveMap, form: FormField, points: np.ndarray) -> np.ndarray:
    """star f*form at stacked points (N, n), standard orientation of R^n."""
    _check_top_degree(f, form)
    points = f._points(points)
    return form.evaluate_on(f.positions(points), f.differentials(points))


def star_pullback(f: CurveMap, form: FormField, x) -> float:
    return float(pullback_density(f, form, np.asarray(x, dtype=float))[0])


def pullback_values(f: CurveMap, form: FormField, points: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """form_{f(x)}(Df v1, ..., Df vk) for points (N, n) and vectors (N, n, k)."""
    if form.target != f.target:
        raise DimensionMismatchError(f"form lives on {form.target}, curve maps into {f.target}")
    vectors = np.asarray(vectors, dtype=float)
    if vectors.shape[-1] != form.degree:
        raise DegreeError(f"a {form.degree}-form needs {form.degree} vectors, got {vectors.shape[-1]}")
    points = f._points(points)
    frames = f.differentials(points) @ vectors
    return form.evaluate_on(f.positions(points), frames)


def pullback_eval(f: CurveMap, form: FormField, x, vectors: Sequence[Sequence[float]]) -> float:
    stacked = np.asarray(vectors, dtype=float).reshape(-1, f.n).T if len(vectors) else np.zeros((f.n, 0))
    return float(pullback_values(f, form, np.asarray(x, dtype=float), stacked[np.newaxis])[0])


class QuotientFlag(str, Enum):
    OK = "ok"
    DEGENERATE = "degenerate"
    SIGN_VIOLATION = "sign-violation"


@dataclass
class Quotients:
    values: np.ndarray
    flags: List[QuotientFlag]
    densities: np.ndarray
    numerators: np.ndarray = field(repr=False)


def pointwise_comass(form: FormField, positions: np.ndarray, cfg: Optional[OptimizerConfig] = None) -> np.ndarray:
    if form.is_constant:
        return np.full(len(positions), comass(eval_form(form, np.zeros(form.ambient_dim)), cfg))
    cache: Dict[Covector, float] = {}
    values = np.empty(len(positions))
    for i, position in enumerate(positions):
        covector = eval_form(form, position)
        if covector not in cache:
            cache[covector] = comass(covector, cfg)
        values[i] = cache[covector]
    return values


def distortion_quotients(
    f: CurveMap, form: FormField, points: np.ndarray, cfg: Optional[OptimizerConfig] = None
) -> Quotients:
    """comass(form_f(x)) * |Df(x)|^n / density, with degenerate and negative densities flagged."""
    _check_top_degree(f, form)
    points = f._points(points)
    positions = f.positions(points)
    jacobians = f.differentials(points)
    densities = form.evaluate_on(positions, jacobians)
    numerators = pointwise_comass(form, positions, cfg) * operator_norms(jacobians) ** f.n
    values = np.full(len(points), np.nan)
    flags = []
    for i, (density, numerator) in enumerate(zip(densities, numerators)):
        if abs(density) <= ETA * numerator or density == 0.0:
            flags.append(QuotientFlag.DEGENERATE)
        elif density < 0:
            flags.append(QuotientFlag.SIGN_VIOLATION)
        else:
            flags.append(QuotientFlag.OK)
            values[i] = numerator / density
    return Quotients(values, flags, densities, numerators)


def distortion_quotient(f: CurveMap, form: FormField, x, cfg: Optional[OptimizerConfig] = None):
    """The quotient at one point, or the flag when the density is degenerate or negative."""
    result = distortion_quotients(f, form, np.asarray(x, dtype=float), cfg)
    flag = result.flags[0]
    return float(result.values[0]) if flag == QuotientFlag.OK else flag


def distortion_sup(
    f: CurveMap,
    form: FormField,
    sample_spec: SampleSpec,
    cfg: Optional[OptimizerConfig] = None,
    workers: int = 1,
    chunk: int = 4096,
) -> DistortionReport:
    points = sample_spec.points(f.n)
    parts = fan_out(
        lambda b: distortion_quotients(f, form, points[b[0]:b[1]], cfg), chunk_bounds(len(points), chunk), workers
    )
    values = np.concatenate([p.values for p in parts])
    flags = [flag for p in parts for flag in p.flags]
    densities = np.concatenate([p.densities for p in parts])
    if QuotientFlag.SIGN_VIOLATION in flags:
        i = flags.index(QuotientFlag.SIGN_VIOLATION)
        raise SignViolationError(
            f"{f.name} is not a curve for {form.name or 'the form'}: negative density at a sample",
            point=points[i],
            density=densities[i],
        )
    degenerate = flags.count(QuotientFlag.DEGENERATE)
    if degenerate:
        logger.warning(
            "degenerate densities in distortion sample", extra={"context": {"curve": f.name, "count": degenerate}}
        )
    report = DistortionReport(samples=sample_spec.describe(), evaluated=len(points), degenerate=degenerate)
    if degenerate < len(points):
        best = int(np.nanargmax(values))
        report.k_hat = float(values[best])
        report.argmax = points[best].tolist()
    if isinstance(f, TorusLinearCurve):
        report.bound = f.distortion_bound
        report.within_bound = report.k_hat is None or report.k_hat <= report.bound * (1.0 + 1e-12)
    return report


def _require_torus_curve(f: CurveMap, v) -> np.ndarray:
    if not isinstance(f, TorusLinearCurve):
        raise DimensionMismatchError("density probes need a torus linear curve")
    v = np.asarray([float(c) for c in v])
    if v.shape != (f.m,):
        raise DimensionMismatchError(f"target point needs {f.m} coordinates, got {v.shape[0]}")
    return v


def closest_grid_point(
    f: TorusLinearCurve, v, grid: GridSpec, workers: int = 1, chunk: int = 65536
) -> Tuple[float, np.ndarray]:
    """(min torus distance from f(grid) to v, the grid point attaining it)."""
    target = canonical_rep(_require_torus_curve(f, v))
    axis = grid.axis()

    def probe(bounds):
        points = grid_points(axis, f.n, *bounds)
        distances = torus_distance(f.evaluate(points), target)
        i = int(np.argmin(distances))
        return float(distances[i]), points[i]

    results = fan_out(probe, chunk_bounds(grid.size(f.n), chunk), workers)
    best = min(range(len(results)), key=lambda i: (results[i][0], i))
    return results[best]


def density_probe(f: TorusLinearCurve, v, grid: GridSpec, workers: int = 1) -> float:
    return closest_grid_point(f, v, grid, workers)[0]


def circle_distance(a, b):
    gap = np.abs(np.mod(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), 1.0))
    return np.minimum(gap, 1.0 - gap)


@dataclass
class DensityWitness:
    point: np.ndarray
    shifts: Tuple[int, ...]
    distance: float


def density_witness(f: TorusLinearCurve, v, delta: float, search: int = 100_000) -> DensityWitness:
    """A point x = (v1 + k1, ..., vn + kn) with f(x) within `delta` of v.

    Each k_j is searched in [-search, search] so that k_j y_j lands within
    delta/n of -v_j y_j on the circle (of v_{n+1} - v_n y_n for the last one).
    """
    v = _require_torus_curve(f, v)
    if delta <= 0:
        raise ValueError("delta must be positive")
    n = f.n
    candidates = np.arange(-search, search + 1)
    shifts = []
    for j in range(n):
        aim = -v[j] * f.y[j] + (v[n] if j == n - 1 else 0.0)
        gaps = circle_distance(candidates * f.y[j], aim)
        best = int(np.argmin(np.where(gaps < delta / n, np.abs(candidates), np.inf)))
        if not gaps[best] < delta / n:
            raise ObstructionError(
                f"no multiple of y_{j + 1} = {f.y[j]} within {delta / n} of the aim in [-{search}, {search}]"
            )
        shifts.append(int(candidates[best]))
    point = v[:n] + np.array(shifts, dtype=float)
    distance = float(torus_distance(f.evaluate(point), v))
    return DensityWitness(point, tuple(shifts), distance)


@dataclass
class RationalObstruction:
    """The finite subgroup (1/order)Z/Z of the circle that separates v from the image."""

    order: int
    distance: float
    radius: float
    delta_bound: float

    def elements(self) -> List[Fraction]:
        return [Fraction(k, self.order) for k in range(self.order)]


def rational_obstruction(y: Sequence[Scalar], v_rational: Sequence[Scalar], v_last: Scalar) -> RationalObstruction:
    """Exact obstruction set for a rational slope y and a point v = (v_rational, v_last).

    E is generated by y_j / q_j, q_j the denominator of v_j, so it is the
    cyclic group of order lcm of the reduced denominators. r is a quarter of
    the circle distance from v_last to E.
    """
    if len(y) != len(v_rational):
        raise DimensionMismatchError(f"slope has {len(y)} entries, point has {len(v_rational)} rational coordinates")
    if not all(is_exact(c) for c in y):
        raise ObstructionError("the obstruction set needs a rational slope")
    if not all(is_exact(c) for c in v_rational):
        raise ObstructionError("the first coordinates of v must be rational")
    if is_exact(v_last):
        raise ObstructionError("the last coordinate of v must be irrational")
    order = math.lcm(*[(Fraction(c) / Fraction(v).denominator).denominator for c, v in zip(y, v_rational)])
    if order > MAX_OBSTRUCTION_ORDER:
        raise ObstructionError(f"obstruction group of order {order} is too large to certify")
    scaled = (float(v_last) % 1.0) * order
    distance = abs(scaled - round(scaled)) / order
    if distance == 0.0:
        raise ObstructionError("v_last lies on the obstruction set")
    radius = distance / 4.0
    spread = len(y) * max((abs(float(c)) for c in y), default=0.0)
    obstruction = RationalObstruction(order, distance, radius, radius / max(1.0, spread))
    logger.debug("rational obstruction", extra={"context": {"order": order, "radius": radius}})
    return obstruction
