"""Ball and centered-sphere integrals with error bounds, and logarithmic measure of radius sets."""
import math
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gamma, roots_legendre

from qrcurve_lab.curves import CurveMap, pullback_values
from qrcurve_lab.errors import DegreeError, QuadratureError
from qrcurve_lab.logging import getLogger
from qrcurve_lab.manifold import FormField
from qrcurve_lab.models.reports import IntegralEstimate
from qrcurve_lab.models.specs import QuadratureMethod, QuadratureSpec
from qrcurve_lab.parallel import chunk_bounds, fan_out, pairwise_sum

logger = getLogger(name=__name__)

ScalarField = Callable[[np.ndarray], np.ndarray]

MAX_TENSOR_DIM = 4
CHUNK = 32768


def ball_volume(n: int, r: float = 1.0) -> float:
    return float(math.pi ** (n / 2.0) / gamma(n / 2.0 + 1.0) * r ** n)


def sphere_area(n: int, r: float = 1.0) -> float:
    """(n-1)-dimensional area of the sphere bounding B^n(r)."""
    return n * ball_volume(n, 1.0) * r ** (n - 1)


def _gauss_legendre(count: int, low: float, high: float) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = roots_legendre(count)
    half = 0.5 * (high - low)
    return low + half * (nodes + 1.0), half * weights


def angular_grid(n: int, angular_nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """Unit directions (N, n) and weights summing to the area of S^{n-1}.

    Uniform trapezoid nodes in the azimuth, Gauss-Legendre in each polar angle
    with the sin^k factor of the spherical area element folded into the weights.
    """
    polar_count = n - 2
    per_polar = max(2, int(round((angular_nodes / 2.0) ** (1.0 / (n - 1))))) if polar_count else 1
    azimuth_count = max(4, angular_nodes // per_polar ** polar_count)
    azimuth = 2.0 * math.pi * np.arange(azimuth_count) / azimuth_count
    grids = [azimuth]
    weights = [np.full(azimuth_count, 2.0 * math.pi / azimuth_count)]
    for i in range(polar_count):
        nodes, w = _gauss_legendre(per_polar, 0.0, math.pi)
        grids.append(nodes)
        weights.append(w * np.sin(nodes) ** (polar_count - i))
    mesh = np.meshgrid(*grids, indexing="ij")
    weight = np.prod(np.meshgrid(*weights, indexing="ij"), axis=0).ravel()
    theta = mesh[0].ravel()
    polars = [g.ravel() for g in mesh[1:]]
    directions = np.empty((len(theta), n))
    carry = np.ones(len(theta))
    for i, phi in enumerate(polars):
        directions[:, i] = carry * np.cos(phi)
        carry = carry * np.sin(phi)
    directions[:, n - 2] = carry * np.cos(theta)
    directions[:, n - 1] = carry * np.sin(theta)
    return directions, weight


def _resolve(spec: QuadratureSpec, n: int) -> QuadratureMethod:
    method = spec.resolve_method(n)
    if method == QuadratureMethod.TENSOR_POLAR and n > MAX_TENSOR_DIM:
        raise QuadratureError(f"tensor-polar quadrature supports n <= {MAX_TENSOR_DIM}, got n = {n}")
    return method


def _evaluate(g: ScalarField, points: np.ndarray, workers: int) -> np.ndarray:
    parts = fan_out(lambda b: np.asarray(g(points[b[0]:b[1]]), dtype=float), chunk_bounds(len(points), CHUNK), workers)
    values = np.concatenate(parts) if parts else np.zeros(0)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise QuadratureError(f"integrand is not finite at a node (value {values[bad[0]]})", node=points[bad[0]])
    return values


def _tensor_ball(g, center, r, spec: QuadratureSpec) -> Tuple[float, int]:
    n = len(center)
    radial_count, angular_count = spec.tensor_nodes()
    radii, radial_weights = _gauss_legendre(radial_count, 0.0, r)
    directions, angular_weights = angular_grid(n, angular_count)
    points = (center + radii[:, None, None] * directions[None, :, :]).reshape(-1, n)
    weights = ((radial_weights * radii ** (n - 1))[:, None] * angular_weights[None, :]).ravel()
    values = _evaluate(g, points, spec.workers)
    return pairwise_sum(values * weights), len(points)


def _monte_carlo_ball(g, center, r, spec: QuadratureSpec) -> Tuple[float, float, int]:
    n = len(center)
    samples = spec.monte_carlo_samples()
    bounds = chunk_bounds(samples, CHUNK)
    seeds = np.random.SeedSequence(spec.seed).spawn(len(bounds))

    def draw(i):
        rng = np.random.default_rng(seeds[i])
        size = bounds[i][1] - bounds[i][0]
        gaussian = rng.standard_normal((size, n))
        directions = gaussian / np.linalg.norm(gaussian, axis=1, keepdims=True)
        radii = r * rng.uniform(size=size) ** (1.0 / n)
        return center + radii[:, None] * directions

    points = np.concatenate([draw(i) for i in range(len(bounds))])
    values = _evaluate(g, points, spec.workers)
    volume = ball_volume(n, r)
    mean = pairwise_sum(values) / samples
    variance = pairwise_sum((values - mean) ** 2) / max(1, samples - 1)
    return volume * mean, 3.0 * volume * math.sqrt(variance / samples), samples


def _estimate(
    value: float, error: float, budget: int, method: QuadratureMethod, spec: QuadratureSpec, what: str
) -> IntegralEstimate:
    converged = error <= spec.tol * max(1.0, abs(value))
    if not converged:
        logger.warning(
            "quadrature error above tolerance",
            extra={"context": {"integral": what, "value": value, "error_bound": error, "tol": spec.tol}},
        )
    return IntegralEstimate(value=value, error_bound=error, budget=budget, method=method, converged=converged)


def ball_integral(
    g: ScalarField, center: Sequence[float], r: float, spec: Optional[QuadratureSpec] = None, average: bool = False
) -> IntegralEstimate:
    """Estimate of the integral of g over B^n(center, r); `average` divides by |B^n(r)|."""
    spec = spec or QuadratureSpec()
    if r <= 0:
        raise QuadratureError(f"ball radius must be positive, got {r}")
    center = np.asarray(center, dtype=float)
    n = len(center)
    method = _resolve(spec, n)
    if method == QuadratureMethod.TENSOR_POLAR:
        value, budget = _tensor_ball(g, center, r, spec)
        coarse, _ = _tensor_ball(g, center, r, spec.halved())
        error = abs(value - coarse)
    else:
        value, error, budget = _monte_carlo_ball(g, center, r, spec)
    if average:
        volume = ball_volume(n, r)
        value, error = value / volume, error / volume
    return _estimate(value, error, budget, method, spec, "ball")


def tangent_frames(directions: np.ndarray) -> np.ndarray:
    """Orthonormal bases (N, n, n-1) of the tangent spaces, oriented so det[u, T] = +1."""
    count, n = directions.shape
    seeds = np.broadcast_to(np.eye(n)[:, : n - 1], (count, n, n - 1))
    stacked = np.concatenate([directions[:, :, None], seeds], axis=2)
    q, r = np.linalg.qr(stacked)
    q = q * np.sign(np.where(r[:, 0, 0] == 0, 1.0, r[:, 0, 0]))[:, None, None]
    frames = q[:, :, 1:].copy()
    orientation = np.linalg.det(np.concatenate([directions[:, :, None], frames], axis=2))
    frames[:, :, -1] *= np.sign(orientation)[:, None]
    return frames


def _sphere_nodes(n: int, spec: QuadratureSpec, method: QuadratureMethod):
    if method == QuadratureMethod.TENSOR_POLAR:
        return angular_grid(n, spec.tensor_nodes()[1])
    samples = spec.monte_carlo_samples()
    gaussian = np.random.default_rng(spec.seed).standard_normal((samples, n))
    directions = gaussian / np.linalg.norm(gaussian, axis=1, keepdims=True)
    return directions, np.full(samples, sphere_area(n) / samples)


def _sphere_sum(f: CurveMap, form: FormField, r: float, spec: QuadratureSpec, method: QuadratureMethod):
    n = f.n
    directions, weights = _sphere_nodes(n, spec, method)
    points = r * directions
    frames = tangent_frames(directions)

    def evaluate(b):
        return pullback_values(f, form, points[b[0]:b[1]], frames[b[0]:b[1]])

    values = np.concatenate(fan_out(evaluate, chunk_bounds(len(points), CHUNK), spec.workers))
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise QuadratureError("pulled-back form is not finite at a sphere node", node=points[bad[0]])
    scaled = values * weights * r ** (n - 1)
    return pairwise_sum(scaled), scaled, len(points)


def sphere_integral(f: CurveMap, form: FormField, r: float, spec: Optional[QuadratureSpec] = None) -> IntegralEstimate:
    """Integral of f*form over the centered sphere S^{n-1}(r), outward normal first."""
    spec = spec or QuadratureSpec()
    if form.degree != f.n - 1:
        raise DegreeError(f"sphere integrals need a form of degree {f.n - 1}, got {form.degree}")
    if r <= 0:
        raise QuadratureError(f"sphere radius must be positive, got {r}")
    method = _resolve(spec, f.n)
    value, scaled, budget = _sphere_sum(f, form, r, spec, method)
    if method == QuadratureMethod.TENSOR_POLAR:
        coarse, _, _ = _sphere_sum(f, form, r, spec.halved(), method)
        error = abs(value - coarse)
    else:
        error = 3.0 * math.sqrt(pairwise_sum((scaled * budget - value) ** 2) / max(1, budget - 1) / budget)
    return _estimate(value, error, budget, method, spec, "sphere")


def normalize_intervals(intervals: Sequence[Tuple[float, float]]) -> List[Tuple[float, float]]:
    """Sorted, merged copy of a finite union of radius intervals within [1, inf)."""
    cleaned = []
    for a, b in intervals:
        if a < 1.0:
            raise ValueError(f"radius interval [{a}, {b}] reaches below 1")
        if b < a:
            raise ValueError(f"radius interval [{a}, {b}] is reversed")
        cleaned.append((float(a), float(b)))
    merged: List[Tuple[float, float]] = []
    for a, b in sorted(cleaned):
        if merged and a <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    return merged


def log_measure(intervals: Sequence[Tuple[float, float]]) -> float:
    return float(sum(math.log(b / a) for a, b in normalize_intervals(intervals)))
