import math

import numpy as np
import pytest

from qrcurve_lab.curves import identity, pullback_density, pullback_values
from qrcurve_lab.errors import DegreeError, QuadratureError
from qrcurve_lab.manifold import FormField, TargetManifold, derivative_field
from qrcurve_lab.models.specs import QuadratureMethod, QuadratureSpec
from qrcurve_lab.quadrature import (
    angular_grid,
    ball_integral,
    ball_volume,
    log_measure,
    normalize_intervals,
    sphere_area,
    sphere_integral,
    tangent_frames,
)


def ones(points):
    return np.ones(len(points))


def test_ball_volume_closed_forms():
    assert ball_volume(2) == pytest.approx(math.pi)
    assert ball_volume(3, 2.0) == pytest.approx(4.0 / 3.0 * math.pi * 8.0)
    assert sphere_area(3) == pytest.approx(4.0 * math.pi)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_angular_weights_sum_to_sphere_area(n):
    directions, weights = angular_grid(n, 256)
    assert np.allclose(np.linalg.norm(directions, axis=1), 1.0)
    assert weights.sum() == pytest.approx(sphere_area(n), rel=1e-3)


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("r", [1.0, 2.0, 4.0])
def test_ball_integral_of_one_scales_with_volume(n, r):
    estimate = ball_integral(ones, np.zeros(n), r)
    assert estimate.method == QuadratureMethod.TENSOR_POLAR
    assert estimate.value == pytest.approx(ball_volume(n) * r ** n, rel=1e-6)
    assert estimate.error_bound < 1e-6 * estimate.value


def test_ball_integral_of_polynomial_off_center():
    # integral of x1^2 over B^2((1, 0), 1) is pi/4 + pi
    estimate = ball_integral(lambda p: p[:, 0] ** 2, [1.0, 0.0], 1.0)
    assert estimate.value == pytest.approx(math.pi / 4 + math.pi, rel=1e-9)
    assert estimate.converged


def test_estimates_above_the_tolerance_are_not_converged():
    coarse = QuadratureSpec(radial_nodes=4, angular_nodes=8)
    estimate = ball_integral(lambda p: np.cos(40.0 * p[:, 0]), [0.0, 0.0], 1.0, coarse)
    assert estimate.error_bound > coarse.tol
    assert not estimate.converged
    loose = coarse.copy(update={"tol": 1e6})
    assert ball_integral(lambda p: np.cos(40.0 * p[:, 0]), [0.0, 0.0], 1.0, loose).converged


def test_ball_average():
    estimate = ball_integral(lambda p: 2.0 + p[:, 1], [0.0, 0.0, 0.0], 3.0, average=True)
    assert estimate.value == pytest.approx(2.0, rel=1e-9)


def test_annulus_additivity():
    g = lambda p: np.exp(-np.sum(p * p, axis=1))  # noqa: E731
    inner = ball_integral(g, [0.0, 0.0], 1.0)
    outer = ball_integral(g, [0.0, 0.0], 2.0)
    annulus = math.pi * (math.exp(-1.0) - math.exp(-4.0))
    assert outer.value - inner.value == pytest.approx(annulus, abs=inner.error_bound + outer.error_bound + 1e-9)


def test_monte_carlo_is_deterministic_and_worker_independent():
    spec = QuadratureSpec(method=QuadratureMethod.MONTE_CARLO, samples=100_000, seed=5)
    g = lambda p: np.cos(p[:, 0]) ** 2  # noqa: E731
    first = ball_integral(g, [0.0, 0.0, 0.0, 0.0, 0.0], 1.0, spec)
    second = ball_integral(g, [0.0, 0.0, 0.0, 0.0, 0.0], 1.0, spec)
    threaded = ball_integral(g, [0.0, 0.0, 0.0, 0.0, 0.0], 1.0, spec.copy(update={"workers": 4}))
    assert first == second
    assert first.value == threaded.value
    assert first.error_bound > 0.0


def test_monte_carlo_is_default_above_three_dimensions():
    estimate = ball_integral(ones, np.zeros(5), 1.0, QuadratureSpec(samples=1000))
    assert estimate.method == QuadratureMethod.MONTE_CARLO
    assert estimate.value == pytest.approx(ball_volume(5))
    assert estimate.error_bound == pytest.approx(0.0, abs=1e-12)


def test_tensor_polar_is_limited_to_low_dimensions():
    with pytest.raises(QuadratureError):
        ball_integral(ones, np.zeros(5), 1.0, QuadratureSpec(method=QuadratureMethod.TENSOR_POLAR))


def test_budget_splits_tensor_nodes():
    radial, angular = QuadratureSpec(budget=4096).tensor_nodes()
    assert radial == 32 and angular == 128


def test_non_finite_integrand_reports_the_node():
    with pytest.raises(QuadratureError) as raised:
        ball_integral(lambda p: 1.0 / (p[:, 0] - p[:, 0]), [0.0, 0.0], 1.0)
    assert len(raised.value.node) == 2


def test_ball_integral_rejects_nonpositive_radius():
    with pytest.raises(QuadratureError):
        ball_integral(ones, [0.0, 0.0], 0.0)


@pytest.mark.parametrize("n", [2, 3])
def test_tangent_frames_are_oriented(n):
    directions, _ = angular_grid(n, 64)
    frames = tangent_frames(directions)
    stacked = np.concatenate([directions[:, :, None], frames], axis=2)
    assert np.allclose(np.linalg.det(stacked), 1.0)
    assert np.allclose(np.einsum("nik,ni->nk", frames, directions), 0.0, atol=1e-12)


def test_greens_theorem_on_the_unit_circle():
    plane = TargetManifold.euclidean(2)
    form = FormField.parse(plane, 1, ["dx2 * lin:1"])
    estimate = sphere_integral(identity(2), form, 1.0)
    assert estimate.value == pytest.approx(math.pi, rel=1e-9)


def test_sphere_integral_matches_stokes_in_three_dimensions():
    # d(x1 dx2^dx3) = vol, so the sphere term is the ball volume
    space = TargetManifold.euclidean(3)
    form = FormField.parse(space, 2, ["dx2^dx3 * lin:1"])
    estimate = sphere_integral(identity(3), form, 2.0)
    assert estimate.value == pytest.approx(ball_volume(3, 2.0), rel=1e-6)



@pytest.mark.parametrize("r", [1.0, 2.0, 4.0, 8.0])
def test_stokes_for_the_diagonal_curve(r, diagonal_curve, wave_tau, fine_spec):
    d_tau = derivative_field(wave_tau)
    inside = ball_integral(lambda p: pullback_density(diagonal_curve, d_tau, p), [0.0, 0.0], r, fine_spec)
    boundary = sphere_integral(diagonal_curve, wave_tau, r, fine_spec)
    assert inside.value == pytest.approx(boundary.value, abs=1e-6 * r ** 2)
    assert inside.converged and boundary.converged

def test_sphere_integral_needs_codimension_one_forms(plane_volume):
    with pytest.raises(DegreeError):
        sphere_integral(identity(2), plane_volume, 1.0)


def test_sphere_pullback_values_shape(diagonal_curve, wave_tau):
    directions, _ = angular_grid(2, 16)
    values = pullback_values(diagonal_curve, wave_tau, directions, tangent_frames(directions))
    assert values.shape == (len(directions),)


def test_log_measure():
    assert log_measure([(2.0, 4.0)]) == pytest.approx(math.log(2.0))
    assert log_measure([]) == 0.0
    assert log_measure([(5.0, 10.0)]) == pytest.approx(math.log(2.0))
    assert log_measure([(2.0, 4.0), (3.0, 8.0)]) == pytest.approx(math.log(4.0))


def test_normalize_intervals_rejects_radii_below_one():
    with pytest.raises(ValueError):
        normalize_intervals([(0.5, 2.0)])
    with pytest.raises(ValueError):
        normalize_intervals([(4.0, 2.0)])
    assert normalize_intervals([(4.0, 8.0), (1.0, 2.0), (2.0, 3.0)]) == [(1.0, 3.0), (4.0, 8.0)]
