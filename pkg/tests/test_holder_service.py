import math

import numpy as np
import pytest

from qrcurve_lab.curves import BUILTINS, constant_map
from qrcurve_lab.errors import LabError
from qrcurve_lab.manifold import FormField, TargetManifold
from qrcurve_lab.models.reports import InequalityKind
from qrcurve_lab.models.specs import Ball, BallFamilyKind, BallFamilySpec, SampleSpec
from qrcurve_lab.services.holder_service import HolderService

UNIT_BALL = Ball(center=[0.0, 0.0], radius=1.0)


@pytest.fixture
def service():
    return HolderService()


def test_reverse_holder_constant_is_one_for_constant_density(service, diagonal_curve, torus_volume):
    report = service.reverse_holder_estimate(diagonal_curve, torus_volume, BallFamilySpec(count=20), 2.0)
    assert report.kind == InequalityKind.REVERSE_HOLDER
    assert len(report.balls) == 20
    assert report.c_hat == pytest.approx(1.0, abs=1e-3)
    assert all(ball.ratio <= report.c_hat for ball in report.balls)


def test_half_ball_constant_is_one_for_constant_density(service, diagonal_curve, torus_volume):
    report = service.prop4_check(diagonal_curve, torus_volume, BallFamilySpec(count=20))
    assert report.kind == InequalityKind.HALF_BALL
    assert report.p == pytest.approx(2.0 / 3.0)
    assert report.c_hat == pytest.approx(1.0, abs=1e-3)


def test_half_ball_constant_is_scale_invariant(service, plane_identity, plane_volume):
    report = service.prop4_check(plane_identity, plane_volume.scale(3.0), BallFamilySpec(count=5))
    assert report.c_hat == pytest.approx(1.0, abs=1e-3)


def test_half_ball_constant_for_an_oscillating_density(service, plane_identity):
    plane = TargetManifold.euclidean(2)
    form = FormField.parse(plane, 2, ["2 dx1^dx2", "dx1^dx2 * sin:1"])
    report = service.prop4_check(plane_identity, form, BallFamilySpec(count=20))
    assert report.c_hat is not None and math.isfinite(report.c_hat)
    assert report.c_hat >= 1.0


def test_concentrated_bump_has_a_large_constant(service, plane_identity):
    plane = TargetManifold.euclidean(2)
    bump = FormField.parse(plane, 2, ["dx1^dx2 * gauss:0.3"])
    family = BallFamilySpec(kind=BallFamilyKind.EXPLICIT, balls=[Ball(center=[0.0, 0.0], radius=2.0)])
    report = service.reverse_holder_estimate(plane_identity, bump, family, 2.0)
    assert report.c_hat > 1.0
    assert report.worst_ball == 0


def test_balls_with_vanishing_density_are_excluded(service, plane_volume):
    report = service.reverse_holder_estimate(constant_map(2, [0.0, 0.0]), plane_volume, BallFamilySpec(count=3), 2.0)
    assert report.c_hat is None
    assert all(ball.excluded for ball in report.balls)


def test_reverse_holder_rejects_small_exponents(service, diagonal_curve, torus_volume):
    with pytest.raises(LabError):
        service.reverse_holder_estimate(diagonal_curve, torus_volume, BallFamilySpec(count=1), 1.0)


def test_higher_integrability_is_an_equality_for_the_diagonal_curve(service, diagonal_curve, torus_volume):
    report = service.higher_integrability_check(diagonal_curve, torus_volume, UNIT_BALL, 2.0, k=3.0)
    assert report.q == pytest.approx(4.0)
    assert report.lhs.value == pytest.approx(9.0 * math.pi, rel=5e-3)
    assert report.rhs_value == pytest.approx(9.0 * math.pi, rel=5e-3)
    assert report.passed


def test_higher_integrability_estimates_the_distortion(service, diagonal_curve, torus_volume):
    report = service.higher_integrability_check(diagonal_curve, torus_volume, UNIT_BALL, 2.0)
    assert report.k == pytest.approx(3.0, abs=1e-9)
    assert report.passed


def test_higher_integrability_for_the_identity(service, plane_identity, plane_volume):
    report = service.higher_integrability_check(plane_identity, plane_volume, UNIT_BALL, 2.0, k=1.0)
    assert report.lhs.value == pytest.approx(math.pi, rel=1e-6)
    assert report.rhs_value == pytest.approx(math.pi, rel=1e-6)
    assert report.passed


def test_higher_integrability_for_a_scaling(service, plane_volume):
    doubling = BUILTINS["scaling"](2, 2.0)
    report = service.higher_integrability_check(doubling, plane_volume, UNIT_BALL, 2.0, k=1.0)
    assert report.lhs.value == pytest.approx(16.0 * math.pi, rel=1e-6)
    assert report.rhs_value == pytest.approx(16.0 * math.pi, rel=1e-6)
    assert report.passed


def test_higher_integrability_samples_the_distortion_inside_the_ball(service, plane_volume):
    # (x1^2, x2) has K(x) = 2 x1 on x1 >= 1/2 and reverses orientation for x1 < 0
    ball = Ball(center=[3.0, 0.0], radius=1.0)
    report = service.higher_integrability_check(BUILTINS["polynomial"](), plane_volume, ball, 2.0)
    assert 7.5 < report.k <= 8.0 + 1e-9
    assert report.passed


def test_ball_samples_stay_inside_the_ball():
    ball = Ball(center=[3.0, -1.0, 0.5], radius=0.25)
    points = SampleSpec(count=500, ball=ball, seed=4).points(3)
    distances = np.linalg.norm(points - np.array(ball.center), axis=1)
    assert points.shape == (500, 3)
    assert distances.max() <= ball.radius
    # uniform in volume: half the mass lies beyond r / 2^(1/3)
    assert 0.4 < np.mean(distances > ball.radius / 2 ** (1 / 3)) < 0.6
    assert ball.half().radius == 0.125 and ball.half().center == ball.center
