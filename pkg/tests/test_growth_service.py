import math

import pytest

from qrcurve_lab.curves import constant_map
from qrcurve_lab.errors import LabError
from qrcurve_lab.models.specs import BallFamilyKind, BallFamilySpec
from qrcurve_lab.quadrature import ball_volume
from qrcurve_lab.services.growth_service import GrowthService, default_radii, epsilon_and_constant
from qrcurve_lab.services.holder_service import HolderService


@pytest.fixture
def service():
    return GrowthService()


def test_epsilon_and_constant_for_the_plane():
    epsilon, constant = epsilon_and_constant(2, 2.0, 1.0)
    assert epsilon == pytest.approx(1.0)
    assert constant == pytest.approx(2.0 * math.sqrt(math.pi), rel=1e-12)


def test_epsilon_and_constant_in_three_dimensions():
    epsilon, constant = epsilon_and_constant(3, 1.5, 2.0)
    assert epsilon == pytest.approx(1.0)
    assert constant == pytest.approx(0.5 * ball_volume(3) ** (1.0 / 3.0) * 4.0, rel=1e-12)


def test_epsilon_vanishes_as_p_approaches_one():
    epsilon, _ = epsilon_and_constant(2, 1.0 + 1e-9, 1.0)
    assert 0.0 < epsilon < 1e-8


@pytest.mark.parametrize("p, c_p", [(1.0, 1.0), (0.5, 1.0), (2.0, 0.0)])
def test_epsilon_and_constant_rejects_bad_arguments(p, c_p):
    with pytest.raises(LabError):
        epsilon_and_constant(2, p, c_p)


def test_growth_of_the_diagonal_curve_is_the_disc_area(service, diagonal_curve, torus_volume):
    report = service.growth_function(diagonal_curve, torus_volume, [1.0, 2.0, 4.0, 8.0])
    for r, area in zip(report.radii, report.areas):
        assert area.value == pytest.approx(math.pi * r ** 2, rel=1e-3)
    assert report.normalized == pytest.approx([math.pi * r for r in report.radii], rel=1e-3)
    assert report.monotone


def test_growth_slope_is_two(service, diagonal_curve, torus_volume):
    report = service.growth_function(diagonal_curve, torus_volume, default_radii())
    assert report.slope == pytest.approx(2.0, abs=0.05)
    assert report.tail_min == pytest.approx(math.pi * 8.0, rel=1e-3)


def test_growth_of_the_identity(service, plane_identity, plane_volume):
    report = service.growth_function(plane_identity, plane_volume, [2.0])
    assert report.areas[0].value == pytest.approx(4.0 * math.pi, rel=1e-6)


def test_growth_rejects_unordered_radii(service, diagonal_curve, torus_volume):
    with pytest.raises(LabError):
        service.growth_function(diagonal_curve, torus_volume, [2.0, 1.0])
    with pytest.raises(LabError):
        service.growth_function(diagonal_curve, torus_volume, [])


def test_fast_growth_passes_for_the_diagonal_curve(service, diagonal_curve, torus_volume):
    report = service.growth_function(diagonal_curve, torus_volume, [1.0, 2.0, 4.0, 8.0])
    verdict = service.fast_growth_check(report, 1.0, 2.0, 1.0, diagonal_curve, torus_volume)
    assert verdict.passed
    assert verdict.epsilon == pytest.approx(1.0)
    assert verdict.constant == pytest.approx(2.0 * math.sqrt(math.pi))
    assert verdict.p_norm == pytest.approx(math.sqrt(math.pi / 4.0), rel=1e-6)
    assert verdict.worst_radius == 1.0


def test_fast_growth_passes_for_the_identity(service, plane_identity, plane_volume):
    report = service.growth_function(plane_identity, plane_volume, [1.0, 2.0, 4.0])
    assert service.fast_growth_check(report, 1.0, 2.0, 1.0, plane_identity, plane_volume).passed


def test_fast_growth_fails_for_a_constant_map(service, plane_volume):
    collapsed = constant_map(2, [0.5, 0.5])
    report = service.growth_function(collapsed, plane_volume, [1.0, 2.0, 4.0])
    assert all(area.value == 0.0 for area in report.areas)
    assert not service.fast_growth_check(report, 1.0, 2.0, 1.0, collapsed, plane_volume).passed


def test_fast_growth_needs_radii_beyond_r0(service, diagonal_curve, torus_volume):
    report = service.growth_function(diagonal_curve, torus_volume, [1.0, 2.0])
    with pytest.raises(LabError):
        service.fast_growth_check(report, 1.0, 2.0, 4.0, diagonal_curve, torus_volume)


@pytest.mark.parametrize(
    "curve_fixture, form_fixture", [("diagonal_curve", "torus_volume"), ("plane_identity", "plane_volume")]
)
def test_reverse_holder_constant_implies_fast_growth(request, service, curve_fixture, form_fixture):
    f, form = request.getfixturevalue(curve_fixture), request.getfixturevalue(form_fixture)
    radii = [1.0, 2.0, 4.0, 8.0]
    family = BallFamilySpec(kind=BallFamilyKind.CONCENTRIC, radii=radii)
    holder = HolderService().reverse_holder_estimate(f, form, family, 2.0)
    report = service.growth_function(f, form, radii)
    assert service.fast_growth_check(report, holder.c_hat, 2.0, 1.0, f, form).passed
