import math
from fractions import Fraction

import pytest

from qrcurve_lab.curves import TorusLinearCurve, torus_volume_form
from qrcurve_lab.errors import DegreeError, DimensionMismatchError, RepresentationError
from qrcurve_lab.exterior import Covector
from qrcurve_lab.manifold import FormField, TargetManifold
from qrcurve_lab.models.reports import TermSign
from qrcurve_lab.models.specs import SampleSpec
from qrcurve_lab.services.signed_service import (
    RepresentationKind,
    RepresentationTerm,
    SignedRepresentation,
    SignedService,
    representation_cost,
    split_representation,
    torus_product_representation,
    torus_signed_representation,
)


@pytest.fixture
def service():
    return SignedService()


@pytest.fixture
def plane():
    return TargetManifold.euclidean(2)


@pytest.mark.parametrize("m, degree", [(2, 1), (3, 1), (4, 2)])
def test_torus_representation_rebuilds_the_volume_form(m, degree):
    torus = TargetManifold.flat_torus(m)
    xi = Covector.basis(m, range(1, degree + 1)) * 2.0
    rep = torus_signed_representation(degree, torus, xi)
    volume = FormField.constant(torus, Covector.volume(m))
    assert rep.kind == RepresentationKind.R_LINEAR
    assert rep.reconstruction_error(volume) == pytest.approx(0.0, abs=1e-12)
    assert representation_cost(rep) == pytest.approx(1.0)


def test_torus_representation_needs_a_torus(plane):
    with pytest.raises(DimensionMismatchError):
        torus_signed_representation(1, plane)


def test_torus_representation_checks_the_degree():
    with pytest.raises(DegreeError):
        torus_signed_representation(3, TargetManifold.flat_torus(3))


@pytest.mark.parametrize("y", [[Fraction(1), Fraction(1)], [math.sqrt(2.0), math.sqrt(3.0)]])
def test_product_representation_is_signed_along_linear_curves(service, y):
    curve = TorusLinearCurve(y)
    rep = torus_product_representation(2)
    verdict = service.signed_check(rep, curve, SampleSpec(count=500), form=torus_volume_form(2))
    assert verdict.signed
    assert verdict.terms[0].verdict == TermSign.NONNEGATIVE
    assert verdict.reconstruction_error == pytest.approx(0.0, abs=1e-12)
    assert verdict.cost == pytest.approx(1.0)


def test_mixed_term_reports_witnesses(service, plane_identity, plane):
    alpha = FormField.parse(plane, 1, ["dx1 * lin:1"], is_closed=True)
    beta = FormField.parse(plane, 1, ["dx2"], is_closed=True)
    verdict = service.signed_check(split_representation(alpha, beta), plane_identity, SampleSpec(count=200))
    assert not verdict.signed
    term = verdict.terms[0]
    assert term.verdict == TermSign.MIXED
    assert term.minimum < 0 < term.maximum
    assert len(term.witnesses) == 4
    assert sum(1 for w in term.witnesses if w[0] > 0) == 2


def test_vanishing_product_is_zero(service, plane_identity, plane):
    dx1 = FormField.parse(plane, 1, ["dx1"], is_closed=True)
    verdict = service.signed_check(split_representation(dx1, dx1), plane_identity, SampleSpec(count=50))
    assert verdict.terms[0].verdict == TermSign.ZERO
    assert verdict.signed


def test_linear_representation_needs_constant_phi(plane):
    phi = FormField.parse(plane, 0, ["1 * lin:1"])
    dx1 = FormField.parse(plane, 1, ["dx1"], is_closed=True)
    dx2 = FormField.parse(plane, 1, ["dx2"], is_closed=True)
    with pytest.raises(RepresentationError):
        SignedRepresentation([RepresentationTerm(phi, dx1, dx2)], RepresentationKind.R_LINEAR)
    assert SignedRepresentation([RepresentationTerm(phi, dx1, dx2)]).kind == RepresentationKind.F_SIGNED



def test_declared_closed_factors_are_verified():
    torus = TargetManifold.flat_torus(3)
    wavy = FormField.parse(torus, 1, ["dx1 * sin:2"], is_closed=True)
    dx2 = FormField.parse(torus, 1, ["dx2"], is_closed=True)
    with pytest.raises(RepresentationError, match="alpha is declared closed"):
        split_representation(wavy, dx2)
    # sin(2 pi x1) dx1 is exact
    exact = FormField.parse(torus, 1, ["dx1 * sin:1"], is_closed=True)
    assert split_representation(exact, dx2).degree == 2

def test_reconstruction_mismatch_is_an_error(service, diagonal_curve, torus_volume):
    with pytest.raises(RepresentationError):
        service.signed_check(
            torus_product_representation(2), diagonal_curve, SampleSpec(count=10), form=torus_volume.scale(2.0)
        )


def test_representation_must_match_the_curve(service, diagonal_curve):
    with pytest.raises(DimensionMismatchError):
        service.signed_check(torus_product_representation(3), diagonal_curve, SampleSpec(count=10))
