import math
from fractions import Fraction

import pytest
import yaml

from qrcurve_lab.curves import TorusLinearCurve, identity, torus_volume_form
from qrcurve_lab.exterior import Covector
from qrcurve_lab.manifold import FormField, TargetManifold
from qrcurve_lab.models.specs import QuadratureSpec


@pytest.fixture
def diagonal_curve():
    """x -> (x1, x2, x1 + x2) on T^3."""
    return TorusLinearCurve([Fraction(1), Fraction(1)])


@pytest.fixture
def torus_volume():
    return torus_volume_form(2)


@pytest.fixture
def plane_identity():
    return identity(2)


@pytest.fixture
def plane_volume():
    plane = TargetManifold.euclidean(2)
    return FormField.constant(plane, Covector.volume(2), sup_bound=1.0, name="vol")


@pytest.fixture
def wave_tau():
    """sin(2 pi x3) / (2 pi) dx1 on T^3."""
    torus = TargetManifold.flat_torus(3)
    return FormField.parse(torus, 1, ["dx1 * sin:3"], name="tau").scale(1.0 / (2.0 * math.pi))


@pytest.fixture
def coarse_spec():
    return QuadratureSpec(radial_nodes=16, angular_nodes=64)


@pytest.fixture
def fine_spec():
    return QuadratureSpec(radial_nodes=256, angular_nodes=1024)


@pytest.fixture
def write_config(tmp_path):
    def write(content, name="experiment.yaml"):
        path = tmp_path / name
        path.write_text(yaml.safe_dump(content, sort_keys=False), encoding="utf-8")
        return str(path)

    return write
