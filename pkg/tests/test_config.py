from fractions import Fraction
from pathlib import Path

import pytest

from qrcurve_lab.cli import load_config, validate
from qrcurve_lab.curves import TorusLinearCurve
from qrcurve_lab.errors import ConfigError
from qrcurve_lab.models.config import ExperimentConfig, parse_config


def diagnostics_of(raw):
    with pytest.raises(ConfigError) as info:
        parse_config(raw)
    return info.value.diagnostics


def test_defaults_describe_the_diagonal_curve():
    config = parse_config({})
    f = config.build_curve()
    assert isinstance(f, TorusLinearCurve)
    assert f.is_rational
    assert config.build_form().degree == 2
    assert config.build_tau().degree == 1
    assert config.radius_schedule() == [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0]
    assert config.default_ball().center == [0.0, 0.0]


def test_rational_slopes_stay_exact():
    config = parse_config({"curve": {"y": ["1/2", 2, 0.25, "sqrt:2"]}, "analysis": {"v": [0, 0, 0, 0, "1/3"]}})
    y = config.curve.slope()
    assert y[:2] == [Fraction(1, 2), Fraction(2)]
    assert isinstance(y[2], float) and isinstance(y[3], float)
    assert config.curve.y[:2] == ["1/2", "2"]
    assert config.analysis.point()[-1] == Fraction(1, 3)


def test_seed_and_workers_propagate():
    config = parse_config({"seed": 5, "workers": 3})
    assert config.quadrature.seed == config.optimizer.seed == config.samples.seed == config.balls.seed == 5
    assert config.quadrature.workers == config.optimizer.workers == 3


def test_schema_violations_are_reported_with_paths():
    found = diagnostics_of({"curve": {"colour": 1}, "analysis": {"p": 0.5}})
    assert any(line.startswith("curve.colour:") for line in found)
    assert any(line.startswith("analysis.p:") for line in found)


def test_builtin_curves_need_a_name():
    found = diagnostics_of({"curve": {"kind": "builtin"}})
    assert any("name" in line for line in found)


def test_tau_degree_is_checked():
    found = diagnostics_of({"tau": {"degree": 2, "terms": ["dx1^dx2"]}})
    assert found == ["tau.degree: expected 1, got 2"]


def test_target_below_domain_is_reported():
    found = diagnostics_of({"curve": {"kind": "builtin", "name": "linear", "matrix": [[1, 0, 0]]}})
    assert found == ["curve: target dimension 1 is below the domain dimension 3"]


def test_delta_range_is_checked():
    found = diagnostics_of({"analysis": {"delta": 0.3}})
    assert len(found) == 1 and found[0].startswith("analysis.delta:")


def test_non_periodic_torus_terms_are_reported():
    found = diagnostics_of({"form": {"terms": ["dx1^dx2 * lin:1"]}})
    assert len(found) == 1 and found[0].startswith("form.terms:")


def test_radii_must_increase():
    assert diagnostics_of({"radii": [1, 4, 2]}) == ["radii: must be strictly increasing"]


def test_representation_degrees_are_checked():
    found = diagnostics_of(
        {
            "representation": {
                "kind": "split",
                "alpha": {"degree": 1, "terms": ["dx1"]},
                "beta": {"degree": 2, "terms": ["dx2^dx3"]},
            }
        }
    )
    assert found == ["representation: alpha and beta degrees sum to 3, expected 2"]
    found = diagnostics_of({"representation": {"kind": "torus", "degree": 1}})
    assert len(found) == 1 and found[0].startswith("representation.kind:")



def test_closed_declarations_are_verified():
    found = diagnostics_of(
        {
            "representation": {
                "kind": "split",
                "alpha": {"degree": 1, "terms": ["dx1 * sin:2"], "closed": True},
                "beta": {"degree": 1, "terms": ["dx2"]},
            }
        }
    )
    assert len(found) == 1
    assert found[0].startswith("representation: term 0: alpha is declared closed")
    found = diagnostics_of({"form": {"terms": ["dx1^dx2 * sin:3"], "closed": True}})
    assert found == ["form.closed: declared closed but the exterior derivative does not vanish"]


def test_sup_bound_declarations_are_verified():
    found = diagnostics_of({"form": {"terms": ["2 dx1^dx2"], "sup_bound": 1}})
    assert found == ["form.sup_bound: comass exceeds the declared bound 1"]
    term = {"phi": {"degree": 0, "terms": ["3"], "sup_bound": 1}, "alpha": {"degree": 1, "terms": ["dx1"]}}
    term["beta"] = {"degree": 1, "terms": ["dx2"]}
    found = diagnostics_of({"representation": {"kind": "terms", "terms": [term]}})
    assert found == ["representation: term 0: comass of phi exceeds its declared bound 1"]
    assert parse_config({"form": {"terms": ["2 dx1^dx2"], "sup_bound": 2}}).build_form().sup_bound == 2.0

def test_split_representation_on_the_plane():
    config = parse_config(
        {
            "curve": {"kind": "builtin", "name": "identity"},
            "representation": {
                "kind": "split",
                "alpha": {"degree": 1, "terms": ["dx1"]},
                "beta": {"degree": 1, "terms": ["dx2"]},
            },
        }
    )
    rep = config.build_representation()
    assert rep.degree == 2
    assert not rep.target.is_torus


def test_canonical_form_leaves_out_output_paths():
    config = ExperimentConfig.parse_obj({"output": {"json": "report.json"}})
    assert config.output.json_path == "report.json"
    assert "output" not in config.canonical()


def test_dotted_keys_and_overrides(write_config):
    path = write_config({"analysis.p": 3, "curve": {"y": ["1/2", "1/3"]}})
    config = load_config(path, {"quadrature.budget": 4096, "seed": 11})
    assert config.analysis.p == 3.0
    assert config.quadrature.budget == 4096
    assert config.quadrature.seed == 11


def test_validate_lists_every_problem(write_config):
    assert validate(write_config({"seed": 1})) == []
    found = validate(write_config({"tau": {"degree": 0, "terms": ["1"]}, "analysis": {"delta": 2.0}}))
    assert [line.split(":")[0] for line in found] == ["tau.degree", "analysis.delta"]


def test_validate_raises_for_unreadable_files(tmp_path):
    with pytest.raises(ConfigError):
        validate(str(tmp_path / "missing.yaml"))
    broken = tmp_path / "broken.yaml"
    broken.write_text("curve: [1, 2\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        validate(str(broken))


@pytest.mark.parametrize("path", sorted((Path(__file__).parents[1] / "configs").glob("*.yaml")), ids=lambda p: p.name)
def test_shipped_configs_are_valid(path):
    assert validate(str(path)) == []
