import csv
import json
import math

import pytest

from qrcurve_lab.cli import create_cli, main
from qrcurve_lab.commands import COMMANDS

CHEAP = {
    "radii": [1, 2],
    "quadrature": {"radial_nodes": 8, "angular_nodes": 16},
    "balls": {"count": 2},
    "samples": {"count": 20},
    "grid": {"high": 2, "step": 0.5},
    "optimizer": {"restarts": 2, "max_iter": 50},
    "analysis": {
        "covector": "dx1^dx2 + dx3^dx4",
        "dim": 4,
        "oracle_samples": 50,
        "comass_samples": 2,
        "k": 3,
    },
}


def read_report(path):
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)


def test_every_command_has_a_subparser():
    parser = create_cli()
    for name in COMMANDS:
        assert parser.parse_args([name]).subcommand == name
    args = parser.parse_args(["growth", "--radii", "1,2,4", "--seed", "3"])
    assert args.radii == [1.0, 2.0, 4.0]
    assert args.seed == 3


def test_growth_writes_report_and_table(write_config, tmp_path, capsys):
    path = write_config({"radii": [1, 2, 4], "quadrature": {"radial_nodes": 16, "angular_nodes": 64}})
    out, table = tmp_path / "growth.json", tmp_path / "growth.csv"
    assert main(["growth", "--config", path, "--out", str(out), "--csv", str(table)]) == 0
    assert "fast_growth=pass" in capsys.readouterr().out

    with open(table, newline="", encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["r", "A", "error_bound", "A_over_r_eps"]
    assert [float(row[0]) for row in rows[1:]] == [1.0, 2.0, 4.0]
    assert float(rows[1][1]) == pytest.approx(math.pi, rel=1e-6)

    report = read_report(out)
    assert report["command"] == "growth"
    assert report["passed"] is True
    assert report["exit_code"] == 0
    assert report["report"]["growth"]["epsilon"] == pytest.approx(1.0)
    assert "laps" not in report


def test_density_of_a_rational_slope_stays_away(write_config, tmp_path, capsys):
    path = write_config({"curve": {"y": ["1/2", "1/3"]}, "grid": {"high": 5, "step": 0.5}})
    out = tmp_path / "density.json"
    assert main(["density", "--config", path, "--out", str(out)]) == 0
    assert capsys.readouterr().out.startswith("density: rational slope")

    density = read_report(out)["report"]["density"]
    assert density["obstruction"]["order"] == 6
    assert density["distance"] >= density["obstruction"]["radius"]
    assert density["distance"] >= 0.0202
    assert density["passed"] is (density["distance"] >= density["obstruction"]["delta_bound"])


def test_density_of_a_steep_rational_slope_is_judged_against_delta(write_config, tmp_path, capsys):
    path = write_config({"curve": {"y": ["5", "5"]}, "grid": {"high": 1, "step": 0.01}})
    out, table = tmp_path / "density.json", tmp_path / "density.csv"
    assert main(["density", "--config", path, "--out", str(out), "--csv", str(table)]) == 0
    assert "pass" in capsys.readouterr().out

    density = read_report(out)["report"]["density"]
    obstruction = density["obstruction"]
    assert obstruction["order"] == 1
    assert obstruction["radius"] == pytest.approx((math.sqrt(2) - 1) / 4)
    assert obstruction["delta_bound"] == pytest.approx(obstruction["radius"] / 10)
    # steep slopes get within r of v on the grid but never within delta
    assert obstruction["delta_bound"] <= density["distance"] < obstruction["radius"]

    with open(table, newline="", encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["y", "v", "rational", "distance", "closest", "bound", "passed"]
    assert rows[1][0] == "5 5"
    assert float(rows[1][5]) == pytest.approx(obstruction["delta_bound"])


def test_density_fails_below_a_tiny_threshold(write_config, tmp_path):
    path = write_config(
        {"curve": {"y": ["sqrt:2", "sqrt:3"]}, "grid": {"high": 2, "step": 0.5}, "analysis": {"threshold": 1e-9}}
    )
    out = tmp_path / "density.json"
    assert main(["density", "--config", path, "--out", str(out)]) == 2
    report = read_report(out)
    assert report["passed"] is False
    assert report["report"]["density"]["rational"] is False


def test_density_on_a_builtin_curve_is_an_error(write_config, tmp_path):
    path = write_config({"curve": {"kind": "builtin", "name": "identity"}})
    out = tmp_path / "density.json"
    assert main(["density", "--config", path, "--out", str(out)]) == 1
    report = read_report(out)
    assert report["exit_code"] == 1
    assert "DimensionMismatchError" in report["exc_info"]


def test_comass_from_the_command_line(tmp_path, capsys):
    out = tmp_path / "comass.json"
    code = main(["comass", "--expr", "1.0 dx1^dx2 + 1.0 dx3^dx4", "--dim", "4", "--out", str(out)])
    assert code == 0
    assert capsys.readouterr().out.startswith("comass:")
    comass = read_report(out)["report"]["comass"]
    assert comass["value"] == pytest.approx(1.0, abs=1e-3)
    assert comass["oracle"] <= comass["value"] + 1e-9


def test_invalid_config_exits_with_one(write_config, capsys):
    path = write_config({"curve": {"kind": "builtin"}, "analysis": {"delta": 5}})
    assert main(["growth", "--config", path]) == 1
    err = capsys.readouterr().err
    assert "curve" in err


def test_validate_subcommand(write_config, capsys):
    assert main(["validate", "--config", write_config({"seed": 2})]) == 0
    assert capsys.readouterr().out.strip().endswith(": ok")
    assert main(["validate", "--config", write_config({"analysis": {"delta": 0.1}})]) == 1
    assert capsys.readouterr().out.startswith("analysis.delta:")


def test_overrides_reach_the_report(write_config, tmp_path):
    path = write_config(CHEAP)
    out = tmp_path / "rhi.json"
    main(["rhi", "--config", path, "--out", str(out), "--seed", "9", "--p", "3"])
    report = read_report(out)
    assert report["seed"] == 9
    assert report["config"]["analysis"]["p"] == 3.0
    assert report["config"]["balls"]["seed"] == 9


@pytest.mark.parametrize("command", sorted(COMMANDS))
def test_repeated_runs_give_identical_reports(command, write_config, tmp_path):
    path = write_config(CHEAP)
    first, second = tmp_path / "first.json", tmp_path / "second.json"
    code = main([command, "--config", path, "--out", str(first), "--seed", "1"])
    assert main([command, "--config", path, "--out", str(second), "--seed", "1"]) == code
    assert code in (0, 2)
    assert first.read_bytes() == second.read_bytes()
    assert read_report(first)["command"] == command


@pytest.mark.parametrize("command", sorted(COMMANDS))
def test_every_command_writes_its_csv_columns(command, write_config, tmp_path):
    path = write_config(CHEAP)
    table = tmp_path / f"{command}.csv"
    assert main([command, "--config", path, "--csv", str(table)]) in (0, 2)
    with open(table, newline="", encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == list(COMMANDS[command].CSV_HEADER)
    assert len(rows) >= 2
    assert all(len(row) == len(rows[0]) for row in rows[1:])
