from pathlib import Path
import json
import sys

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

import pytest

from connectors.potential_file import PotentialFileError, potential_file_reader


def _write_definition(tmp_path, payload, name="pot.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload, indent=2))
    return path


def test_reads_analytic_definition(tmp_path):
    path = _write_definition(
        tmp_path,
        {"kind": "gaussian-well", "parameters": {"depth": 1.0, "range": 0.5}, "support_radius": 3.0, "mass": 2.0, "hbar": 1.5},
    )

    pot = potential_file_reader.read(path)

    assert pot.kind == "gaussian-well"
    assert pot.support_radius == 3.0
    assert pot.coupling == pytest.approx(4.0 / 2.25)


def test_square_well_radius_may_come_from_parameters(tmp_path):
    path = _write_definition(tmp_path, {"kind": "square-well", "parameters": {"depth": 2.0, "radius": 1.5}})

    pot = potential_file_reader.read(path)

    assert pot.support_radius == 1.5
    assert pot.parameters == {"depth": 2.0}


def test_reads_tabulated_radial_potential_relative_to_definition(tmp_path):
    (tmp_path / "table.dat").write_text("0.0 -1.0\n0.5 -0.8\n\n1.0 -0.5\n1.5 -0.1\n2.0 0.0\n")
    path = _write_definition(tmp_path, {"kind": "tabulated-radial", "table": "table.dat", "support_radius": 2.0})

    pot = potential_file_reader.read(path)

    assert pot.table_r == (0.0, 0.5, 1.0, 1.5, 2.0)
    assert pot.table_v[0] == -1.0


def test_invalid_json_reports_its_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "kind": "square-well",\n  "parameters": {"depth": 1.0,}\n}\n')

    with pytest.raises(PotentialFileError) as info:
        potential_file_reader.read(path)

    assert info.value.line == 3


def test_unknown_field_reports_its_line(tmp_path):
    path = _write_definition(tmp_path, {"kind": "square-well", "support_radius": 1.0, "depht": 1.0})

    with pytest.raises(PotentialFileError) as info:
        potential_file_reader.read(path)

    assert info.value.line == 4
    assert "depht" in str(info.value)


def test_invalid_field_value_points_at_the_field(tmp_path):
    path = _write_definition(tmp_path, {"kind": "square-well", "parameters": {"depth": 1.0}, "support_radius": -1.0})

    with pytest.raises(PotentialFileError) as info:
        potential_file_reader.read(path)

    assert info.value.line == 6
    assert "support_radius" in str(info.value)


def test_bad_table_row_reports_its_line(tmp_path):
    (tmp_path / "table.dat").write_text("0.0 -1.0\n0.5 -0.8\n1.0 oops\n1.5 -0.1\n")
    path = _write_definition(tmp_path, {"kind": "tabulated-radial", "table": "table.dat", "support_radius": 1.5})

    with pytest.raises(PotentialFileError) as info:
        potential_file_reader.read(path)

    assert info.value.line == 3


def test_non_increasing_table_reports_its_line(tmp_path):
    (tmp_path / "table.dat").write_text("0.0 -1.0\n0.5 -0.8\n0.5 -0.7\n1.5 -0.1\n")
    path = _write_definition(tmp_path, {"kind": "tabulated-radial", "table": "table.dat", "support_radius": 1.5})

    with pytest.raises(PotentialFileError) as info:
        potential_file_reader.read(path)

    assert info.value.line == 3


def test_missing_files_are_reported(tmp_path):
    with pytest.raises(PotentialFileError):
        potential_file_reader.read(tmp_path / "absent.json")

    path = _write_definition(tmp_path, {"kind": "tabulated-radial", "table": "absent.dat", "support_radius": 1.0})
    with pytest.raises(PotentialFileError):
        potential_file_reader.read(path)
