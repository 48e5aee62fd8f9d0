from pathlib import Path
import json
import math
import sys

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

import pytest
import structlog

import main

LIGHT = ["--radial-nodes", "24", "--angular-nodes", "16", "--target-rel-err", "1e-6", "--max-refinements", "2"]


@pytest.fixture(autouse=True)
def _reset_structlog():
    yield
    structlog.reset_defaults()


def _run(capsys, *argv):
    code = main.main(["--log-level", "WARNING", *argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def _write_square_well(tmp_path, k0R, name="well.json"):
    path = tmp_path / name
    path.write_text(json.dumps({"kind": "square-well", "parameters": {"depth": k0R * k0R}, "support_radius": 1.0, "mass": 0.5}))
    return path


def test_coeff_equal_masses(capsys):
    code, out, _ = _run(capsys, "coeff", "--mu1", "0.5", *LIGHT)
    payload = json.loads(out)

    assert code == 0
    assert payload["E"] == pytest.approx(0.4770, abs=5e-4)
    assert set(payload) >= {"mu1", "E", "E_err", "J_fwd", "J_rev", "L", "N"}


def test_coeff_rejects_mass_fraction_outside_unit_interval(capsys):
    code, out, err = _run(capsys, "coeff", "--mu1", "1.5")

    assert code == 1
    assert out == ""
    assert "mu1" in err


def test_usage_errors_exit_with_one(capsys):
    assert _run(capsys, "coeff")[0] == 1
    assert _run(capsys, "nonsense")[0] == 1
    assert _run(capsys, "--workers", "0", "coeff", "--mu1", "0.5")[0] == 1


def test_coeff_warns_when_quadrature_does_not_converge(capsys):
    code, out, _ = _run(
        capsys, "coeff", "--mu1", "0.7", "--radial-nodes", "4", "--angular-nodes", "4", "--max-refinements", "1"
    )

    assert code == 2
    assert json.loads(out)["converged"] is False


def test_table_single_row_csv(capsys):
    code, out, _ = _run(capsys, "table", "--from", "0.5", "--to", "0.5", *LIGHT)
    lines = out.splitlines()

    assert code == 0
    assert lines[0] == "mu1,E,E_err"
    assert len(lines) == 2
    assert lines[1].startswith("0.5,0.477")


def test_table_writes_to_file_and_rejects_missing_directory(tmp_path, capsys):
    out_file = tmp_path / "table.csv"
    code, out, _ = _run(capsys, "table", "--from", "0.75", "--to", "1.0", "--step", "0.25", "--out", str(out_file), *LIGHT)

    assert code == 0
    assert out == ""
    assert out_file.read_text().splitlines()[0] == "mu1,E,E_err"

    code, _, err = _run(capsys, "table", "--out", str(tmp_path / "missing" / "t.csv"))
    assert code == 1
    assert "does not exist" in err


def test_figure_shares_table_abscissae_bit_for_bit(capsys):
    _, figure_out, _ = _run(capsys, "figure", "--points", "3", *LIGHT)
    _, table_out, _ = _run(capsys, "table", "--from", "0.5", "--to", "1.0", "--step", "0.25", *LIGHT)

    assert figure_out == table_out
    assert len(figure_out.splitlines()) == 4


def test_figure_rejects_single_point(capsys):
    assert _run(capsys, "figure", "--points", "1")[0] == 1


def test_scatlen_square_well(tmp_path, capsys):
    code, out, _ = _run(capsys, "scatlen", str(_write_square_well(tmp_path, 1.0)))
    payload = json.loads(out)

    assert code == 0
    assert payload["c0"] == pytest.approx(1.0 - math.tan(1.0), rel=1e-4)
    assert payload["Y1"] == [0.0, 0.0, 0.0]
    assert payload["condition"] < 1e8
    assert set(payload) >= {"c0", "c0_err", "Y1", "condition"}


def test_scatlen_zero_potential(tmp_path, capsys):
    code, out, _ = _run(capsys, "scatlen", str(_write_square_well(tmp_path, 0.0)))

    assert code == 0
    assert json.loads(out)["c0"] == 0.0


def test_scatlen_resonance_exits_with_three(tmp_path, capsys):
    code, out, err = _run(capsys, "scatlen", str(_write_square_well(tmp_path, 0.5 * math.pi)))

    assert code == 3
    assert out == ""
    assert "resonance" in err


def test_scatlen_malformed_file_reports_line(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "kind": "square-well"\n  "support_radius": 1.0\n}\n')

    code, _, err = _run(capsys, "scatlen", str(path))

    assert code == 1
    assert f"{path}:3" in err


def test_purity_without_scattering_is_exactly_pure(capsys):
    code, out, _ = _run(capsys, "purity", "--mu1", "0.5", "--c0", "0", "--s", "0.05", "--samples", "2000", *LIGHT)
    payload = json.loads(out)

    assert code == 0
    assert payload["purity_formula"] == 1.0
    assert payload["purity_mc"] == 1.0
    assert payload["stderr"] == 0.0
    assert payload["agreement"] is True


def test_purity_equal_masses_agree(capsys):
    code, out, _ = _run(
        capsys, "purity", "--mu1", "0.5", "--c0", "1", "--s", "0.05", "--p0", "0", "--samples", "200000", "--seed", "7", *LIGHT
    )
    payload = json.loads(out)

    assert code == 0
    assert payload["agreement"] is True
    assert payload["purity_formula"] == pytest.approx(1.0 - 0.0025 * 0.4770, abs=2e-6)
    assert set(payload) >= {"mu1", "E", "E_err", "purity_formula", "purity_mc", "stderr", "agreement"}


def test_purity_warns_about_large_sigma(capsys):
    code, out, err = _run(capsys, "purity", "--mu1", "0.5", "--c0", "0.2", "--s", "0.5", "--samples", "2000", *LIGHT)

    assert code in (0, 2)
    assert json.loads(out)["leading_order_trusted"] is False
    assert "truncated_smatrix_out_of_range" in err


def test_verify_quick_unitarity(capsys):
    code, out, _ = _run(capsys, "verify", "--quick", "--check", "unitarity")

    assert code == 0
    assert "PASS" in out
    assert "1/1 checks passed" in out


def test_verify_quick_skips_monte_carlo_checks(capsys):
    code, out, _ = _run(capsys, "verify", "--quick", "--check", "unitarity", "--check", "purity-law", "--format", "json")
    payload = json.loads(out)

    assert code == 0
    assert list(payload["groups"]) == ["smatrix"]


def test_verify_reports_tampered_j_tolerance(capsys):
    code, out, _ = _run(capsys, "verify", "--quick", "--check", "j-closed", "--j-tol", "1e-20", *LIGHT)

    assert code == 2
    assert "FAIL" in out
    assert "J(1/2,1/2)" in out


def test_verify_rejects_unknown_check(capsys):
    assert _run(capsys, "verify", "--check", "everything")[0] == 1
