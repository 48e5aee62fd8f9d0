from pathlib import Path
import math
import sys

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

import pytest

from cli.verify import REFERENCE_E
from engine.coefficients import TABLE_GRID, coefficient_engine
from engine.oracles import J_EQUAL_MASS_CLOSED, J_HEAVY_LIGHT_CLOSED
from engine.quadrature import QuadratureSpec


def _build_spec(**overrides):
    return QuadratureSpec.from_settings(**overrides)


def _build_light_spec():
    return _build_spec(radial_nodes=24, angular_nodes=16, target_rel_err=1e-6, max_refinements=2)


def test_j_equal_masses_matches_closed_form():
    est = coefficient_engine.J(0.5, 0.5, _build_spec())

    assert est.converged
    assert est.value == pytest.approx(J_EQUAL_MASS_CLOSED, abs=1e-5)


def test_j_heavy_light_matches_closed_form():
    assert coefficient_engine.J(1.0, 0.0, _build_spec()).value == pytest.approx(J_HEAVY_LIGHT_CLOSED, abs=1e-5)


def test_j_rejects_fractions_outside_unit_interval():
    with pytest.raises(ValueError):
        coefficient_engine.J(1.2, -0.2)


def test_n_closed_has_equal_mass_limit_and_series_branch():
    assert coefficient_engine.N_closed(0.5).value == pytest.approx(0.75, abs=1e-15)
    assert coefficient_engine.N_closed(0.5 + 1e-6).value == pytest.approx(0.75, abs=1e-10)
    assert coefficient_engine.N_closed(1.0).value == pytest.approx((2**1.5 - 1) / (2 * math.sqrt(2)))
    assert coefficient_engine.N_closed(0.3).method == "closed-form"


def test_n_quad_at_equal_masses():
    assert coefficient_engine.N_quad(0.5, 0.5, _build_spec()).value == pytest.approx(0.75, abs=1e-8)


@pytest.mark.parametrize("mu1", [0.0, 0.25, 0.5, 0.75, 1.0])
def test_l_quad_matches_closed_form(mu1):
    closed = coefficient_engine.L_closed(mu1).value

    assert coefficient_engine.L_quad(mu1, 1.0 - mu1, _build_spec()).value == pytest.approx(closed, rel=1e-8)


@pytest.mark.parametrize("mu1", [0.0, 0.5, 0.9])
def test_reduced_forms_match_closed_forms(mu1):
    spec = _build_spec()

    assert coefficient_engine.L_reduced(mu1, spec).value == pytest.approx(coefficient_engine.L_closed(mu1).value, rel=1e-8)
    assert coefficient_engine.N_reduced(mu1, spec).value == pytest.approx(coefficient_engine.N_closed(mu1).value, rel=1e-8)


def test_e_at_equal_masses():
    result = coefficient_engine.E(0.5, _build_spec())

    assert result.E.value == pytest.approx(0.4770, abs=5e-4)
    assert result.J_fwd is result.J_rev
    assert result.to_dict()["E_err"] == result.E.abs_err


def test_e_heavy_light_limit():
    assert coefficient_engine.E(1.0, _build_spec()).E.value == pytest.approx(2.0287, abs=5e-3)


def test_e_is_symmetric_under_mass_exchange():
    spec = _build_light_spec()
    a, b = coefficient_engine.E(0.2, spec).E, coefficient_engine.E(0.8, spec).E

    assert abs(a.value - b.value) <= a.abs_err + b.abs_err + 1e-12


def test_mu_grid_is_rounded_and_inclusive():
    grid = coefficient_engine.mu_grid(*TABLE_GRID)

    assert len(grid) == 21
    assert grid[0] == 0.5 and grid[-1] == 1.0
    assert grid[12] == 0.8
    assert coefficient_engine.mu_grid(0.5, 0.5, 0.025) == [0.5]
    with pytest.raises(ValueError):
        coefficient_engine.mu_grid(0.6, 0.5, 0.025)


def test_table_reproduces_published_rows_and_is_monotone():
    expected = {mu1: REFERENCE_E[mu1] for mu1 in (0.5, 0.6, 0.7, 0.8, 0.9, 1.0)}
    table = coefficient_engine.table(list(expected), _build_light_spec(), workers=2)

    assert not table.failures
    assert [row.mu1 for row in table.rows] == list(expected)
    for row in table.rows:
        assert row.E.value == pytest.approx(expected[row.mu1], abs=5e-3)
    assert table.monotone


def test_table_validates_grid_before_running():
    with pytest.raises(ValueError):
        coefficient_engine.table([0.5, 1.5], _build_light_spec())


def test_table_records_failed_points(monkeypatch):
    original = coefficient_engine.E

    def flaky_E(mu1, spec=None):
        if mu1 == 0.75:
            raise FloatingPointError("overflow in integrand")
        return original(mu1, spec)

    monkeypatch.setattr(coefficient_engine, "E", flaky_E)
    table = coefficient_engine.table([0.5, 0.75], _build_light_spec(), workers=2)

    assert [row.mu1 for row in table.rows] == [0.5]
    assert table.failures == {0.75: "overflow in integrand"}
