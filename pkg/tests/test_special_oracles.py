from pathlib import Path
import math
import sys

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

import numpy as np
import pytest

from engine import oracles
from engine.quadrature import QuadratureSpec, quadrature_engine
from engine.special import SINHC_TAYLOR_CUTOFF, exp_sinhc, scaled_i0, scaled_i1, sinhc


def test_sinhc_is_one_at_the_origin_and_continuous_at_the_switch():
    assert float(sinhc(0.0)) == 1.0
    below = float(sinhc(SINHC_TAYLOR_CUTOFF * (1 - 1e-9)))
    above = float(sinhc(SINHC_TAYLOR_CUTOFF * (1 + 1e-9)))
    assert below == pytest.approx(above, rel=1e-13)
    assert float(sinhc(2.0)) == pytest.approx(math.sinh(2.0) / 2.0, rel=1e-15)


def test_exp_sinhc_stays_finite_where_sinh_overflows():
    value = float(exp_sinhc(800.0, -790.0))

    assert math.isfinite(value)
    assert value == pytest.approx(math.exp(10.0) / 1600.0, rel=1e-13)


def test_scaled_bessel_functions_match_direct_formulas():
    x = np.array([0.01, 0.3, 1.0, 5.0])
    i0 = np.exp(-x) * np.sinh(x) / x
    i1 = np.exp(-x) * (x * np.cosh(x) - np.sinh(x)) / x**2

    assert np.allclose(scaled_i0(x), i0, rtol=1e-12, atol=0.0)
    assert np.allclose(scaled_i1(x), i1, rtol=1e-8, atol=0.0)
    assert float(scaled_i1(0.0)) == 0.0


def test_scaled_bessel_functions_stay_finite_for_large_arguments():
    x = np.array([50.0, 800.0, 1e4])

    assert np.allclose(scaled_i0(x), (1.0 - np.exp(-2.0 * x)) / (2.0 * x), rtol=1e-12, atol=0.0)
    assert np.allclose(scaled_i1(x), (1.0 - 1.0 / x) / (2.0 * x), rtol=1e-12, atol=0.0)


def test_gaussian_closed_forms_agree_with_quadrature():
    spec = QuadratureSpec.from_settings()

    half = quadrature_engine.integrate_radial(lambda x: np.exp(-2.0 * x * x), spec).value
    second = quadrature_engine.integrate_radial(lambda x: x * x * np.exp(-1.5 * x * x), spec).value
    shifted = quadrature_engine.integrate_radial(lambda x: np.exp(-x * x - 0.6 * x), spec).value

    assert half == pytest.approx(oracles.half_line_gaussian(2.0), abs=1e-12)
    assert second == pytest.approx(oracles.half_line_second_moment(1.5), abs=1e-12)
    assert shifted == pytest.approx(oracles.half_line_shifted(1.0, 0.3), abs=1e-12)
    assert oracles.shifted_gaussian(1.0, 0.0) == pytest.approx(math.sqrt(math.pi))


@pytest.mark.parametrize("a, b", [(1.0, 0.3), (1.3, -0.4), (0.8, 1.1)])
def test_shifted_gaussian_over_the_whole_line(a, b):
    spec = QuadratureSpec.from_settings()
    # fold the real line onto [0, inf)
    folded = quadrature_engine.integrate_radial(
        lambda x: np.exp(-a * x * x + 2.0 * b * x) + np.exp(-a * x * x - 2.0 * b * x), spec
    ).value

    assert folded == pytest.approx(oracles.shifted_gaussian(a, b), rel=1e-10)
    assert oracles.shifted_gaussian(a, b) > oracles.shifted_gaussian(a, 0.0)


def test_erf_square_integral_matches_direct_quadrature():
    z = 0.7
    direct = quadrature_engine.integrate_interval(lambda y: np.exp(-z * z * (y * y + 1)) / (y * y + 1), 0.0, 1.0, 40)

    assert direct == pytest.approx(oracles.erf_square_integral(z), abs=1e-13)


def test_closed_j_values():
    assert oracles.J_EQUAL_MASS_CLOSED == pytest.approx(0.66349667, abs=1e-8)
    assert oracles.J_HEAVY_LIGHT_CLOSED == pytest.approx(0.3262734, abs=1e-7)


def test_one_dimensional_j_reductions_reach_closed_values():
    spec = QuadratureSpec.from_settings()

    assert oracles.j_equal_mass_reduced(spec).value == pytest.approx(oracles.J_EQUAL_MASS_CLOSED, abs=1e-6)
    assert oracles.j_heavy_light_reduced(spec).value == pytest.approx(oracles.J_HEAVY_LIGHT_CLOSED, abs=1e-6)
