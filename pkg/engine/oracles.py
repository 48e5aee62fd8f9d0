"""Closed-form Gaussian integrals and one-dimensional reductions of J used as reference values."""
import math

import numpy as np
from scipy.special import erf

from engine.quadrature import Estimate, QuadratureSpec, quadrature_engine

SQRT_PI = math.sqrt(math.pi)

J_EQUAL_MASS_CLOSED = 1.5 + (math.sqrt(27.0) / 4.0 - 3.0 * math.atan(1.0 / (2.0 - math.sqrt(3.0)))) / math.pi
J_HEAVY_LIGHT_CLOSED = 2.0 * (1.0 + 1.0 / math.sqrt(3.0) - math.sqrt(2.0))


def half_line_gaussian(a: float) -> float:
    """int_0^inf exp(-a x^2) dx"""
    return 0.5 * math.sqrt(math.pi / a)


def half_line_second_moment(a: float) -> float:
    """int_0^inf x^2 exp(-a x^2) dx"""
    return math.sqrt(math.pi / a) / (4.0 * a)


def shifted_gaussian(a: float, b: float) -> float:
    """int_R exp(-a x^2 + 2 b x) dx"""
    return math.sqrt(math.pi / a) * math.exp(b * b / a)


def half_line_shifted(a: float, b: float) -> float:
    """int_0^inf exp(-a x^2 - 2 b x) dx"""
    return 0.5 * math.sqrt(math.pi / a) * math.exp(b * b / a) * (1.0 - math.erf(b / math.sqrt(a)))


def erf_square_integral(z: float) -> float:
    """int_0^1 exp(-z^2 (y^2 + 1)) / (y^2 + 1) dy, which equals (pi/4)(1 - erf(z)^2)."""
    return 0.25 * math.pi * (1.0 - math.erf(z) ** 2)


def equal_mass_kernel(rho):
    """int dq1 |q1 - q2| exp(-q1^2) as a function of rho = |q2| (equal-mass J kernel)."""
    rho = np.asarray(rho, dtype=float)
    return math.pi**1.5 / (2.0 * rho) * erf(rho) * (1.0 + 2.0 * rho**2) + math.pi * np.exp(-(rho**2))


def heavy_light_kernel(q):
    """Inner q1-integral of J at mu1 = 1, mu2 = 0, written in the centre-of-mass variable."""
    q = np.asarray(q, dtype=float)
    return 2.0 * math.pi**1.5 / q**2 * np.exp(-0.5 * q**2) * np.expm1(q**2)


def j_equal_mass_reduced(spec: QuadratureSpec) -> Estimate:
    return quadrature_engine.integrate_radial(
        lambda rho: rho**2 * np.exp(-(rho**2)) * equal_mass_kernel(rho) ** 2 / math.pi**3.5,
        spec,
        label="j_equal_mass_reduced",
    )


def j_heavy_light_reduced(spec: QuadratureSpec) -> Estimate:
    return quadrature_engine.integrate_radial(
        lambda q: 4.0 * math.pi * q**4 * np.exp(-2.0 * q**2) * heavy_light_kernel(q) ** 2 / (4.0 * math.pi**4.5),
        spec,
        label="j_heavy_light_reduced",
    )
