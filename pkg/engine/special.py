"""Overflow-safe hyperbolic and spherical Bessel helpers shared by the quadrature integrands."""
import numpy as np
from scipy.special import ive

SINHC_TAYLOR_CUTOFF = 1e-4
BESSEL_SERIES_CUTOFF = 0.05


def _sinhc_series(x2):
    # 1 + x^2/6 + x^4/120 + x^6/5040
    return 1.0 + x2 / 6.0 * (1.0 + x2 / 20.0 * (1.0 + x2 / 42.0))


def sinhc(x):
    """sinh(x)/x, with the removable point at x = 0 filled by its Taylor series."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    small = ax < SINHC_TAYLOR_CUTOFF
    safe = np.where(small, 1.0, ax)
    return np.where(small, _sinhc_series(x * x), np.sinh(safe) / safe)


def exp_sinhc(x, log_prefactor):
    """exp(log_prefactor) * sinh(x)/x evaluated without forming sinh(x) for large |x|."""
    x = np.asarray(x, dtype=float)
    log_prefactor = np.asarray(log_prefactor, dtype=float)
    ax = np.abs(x)
    small = ax < SINHC_TAYLOR_CUTOFF
    safe = np.where(small, 1.0, ax)
    large = np.exp(log_prefactor + safe) * (-np.expm1(-2.0 * safe)) / (2.0 * safe)
    return np.where(small, np.exp(log_prefactor) * _sinhc_series(x * x), large)


def scaled_i0(x):
    """e^{-x} sinh(x)/x for x >= 0 (modified spherical Bessel i0, exponentially scaled)."""
    x = np.asarray(x, dtype=float)
    small = x < SINHC_TAYLOR_CUTOFF
    safe = np.where(small, 1.0, x)
    return np.where(small, np.exp(-x) * _sinhc_series(x * x), np.sqrt(0.5 * np.pi / safe) * ive(0.5, safe))


def scaled_i1(x):
    """e^{-x} (x cosh x - sinh x)/x^2 for x >= 0, the derivative of sinh(x)/x, exponentially scaled."""
    x = np.asarray(x, dtype=float)
    small = x < BESSEL_SERIES_CUTOFF
    safe = np.where(small, 1.0, x)
    x2 = x * x
    series = x / 3.0 * (1.0 + x2 / 10.0 * (1.0 + x2 / 28.0 * (1.0 + x2 / 54.0)))
    return np.where(small, np.exp(-x) * series, np.sqrt(0.5 * np.pi / safe) * ive(1.5, safe))
