import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field

from core.config import settings
from engine.quadrature import Estimate, QuadratureSpec, quadrature_engine
from engine.special import SINHC_TAYLOR_CUTOFF, exp_sinhc

logger = structlog.get_logger()

SQRT2 = math.sqrt(2.0)
TABLE_GRID = (0.5, 1.0, 0.025)


class CoeffResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    mu1: float = Field(ge=0.0, le=1.0)
    J_fwd: Estimate
    J_rev: Estimate
    L: Estimate
    N: Estimate
    E: Estimate

    @property
    def converged(self) -> bool:
        return self.J_fwd.converged and self.J_rev.converged

    def to_dict(self) -> dict:
        return {
            "mu1": self.mu1,
            "E": self.E.value,
            "E_err": self.E.abs_err,
            "J_fwd": self.J_fwd.to_dict(),
            "J_rev": self.J_rev.to_dict(),
            "L": self.L.to_dict(),
            "N": self.N.to_dict(),
            "converged": self.converged,
        }


class CoeffTable(BaseModel):
    model_config = ConfigDict(frozen=True)

    rows: list[CoeffResult]
    failures: dict[float, str] = {}

    @property
    def monotone(self) -> bool:
        values = [row.E.value for row in self.rows]
        return all(b >= a for a, b in zip(values, values[1:]))


def _check_fraction(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


class CoefficientEngine:
    """J, L, N integrals over the Gaussian in-state and the entanglement coefficient E(mu1)."""

    def mu_grid(self, start: float, stop: float, step: float) -> list[float]:
        if step <= 0:
            raise ValueError(f"Grid step must be positive, got {step}")
        if stop < start:
            raise ValueError(f"Grid end {stop} lies below its start {start}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [float(np.round(start + i * step, 10)) for i in range(count)]

    # --- J ---------------------------------------------------------------

    def _j_inner(self, rho: float, mu1: float, mu2: float, n_r: int, u, u_w, cutoff: float) -> float:
        """Inner q1-integral at |q2| = rho with q2 on the polar axis."""
        s, d = mu1 * mu1 + mu2 * mu2, mu1 - mu2
        r_max = cutoff + rho
        # |mu2 q1 - mu1 q2| has its kink at |q1| = mu1 rho / mu2 on the polar axis
        kink = mu1 * rho / mu2 if mu2 > 0 else math.inf
        breaks = [0.0, kink, r_max] if 0.0 < kink < r_max else [0.0, r_max]
        r, r_w = quadrature_engine.panel_rule(breaks, n_r)

        R, U = r[:, None], u[None, :]
        cm_sq = R * R + rho * rho + 2.0 * R * rho * U
        rel_sq = np.maximum(mu2 * mu2 * R * R + mu1 * mu1 * rho * rho - 2.0 * mu1 * mu2 * R * rho * U, 0.0)
        log_env = -0.5 * s * cm_sq - rel_sq - 0.5 * R * R
        x = d * np.sqrt(np.maximum(cm_sq, 0.0) * rel_sq)
        values = np.sqrt(rel_sq) * exp_sinhc(x, log_env)
        return 2.0 * math.pi * float((r_w * r * r) @ values @ u_w)

    def _j_level(self, mu1: float, mu2: float, spec: QuadratureSpec, level: int) -> float:
        n_r = spec.radial_nodes << level
        rho, rho_w = quadrature_engine.mapped_rule(n_r, 0.0, spec.radial_cutoff)
        # u = 1 - t^2 clusters angular nodes at the kink direction u = 1
        t, t_w = quadrature_engine.mapped_rule(spec.angular_nodes << level, 0.0, SQRT2)
        u, u_w = 1.0 - t * t, 2.0 * t * t_w
        total = 0.0
        for rho_i, w_i in zip(rho, rho_w):
            g = self._j_inner(float(rho_i), mu1, mu2, n_r, u, u_w, spec.radial_cutoff)
            total += w_i * rho_i * rho_i * g * g
        return 4.0 * math.pi * total / math.pi**4.5

    def J(self, mu1: float, mu2: float, spec: QuadratureSpec | None = None) -> Estimate:
        _check_fraction("mu1", mu1)
        _check_fraction("mu2", mu2)
        spec = spec or QuadratureSpec.from_settings()
        return quadrature_engine.refine(
            lambda level: self._j_level(mu1, mu2, spec, level), spec, label=f"J({mu1},{mu2})"
        )

    # --- L and N ---------------------------------------------------------

    def L_closed(self, mu1: float) -> Estimate:
        _check_fraction("mu1", mu1)
        d = 2.0 * mu1 - 1.0
        return Estimate.exact(math.sqrt(2.0 / math.pi) / math.sqrt(1.0 + d * d))

    def N_closed(self, mu1: float) -> Estimate:
        _check_fraction("mu1", mu1)
        d = 2.0 * mu1 - 1.0
        d2 = d * d
        if abs(d) < SINHC_TAYLOR_CUTOFF:
            return Estimate.exact(0.75 - 3.0 * d2 / 16.0)
        return Estimate.exact(((1.0 + d2) ** 1.5 - 1.0) / (2.0 * d2 * math.sqrt(1.0 + d2)))

    def _relative_moment_level(self, mu1: float, mu2: float, power: int, spec: QuadratureSpec, level: int) -> float:
        """(1/pi^3) int dQ dq |q|^power |psi_in|-type integrand with the angle between Q and q numeric."""
        s, d = mu1 * mu1 + mu2 * mu2, mu1 - mu2
        n = spec.radial_nodes << level
        big, big_w = quadrature_engine.mapped_rule(n, 0.0, spec.radial_cutoff)
        q, q_w = quadrature_engine.mapped_rule(n, 0.0, spec.radial_cutoff)
        u, u_w = quadrature_engine.gauss_rule(spec.angular_nodes << level)
        Q, U = q[:, None], u[None, :]
        total = 0.0
        for P, P_w in zip(big, big_w):
            log_env = -s * P * P - 2.0 * Q * Q - d * P * Q * U
            values = Q ** (2 + power) * exp_sinhc(d * P * Q, log_env)
            total += P_w * P * P * float(q_w @ values @ u_w)
        return 8.0 * math.pi**2 * total / math.pi**3

    def L_quad(self, mu1: float, mu2: float, spec: QuadratureSpec | None = None) -> Estimate:
        _check_fraction("mu1", mu1)
        _check_fraction("mu2", mu2)
        spec = spec or QuadratureSpec.from_settings()
        return quadrature_engine.refine(
            lambda level: self._relative_moment_level(mu1, mu2, 1, spec, level), spec, label=f"L({mu1},{mu2})"
        )

    def N_quad(self, mu1: float, mu2: float, spec: QuadratureSpec | None = None) -> Estimate:
        _check_fraction("mu1", mu1)
        _check_fraction("mu2", mu2)
        spec = spec or QuadratureSpec.from_settings()
        return quadrature_engine.refine(
            lambda level: self._relative_moment_level(mu1, mu2, 2, spec, level), spec, label=f"N({mu1},{mu2})"
        )

    def _reduced_level(self, mu1: float, power: int, spec: QuadratureSpec, level: int) -> float:
        # angular integrals done analytically: (16/pi) int int lam^(2+power) rho^2 e^(-2lam^2 - s rho^2) sinhc(d lam rho)^2
        mu2 = 1.0 - mu1
        s, d = mu1 * mu1 + mu2 * mu2, mu1 - mu2
        n = spec.radial_nodes << level
        lam, lam_w = quadrature_engine.mapped_rule(n, 0.0, spec.radial_cutoff)
        rho, rho_w = quadrature_engine.mapped_rule(n, 0.0, spec.radial_cutoff)
        LAM, RHO = lam[:, None], rho[None, :]
        root = exp_sinhc(d * LAM * RHO, -LAM * LAM - 0.5 * s * RHO * RHO)
        values = LAM ** (1 + power) * RHO * RHO * root * root
        return 16.0 / math.pi * float(lam_w @ values @ rho_w)

    def L_reduced(self, mu1: float, spec: QuadratureSpec | None = None) -> Estimate:
        _check_fraction("mu1", mu1)
        spec = spec or QuadratureSpec.from_settings()
        return quadrature_engine.refine(lambda level: self._reduced_level(mu1, 2, spec, level), spec, "L_reduced")

    def N_reduced(self, mu1: float, spec: QuadratureSpec | None = None) -> Estimate:
        _check_fraction("mu1", mu1)
        spec = spec or QuadratureSpec.from_settings()
        return quadrature_engine.refine(lambda level: self._reduced_level(mu1, 3, spec, level), spec, "N_reduced")

    # --- E ---------------------------------------------------------------

    def E(self, mu1: float, spec: QuadratureSpec | None = None) -> CoeffResult:
        _check_fraction("mu1", mu1)
        spec = spec or QuadratureSpec.from_settings()
        mu2 = 1.0 - mu1
        j_fwd = self.J(mu1, mu2, spec)
        j_rev = j_fwd if mu1 == mu2 else self.J(mu2, mu1, spec)
        L, N = self.L_closed(mu1), self.N_closed(mu1)
        value = 8.0 * (L.value**2 + N.value - j_fwd.value - j_rev.value)
        E = Estimate(
            value=value,
            abs_err=8.0 * (j_fwd.abs_err + j_rev.abs_err),
            method="quadrature",
            converged=j_fwd.converged and j_rev.converged,
        )
        logger.debug("entanglement_coefficient", mu1=mu1, E=E.value, E_err=E.abs_err)
        return CoeffResult(mu1=mu1, J_fwd=j_fwd, J_rev=j_rev, L=L, N=N, E=E)

    def table(self, mu1_grid=None, spec: QuadratureSpec | None = None, workers: int | None = None) -> CoeffTable:
        grid = list(mu1_grid) if mu1_grid is not None else self.mu_grid(*TABLE_GRID)
        for mu1 in grid:
            _check_fraction("mu1", mu1)
        spec = spec or QuadratureSpec.from_settings()

        def evaluate(mu1: float):
            try:
                return self.E(mu1, spec)
            except Exception as e:
                logger.error("table_point_failed", mu1=mu1, error=str(e))
                return e

        with ThreadPoolExecutor(max_workers=workers or settings.WORKERS) as pool:
            outcomes = list(pool.map(evaluate, grid))

        rows = [o for o in outcomes if isinstance(o, CoeffResult)]
        failures = {mu1: str(o) for mu1, o in zip(grid, outcomes) if not isinstance(o, CoeffResult)}
        logger.info("table_finished", points=len(grid), failed=len(failures))
        return CoeffTable(rows=rows, failures=failures)


coefficient_engine = CoefficientEngine()
