import math
from functools import lru_cache
from typing import Literal

import numpy as np
import structlog
from numpy.polynomial import chebyshev as cheb
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.linalg import get_lapack_funcs, lu_factor, lu_solve
from scipy.spatial.distance import cdist

from core.config import settings
from engine.quadrature import Estimate, QuadratureSpec, quadrature_engine
from engine.smatrix import LowEnergySMatrix, smatrix_engine

logger = structlog.get_logger()

PotentialKind = Literal["square-well", "gaussian-well", "yukawa-cutoff", "tabulated-radial", "anisotropic-grid"]

REQUIRED_PARAMETERS = {
    "square-well": ("depth",),
    "gaussian-well": ("depth", "range"),
    "yukawa-cutoff": ("depth", "range"),
    "tabulated-radial": (),
    "anisotropic-grid": (),
}

# integral of 1/|y| over a unit cube centred at the origin
UNIT_CUBE_COULOMB = 3.0 * math.log(2.0 + math.sqrt(3.0)) - 0.5 * math.pi
MIN_RADIAL_GRID = 16
MIN_COLLOCATION_GRID = 8
MAX_COLLOCATION_GRID = 32


class ResonanceError(RuntimeError):
    def __init__(self, condition: float, grid_size: int):
        self.condition = condition
        self.grid_size = grid_size
        super().__init__(
            f"Zero-energy operator is near singular (condition {condition:.3e} on grid {grid_size}); "
            "the potential has a zero-energy resonance or bound state"
        )


class Potential(BaseModel):
    """Interaction V(x) in physical units; W = (2m/hbar^2) V enters the zero-energy equation."""

    model_config = ConfigDict(frozen=True)

    kind: PotentialKind
    parameters: dict[str, float] = {}
    support_radius: float = Field(gt=0)
    mass: float = Field(default=1.0, gt=0)
    hbar: float = Field(default=1.0, gt=0)
    beta: float | None = None
    anisotropy: tuple[float, float, float] = (0.0, 0.0, 0.0)
    table_r: tuple[float, ...] | None = None
    table_v: tuple[float, ...] | None = None
    grid_values: tuple[float, ...] | None = None
    grid_size: int | None = None

    @model_validator(mode="after")
    def check_kind_data(self) -> "Potential":
        missing = [p for p in REQUIRED_PARAMETERS[self.kind] if p not in self.parameters]
        if missing:
            raise ValueError(f"{self.kind} potential is missing parameters: {', '.join(missing)}")
        if "range" in self.parameters and self.parameters["range"] <= 0:
            raise ValueError("Potential range must be positive")
        if self.kind == "tabulated-radial":
            if self.table_r is None or self.table_v is None:
                raise ValueError("tabulated-radial potential needs table_r and table_v")
            r = np.asarray(self.table_r)
            if len(r) != len(self.table_v) or len(r) < 4:
                raise ValueError("Radial table needs at least 4 (r, V) pairs of equal length")
            if r[0] < 0 or np.any(np.diff(r) <= 0):
                raise ValueError("Radial table must be non-negative and strictly increasing in r")
            if r[-1] < self.support_radius:
                raise ValueError(f"Radial table ends at r={r[-1]} before support_radius={self.support_radius}")
            if not np.all(np.isfinite(self.table_v)):
                raise ValueError("Radial table values must be finite")
        if self.kind == "anisotropic-grid":
            if self.grid_values is None or self.grid_size is None:
                raise ValueError("anisotropic-grid potential needs grid_values and grid_size")
            if len(self.grid_values) != self.grid_size**3:
                raise ValueError(f"Expected {self.grid_size ** 3} grid values, got {len(self.grid_values)}")
        return self

    @property
    def coupling(self) -> float:
        return 2.0 * self.mass / self.hbar**2

    @property
    def is_radial(self) -> bool:
        return self.kind != "anisotropic-grid" and not any(self.anisotropy)

    def radial_values(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        inside = r <= self.support_radius
        p = self.parameters
        if self.kind == "square-well":
            values = np.full_like(r, -p["depth"])
        elif self.kind == "gaussian-well":
            values = -p["depth"] * np.exp(-((r / p["range"]) ** 2))
        elif self.kind == "yukawa-cutoff":
            safe = np.where(r > 0, r, np.inf)
            values = -p["depth"] * p["range"] * np.exp(-r / p["range"]) / safe
        elif self.kind == "tabulated-radial":
            values = CubicSpline(self.table_r, self.table_v)(r)
        else:
            raise ValueError("anisotropic-grid potentials have no radial profile")
        return np.where(inside, values, 0.0)

    def values_at(self, points) -> np.ndarray:
        """V at 3D points (analytic and tabulated kinds, with the optional (1 + eps.x_hat) factor)."""
        points = np.asarray(points, dtype=float)
        r = np.linalg.norm(points, axis=-1)
        values = self.radial_values(r)
        if any(self.anisotropy):
            x_hat = points / np.where(r > 0, r, 1.0)[..., None]
            values = values * (1.0 + x_hat @ np.asarray(self.anisotropy))
        return values

    def scaled(self, factor: float) -> "Potential":
        update: dict = {}
        if "depth" in self.parameters:
            update["parameters"] = {**self.parameters, "depth": self.parameters["depth"] * factor}
        if self.table_v is not None:
            update["table_v"] = tuple(v * factor for v in self.table_v)
        if self.grid_values is not None:
            update["grid_values"] = tuple(v * factor for v in self.grid_values)
        return self.model_copy(update=update)


class ZeroEnergySolution(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    nodes: np.ndarray
    w: np.ndarray
    c0: float
    Y1: tuple[float, float, float]
    condition: float
    method: Literal["radial-nystrom", "collocation-3d"]
    grid_size: int

    def to_dict(self) -> dict:
        return {"c0": self.c0, "Y1": list(self.Y1), "condition": self.condition, "method": self.method, "grid": self.grid_size}


@lru_cache(maxsize=16)
def _chebyshev_operators(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Chebyshev-Gauss nodes on [-1, 1] with cumulative and total integration matrices acting on samples."""
    x = np.cos(np.pi * (2.0 * np.arange(n) + 1.0) / (2.0 * n))[::-1].copy()
    to_coeffs = np.linalg.inv(cheb.chebvander(x, n - 1))
    antiderivatives = cheb.chebint(np.eye(n), lbnd=-1, axis=0)
    cumulative = cheb.chebval(x, antiderivatives).T @ to_coeffs
    total = cheb.chebval(1.0, antiderivatives) @ to_coeffs
    for arr in (x, cumulative, total):
        arr.flags.writeable = False
    return x, cumulative, total


def _condition_number(lu_piv, matrix: np.ndarray) -> float:
    lu, _ = lu_piv
    (gecon,) = get_lapack_funcs(("gecon",), (lu,))
    rcond, info = gecon(lu, np.linalg.norm(matrix, 1), norm="1")
    if info != 0 or rcond <= 0.0:
        return math.inf
    return 1.0 / rcond


class ScatteringLengthEngine:
    def _factor(self, matrix: np.ndarray, grid_size: int):
        with np.errstate(all="ignore"):
            lu_piv = lu_factor(matrix, check_finite=False)
        condition = _condition_number(lu_piv, matrix)
        if condition > settings.RESONANCE_CONDITION:
            logger.error("resonance_detected", condition=condition, grid_size=grid_size)
            raise ResonanceError(condition, grid_size)
        return lu_piv, condition

    def _solve_radial(self, pot: Potential, n: int) -> ZeroEnergySolution:
        if n < MIN_RADIAL_GRID:
            raise ValueError(f"Radial grid needs at least {MIN_RADIAL_GRID} nodes, got {n}")
        R = pot.support_radius
        x, cumulative, total = _chebyshev_operators(n)
        r = 0.5 * R * (x + 1.0)
        A, wt = 0.5 * R * cumulative, 0.5 * R * total
        W = pot.coupling * pot.radial_values(r)

        # w(r) + (1/r) int_0^r r'^2 W w + int_r^R r' W w = 1
        matrix = np.eye(n) + (A * (r * r * W)[None, :]) / r[:, None] + (wt[None, :] - A) * (r * W)[None, :]
        lu_piv, condition = self._factor(matrix, n)
        w = lu_solve(lu_piv, np.ones(n))
        c0 = float(wt @ (r * r * W * w)) + 0.0  # no negative zero for V = 0
        return ZeroEnergySolution(
            nodes=r, w=w, c0=c0, Y1=(0.0, 0.0, 0.0), condition=condition, method="radial-nystrom", grid_size=n
        )

    def _collocation_cells(self, pot: Potential, n: int) -> tuple[np.ndarray, np.ndarray, float]:
        R = pot.support_radius
        h = 2.0 * R / n
        axis = -R + h * (np.arange(n) + 0.5)
        points = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 3)
        if pot.kind == "anisotropic-grid":
            values = np.asarray(pot.grid_values, dtype=float).reshape(pot.grid_size, pot.grid_size, pot.grid_size)
            factor = pot.grid_size // n
            if factor > 1:
                values = values.reshape(n, factor, n, factor, n, factor).mean(axis=(1, 3, 5))
            values = values.reshape(-1)
        else:
            values = pot.values_at(points)
        W = pot.coupling * values
        support = W != 0.0
        return points[support], W[support], h

    def _solve_collocation(self, pot: Potential, n: int) -> ZeroEnergySolution:
        if not MIN_COLLOCATION_GRID <= n <= MAX_COLLOCATION_GRID:
            raise ValueError(f"Collocation grid must lie in [{MIN_COLLOCATION_GRID}, {MAX_COLLOCATION_GRID}], got {n}")
        points, W, h = self._collocation_cells(pot, n)
        cells = len(W)
        if cells > settings.MAX_COLLOCATION_CELLS:
            raise ValueError(f"{cells} support cells exceed MAX_COLLOCATION_CELLS={settings.MAX_COLLOCATION_CELLS}")
        if cells == 0:
            return ZeroEnergySolution(
                nodes=points, w=W, c0=0.0, Y1=(0.0, 0.0, 0.0), condition=1.0, method="collocation-3d", grid_size=n
            )

        volume = h**3
        with np.errstate(divide="ignore"):
            kernel = volume / (4.0 * math.pi * cdist(points, points))
        np.fill_diagonal(kernel, h * h * UNIT_CUBE_COULOMB / (4.0 * math.pi))
        matrix = np.eye(cells) + kernel * W[None, :]
        lu_piv, condition = self._factor(matrix, n)
        w = lu_solve(lu_piv, np.ones(cells))

        weighted = W * w * volume
        c0 = float(np.sum(weighted)) / (4.0 * math.pi)
        dipole = weighted @ points / (4.0 * math.pi**1.5)
        y1 = tuple(float(c) for c in dipole * math.sqrt(4.0 * math.pi / 3.0))
        return ZeroEnergySolution(
            nodes=points, w=w, c0=c0, Y1=y1, condition=condition, method="collocation-3d", grid_size=n
        )

    def _default_grid(self, pot: Potential) -> int:
        if pot.is_radial:
            return settings.SCATLEN_GRID
        if pot.kind == "anisotropic-grid":
            return pot.grid_size
        return settings.COLLOCATION_GRID

    def solve_zero_energy(self, pot: Potential, grid_size: int | None = None) -> ZeroEnergySolution:
        n = grid_size or self._default_grid(pot)
        if pot.is_radial:
            return self._solve_radial(pot, n)
        if pot.kind == "anisotropic-grid" and pot.grid_size % n != 0:
            raise ValueError(f"Grid size {n} must divide the tabulated grid size {pot.grid_size}")
        return self._solve_collocation(pot, n)

    def solution_pair(
        self, pot: Potential, grid_size: int | None = None
    ) -> tuple[ZeroEnergySolution, ZeroEnergySolution]:
        """Coarse and fine solves: n and 2n radially, n/2 and n on the 3D box."""
        n = grid_size or self._default_grid(pot)
        if pot.is_radial:
            return self._solve_radial(pot, n), self._solve_radial(pot, 2 * n)
        return self.solve_zero_energy(pot, n // 2), self.solve_zero_energy(pot, n)

    def c0_estimate(self, coarse: ZeroEnergySolution, fine: ZeroEnergySolution) -> Estimate:
        abs_err = abs(fine.c0 - coarse.c0)
        converged = abs_err <= settings.SCATLEN_REL_TOL * abs(fine.c0)
        if not converged:
            logger.warning("grid_too_coarse", c0=fine.c0, abs_err=abs_err, grid_size=fine.grid_size, method=fine.method)
        return Estimate(value=fine.c0, abs_err=abs_err, method="quadrature", converged=converged)

    def scattering_length(self, pot: Potential, grid_size: int | None = None) -> Estimate:
        """c0 from the finer of two resolutions; abs_err is their difference."""
        return self.c0_estimate(*self.solution_pair(pot, grid_size))

    def y1_coefficients(self, pot: Potential, grid_size: int | None = None) -> tuple[float, float, float]:
        if pot.is_radial:
            return (0.0, 0.0, 0.0)
        return self.solve_zero_energy(pot, grid_size).Y1

    def born_terms(self, pot: Potential, spec: QuadratureSpec | None = None) -> tuple[Estimate, Estimate]:
        """B1 = int r^2 W and B2 = int int r^2 r'^2 W W' / max(r, r'), so that c0 = B1 - B2 + O(W^3)."""
        if not pot.is_radial:
            raise ValueError("Born terms are available for radial potentials only")
        spec = spec or QuadratureSpec.from_settings()
        R = pot.support_radius

        def weight(r):
            return pot.coupling * pot.radial_values(r)

        def first(level: int) -> float:
            return quadrature_engine.integrate_interval(lambda r: r * r * weight(r), 0.0, R, spec.radial_nodes << level)

        def second(level: int) -> float:
            n = spec.radial_nodes << level
            r, wr = quadrature_engine.mapped_rule(n, 0.0, R)
            x, wx = quadrature_engine.gauss_rule(n)
            inner_r = 0.5 * r[:, None] * (x[None, :] + 1.0)
            inner = 0.5 * r * ((inner_r**2 * weight(inner_r)) @ wx)
            return 2.0 * float(np.sum(wr * r * weight(r) * inner))

        return (
            quadrature_engine.refine(first, spec, label="born_first"),
            quadrature_engine.refine(second, spec, label="born_second"),
        )

    def shooting_scattering_length(self, pot: Potential, rtol: float = 1e-11) -> float:
        """Integrate u'' = W(r) u outward from the origin; outside the support u is linear with root c0."""
        if not pot.is_radial:
            raise ValueError("Shooting applies to radial potentials only")
        R = pot.support_radius
        start = 1e-9 * R

        def rhs(r, y):
            return [y[1], pot.coupling * float(pot.radial_values(r)) * y[0]]

        sol = solve_ivp(rhs, (start, R), [start, 1.0], method="DOP853", rtol=rtol, atol=1e-14 * R)
        if not sol.success:
            raise RuntimeError(f"Shooting integration failed: {sol.message}")
        u, du = sol.y[0, -1], sol.y[1, -1]
        return float(R - u / du)

    def remainder_order(self, beta: float | None) -> str:
        if beta is None or beta > 7:
            return "O(k^3)"
        if beta > 5:
            return "o(k^2)"
        return "unbounded"

    def low_energy_smatrix(self, pot: Potential, lmax: int = 1, grid_size: int | None = None) -> LowEnergySMatrix:
        solution = self.solve_zero_energy(pot, grid_size)
        return smatrix_engine.build(solution.c0, solution.Y1, lmax, remainder_order=self.remainder_order(pot.beta))


scattering_length_engine = ScatteringLengthEngine()
