import math
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from typing import Callable, Literal

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.config import settings

logger = structlog.get_logger()

EstimateMethod = Literal["quadrature", "closed-form", "monte-carlo"]


class QuadratureSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    radial_nodes: int = Field(ge=2)
    angular_nodes: int = Field(ge=2)
    radial_cutoff: float = Field(gt=0)
    target_rel_err: float = Field(gt=0)
    max_refinements: int = Field(ge=1)

    @classmethod
    def from_settings(cls, **overrides) -> "QuadratureSpec":
        values = {
            "radial_nodes": settings.QUAD_RADIAL_NODES,
            "angular_nodes": settings.QUAD_ANGULAR_NODES,
            "radial_cutoff": settings.QUAD_RADIAL_CUTOFF,
            "target_rel_err": settings.QUAD_TARGET_REL_ERR,
            "max_refinements": settings.QUAD_MAX_REFINEMENTS,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def doubled(self) -> "QuadratureSpec":
        return self.model_copy(
            update={"radial_nodes": 2 * self.radial_nodes, "angular_nodes": 2 * self.angular_nodes}
        )


class MCSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    samples: int = Field(ge=1)
    seed: int = Field(ge=0, lt=2**64)
    chunk_size: int = Field(ge=1)

    @classmethod
    def from_settings(cls, **overrides) -> "MCSpec":
        values = {
            "samples": settings.MC_SAMPLES,
            "seed": settings.MC_SEED,
            "chunk_size": settings.MC_CHUNK_SIZE,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


class Estimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    abs_err: float = Field(ge=0.0)
    method: EstimateMethod
    converged: bool = True

    @model_validator(mode="after")
    def check_closed_form_exact(self) -> "Estimate":
        if self.method == "closed-form" and self.abs_err != 0.0:
            raise ValueError("closed-form estimates carry abs_err = 0")
        return self

    @classmethod
    def exact(cls, value: float) -> "Estimate":
        return cls(value=float(value), abs_err=0.0, method="closed-form")

    def to_dict(self) -> dict:
        return {"value": self.value, "abs_err": self.abs_err, "method": self.method, "converged": self.converged}


class NonFiniteSampleError(ValueError):
    def __init__(self, sample_index: int, value: float):
        self.sample_index = sample_index
        self.value = value
        super().__init__(f"Non-finite integrand value {value!r} at Monte-Carlo sample {sample_index}")


@lru_cache(maxsize=64)
def _legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(n)
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


class QuadratureEngine:
    """Gauss-Legendre rules and nested radial/angular integration with two-level error estimates."""

    def gauss_rule(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        if n < 2:
            raise ValueError(f"Gauss rule needs at least 2 nodes, got {n}")
        if n > settings.MAX_GAUSS_NODES:
            raise ValueError(f"Gauss rule with {n} nodes exceeds the stable limit {settings.MAX_GAUSS_NODES}")
        return _legendre(n)

    def mapped_rule(self, n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
        nodes, weights = self.gauss_rule(n)
        half = 0.5 * (b - a)
        return a + half * (nodes + 1.0), half * weights

    def panel_rule(self, breakpoints, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Composite rule with n nodes on every panel between consecutive breakpoints."""
        parts = [self.mapped_rule(n, a, b) for a, b in zip(breakpoints[:-1], breakpoints[1:]) if b > a]
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])

    def integrate_interval(self, f: Callable, a: float, b: float, n: int) -> float:
        x, w = self.mapped_rule(n, a, b)
        return float(np.sum(w * f(x)))

    def refine(self, evaluate: Callable[[int], float], spec: QuadratureSpec, label: str = "integral") -> Estimate:
        """Evaluate at levels 0, 1, ... (node counts doubling) until two successive levels agree."""
        previous = float(evaluate(0))
        current, abs_err = previous, 0.0
        for level in range(1, spec.max_refinements + 1):
            current = float(evaluate(level))
            abs_err = abs(current - previous)
            if abs_err <= spec.target_rel_err * abs(current):
                return Estimate(value=current, abs_err=abs_err, method="quadrature")
            previous = current
        logger.warning(
            "quadrature_not_converged",
            label=label,
            value=current,
            abs_err=abs_err,
            target_rel_err=spec.target_rel_err,
            max_refinements=spec.max_refinements,
        )
        return Estimate(value=current, abs_err=abs_err, method="quadrature", converged=False)

    def integrate_radial(self, f: Callable, spec: QuadratureSpec, label: str = "radial") -> Estimate:
        """Integral of f over [0, inf) truncated at spec.radial_cutoff; f must accept numpy arrays."""
        return self.refine(
            lambda level: self.integrate_interval(f, 0.0, spec.radial_cutoff, spec.radial_nodes << level),
            spec,
            label,
        )

    def integrate_radial_angular(self, f: Callable, spec: QuadratureSpec, label: str = "radial_angular") -> Estimate:
        """Integral of f(r, u) over r in [0, cutoff], u in [-1, 1]; f is called once on a broadcast grid."""

        def evaluate(level: int) -> float:
            r, wr = self.mapped_rule(spec.radial_nodes << level, 0.0, spec.radial_cutoff)
            u, wu = self.gauss_rule(spec.angular_nodes << level)
            values = np.broadcast_to(f(r[:, None], u[None, :]), (r.size, u.size))
            return float(wr @ values @ wu)

        return self.refine(evaluate, spec, label)


def _merge_moments(a: tuple[int, float, float], b: tuple[int, float, float]) -> tuple[int, float, float]:
    n_a, mean_a, m2_a = a
    n_b, mean_b, m2_b = b
    n = n_a + n_b
    delta = mean_b - mean_a
    return n, mean_a + delta * n_b / n, m2_a + m2_b + delta * delta * n_a * n_b / n


class MonteCarloEngine:
    """Gaussian-measure Monte-Carlo with per-chunk counter-based streams."""

    def chunk_generator(self, spec: MCSpec, index: int) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(spec.seed, spawn_key=(index,))))

    def _run_chunk(self, f: Callable, dims: int, spec: MCSpec, index: int) -> tuple[int, float, float]:
        start = index * spec.chunk_size
        count = min(spec.chunk_size, spec.samples - start)
        z = self.chunk_generator(spec, index).standard_normal((count, dims))
        values = np.asarray(f(z), dtype=float).reshape(count)
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            raise NonFiniteSampleError(start + int(bad[0]), float(values[bad[0]]))
        mean = float(np.mean(values))
        return count, mean, float(np.sum((values - mean) ** 2))

    def mc_gaussian(self, f: Callable, dims: int, spec: MCSpec, workers: int | None = None) -> Estimate:
        """E[f(Z)] for Z ~ N(0, I_dims); f maps an (n, dims) sample block to n values."""
        if dims < 1:
            raise ValueError(f"dims must be >= 1, got {dims}")
        workers = workers or settings.WORKERS
        n_chunks = math.ceil(spec.samples / spec.chunk_size)

        if workers == 1 or n_chunks == 1:
            stats = [self._run_chunk(f, dims, spec, i) for i in range(n_chunks)]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                stats = list(pool.map(lambda i: self._run_chunk(f, dims, spec, i), range(n_chunks)))

        total = stats[0]
        for chunk in stats[1:]:
            total = _merge_moments(total, chunk)
        n, mean, m2 = total
        stderr = math.sqrt(m2 / (n - 1) / n) if n > 1 else 0.0
        logger.debug("mc_finished", samples=n, chunks=n_chunks, workers=workers, value=mean, stderr=stderr)
        return Estimate(value=mean, abs_err=stderr, method="monte-carlo")


quadrature_engine = QuadratureEngine()
mc_engine = MonteCarloEngine()
