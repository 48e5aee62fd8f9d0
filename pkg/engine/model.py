import math

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, field_validator

from engine.quadrature import Estimate, QuadratureSpec, quadrature_engine

logger = structlog.get_logger()

Vector3 = tuple[float, float, float]


def _as_vector(v) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.shape[-1:] != (3,):
        raise ValueError(f"Expected a 3-vector, got shape {arr.shape}")
    return arr


def _check_sigma(sigma: float) -> None:
    if not sigma > 0:
        raise ValueError(f"Momentum spread sigma must be positive, got {sigma}")


class MassSplit(BaseModel):
    model_config = ConfigDict(frozen=True)

    m1: float = Field(gt=0)
    m2: float = Field(gt=0)

    @classmethod
    def from_mu1(cls, mu1: float) -> "MassSplit":
        if not 0.0 < mu1 < 1.0:
            raise ValueError(f"Mass fraction mu1 must lie in (0, 1), got {mu1}")
        return cls(m1=mu1, m2=1.0 - mu1)

    @property
    def mu1(self) -> float:
        return self.m1 / (self.m1 + self.m2)

    @property
    def mu2(self) -> float:
        return 1.0 - self.mu1

    @property
    def reduced_mass(self) -> float:
        return self.m1 * self.m2 / (self.m1 + self.m2)

    @property
    def cm_weight(self) -> float:
        """mu1^2 + mu2^2, the centre-of-mass variance factor of the product state."""
        return self.mu1**2 + self.mu2**2

    @property
    def asymmetry(self) -> float:
        return self.mu1 - self.mu2


EQUAL_MASSES = MassSplit(m1=1.0, m2=1.0)


class PhysicalScales(BaseModel):
    model_config = ConfigDict(frozen=True)

    hbar: float = Field(default=1.0, gt=0)
    sigma: float = Field(gt=0)
    p0: Vector3 = (0.0, 0.0, 0.0)

    @property
    def k0(self) -> float:
        return float(np.linalg.norm(self.p0)) / self.hbar

    @property
    def s(self) -> float:
        return self.sigma / self.hbar

    @property
    def p0_over_hbar(self) -> np.ndarray:
        return np.asarray(self.p0, dtype=float) / self.hbar


class GaussianPacket(BaseModel):
    model_config = ConfigDict(frozen=True)

    mean: Vector3
    sigma: float = Field(gt=0)

    @property
    def normalization(self) -> float:
        return (self.sigma**2 * math.pi) ** -0.75

    def amplitude(self, p) -> np.ndarray:
        d = _as_vector(p) - np.asarray(self.mean)
        return self.normalization * np.exp(-np.sum(d * d, axis=-1) / (2.0 * self.sigma**2))


class ProductInState(BaseModel):
    model_config = ConfigDict(frozen=True)

    packet1: GaussianPacket
    packet2: GaussianPacket

    # product states are unentangled
    purity: float = 1.0

    def amplitude(self, p1, p2) -> np.ndarray:
        return self.packet1.amplitude(p1) * self.packet2.amplitude(p2)

    def mean_relative_momentum(self, ms: MassSplit = EQUAL_MASSES) -> np.ndarray:
        return ms.mu2 * np.asarray(self.packet1.mean) - ms.mu1 * np.asarray(self.packet2.mean)


class PacketModel:
    def make_in_state(self, p0, sigma: float) -> ProductInState:
        _check_sigma(sigma)
        p0 = _as_vector(p0)
        return ProductInState(
            packet1=GaussianPacket(mean=tuple(p0), sigma=sigma),
            packet2=GaussianPacket(mean=tuple(-p0), sigma=sigma),
        )

    def relative_momentum(self, p1, p2, ms: MassSplit) -> np.ndarray:
        return ms.mu2 * _as_vector(p1) - ms.mu1 * _as_vector(p2)

    def center_of_mass_momentum(self, p1, p2) -> np.ndarray:
        return _as_vector(p1) + _as_vector(p2)

    def particle_momenta(self, p_cm, p, ms: MassSplit) -> tuple[np.ndarray, np.ndarray]:
        p_cm, p = _as_vector(p_cm), _as_vector(p)
        return ms.mu1 * p_cm + p, ms.mu2 * p_cm - p

    def packet_norm_quad(self, packet: GaussianPacket, spec: QuadratureSpec) -> Estimate:
        """L2 norm of a packet by radial/angular quadrature about its mean, in physical momentum units."""
        scaled = spec.model_copy(update={"radial_cutoff": spec.radial_cutoff * packet.sigma})
        centre = np.asarray(packet.mean)

        def integrand(rho, u):
            points = centre + rho[..., None] * np.array([0.0, 0.0, 1.0])
            return 2.0 * math.pi * rho**2 * packet.amplitude(points) ** 2 + 0.0 * u

        squared = quadrature_engine.integrate_radial_angular(integrand, scaled, label="packet_norm")
        return Estimate(
            value=math.sqrt(squared.value),
            abs_err=squared.abs_err / (2.0 * math.sqrt(squared.value)),
            method="quadrature",
            converged=squared.converged,
        )

    def in_state_distance(self, p0, sigma: float) -> float:
        """||phi_in,p0 - phi_in|| from the product of the two packet overlaps exp(-q0^2/4)."""
        _check_sigma(sigma)
        q0 = float(np.linalg.norm(_as_vector(p0))) / sigma
        return math.sqrt(-2.0 * math.expm1(-0.5 * q0 * q0))

    def in_state_distance_quad(self, p0, sigma: float, spec: QuadratureSpec) -> Estimate:
        _check_sigma(sigma)
        q0 = float(np.linalg.norm(_as_vector(p0))) / sigma

        def overlap(shift: float) -> Estimate:
            return quadrature_engine.integrate_radial_angular(
                lambda r, u: 2.0
                * math.pi
                * r**2
                * math.pi**-1.5
                * np.exp(-0.5 * (r * r - 2.0 * r * shift * u + shift * shift) - 0.5 * r * r),
                spec,
                label="packet_overlap",
            )

        first, second = overlap(q0), overlap(-q0)
        value = math.sqrt(max(2.0 - 2.0 * first.value * second.value, 0.0))
        err = 2.0 * (abs(second.value) * first.abs_err + abs(first.value) * second.abs_err)
        return Estimate(
            value=value,
            abs_err=err / (2.0 * value) if value > 0 else math.sqrt(err),
            method="quadrature",
            converged=first.converged and second.converged,
        )

    def momentum_weighted_distance(
        self, p0, sigma: float, spec: QuadratureSpec, ms: MassSplit = EQUAL_MASSES
    ) -> Estimate:
        """|| |p| (phi_in,p0 - phi_in) || with p the relative momentum.

        The centre-of-mass integral is Gaussian and done in closed form; the
        remaining three-dimensional relative-momentum integral is numeric.
        """
        _check_sigma(sigma)
        q0 = float(np.linalg.norm(_as_vector(p0))) / sigma
        if q0 == 0.0:
            return Estimate(value=0.0, abs_err=0.0, method="quadrature")
        s, d = ms.cm_weight, ms.asymmetry
        pref = math.pi**-3 * (math.pi / s) ** 1.5

        def cm_overlap(shift_sq, va_sq, vb_sq):
            # int dQ exp(-s Q^2 - d Q.(va + vb)) exp(-|va|^2 - |vb|^2)
            return pref * np.exp(d * d * shift_sq / (4.0 * s) - va_sq - vb_sq)

        def integrand(r, u):
            moved_sq = r * r - 2.0 * r * q0 * u + q0 * q0
            rest_sq = r * r
            mixed_sq = 4.0 * r * r - 4.0 * r * q0 * u + q0 * q0
            density = (
                cm_overlap(4.0 * moved_sq, moved_sq, moved_sq)
                + cm_overlap(4.0 * rest_sq, rest_sq, rest_sq)
                - 2.0 * cm_overlap(mixed_sq, moved_sq, rest_sq)
            )
            return 2.0 * math.pi * r**4 * density

        squared = quadrature_engine.integrate_radial_angular(integrand, spec, label="momentum_weighted_distance")
        value = math.sqrt(max(squared.value, 0.0))
        return Estimate(
            value=sigma * value,
            abs_err=sigma * squared.abs_err / (2.0 * value) if value > 0 else 0.0,
            method="quadrature",
            converged=squared.converged,
        )

    def momentum_weighted_distance_closed(self, p0, sigma: float, ms: MassSplit = EQUAL_MASSES) -> Estimate:
        _check_sigma(sigma)
        q0_sq = float(np.sum(_as_vector(p0) ** 2)) / sigma**2
        decay = math.exp(-0.5 * q0_sq)
        spread = -3.0 * ms.cm_weight * math.expm1(-0.5 * q0_sq)
        return Estimate.exact(sigma * math.sqrt(spread + q0_sq * (1.0 - 0.5 * decay)))

    def weighted_bound_constant(self, q0_values, sigma: float, spec: QuadratureSpec, ms: MassSplit = EQUAL_MASSES) -> float:
        """Empirical C in || |p| (phi_in,p0 - phi_in) || <= C |p0| with a 1.5 safety factor."""
        ratios = []
        for q0 in q0_values:
            if q0 <= 0:
                continue
            p0 = (0.0, 0.0, q0 * sigma)
            ratios.append(self.momentum_weighted_distance(p0, sigma, spec, ms).value / (q0 * sigma))
        if not ratios:
            raise ValueError("Bound scan needs at least one positive |p0|")
        return 1.5 * max(ratios)


packet_model = PacketModel()
