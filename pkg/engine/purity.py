import math
from typing import Literal

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field
from scipy.stats import norm

from core.config import settings
from engine.coefficients import coefficient_engine
from engine.oracles import J_EQUAL_MASS_CLOSED, J_HEAVY_LIGHT_CLOSED
from engine.quadrature import Estimate, MCSpec, QuadratureSpec, mc_engine, quadrature_engine
from engine.smatrix import LowEnergySMatrix
from engine.special import scaled_i0, scaled_i1

logger = structlog.get_logger()

SQRT3 = math.sqrt(3.0)
LOG_PI = math.log(math.pi)
# q1, q1', q2, q2' blocks plus one coordinate selecting the sampling component
MC_DIMS = 13

PurityMethod = Literal["formula", "expansion-quadrature", "monte-carlo"]


class PurityParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    mu1: float = Field(ge=0.0, le=1.0)
    c0: float
    sigma_over_hbar: float = Field(gt=0)
    p0_over_hbar: tuple[float, float, float] = (0.0, 0.0, 0.0)


class PurityResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    abs_err: float = Field(ge=0.0)
    method: PurityMethod
    params: PurityParams
    leading_order_trusted: bool = True
    remainder_order: str = "O(s^3)"

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "abs_err": self.abs_err,
            "method": self.method,
            "leading_order_trusted": self.leading_order_trusted,
            "remainder_order": self.remainder_order,
        }


class ExpansionTerms(BaseModel):
    """Second-order purity terms in units of (c0 sigma/hbar)^2: 1 - P = (c0 s)^2 (P11 + P12 + P13 + P2)."""

    model_config = ConfigDict(frozen=True)

    mu1: float
    P11: Estimate
    P12: Estimate
    P13: Estimate
    P2: Estimate

    def assembled(self) -> Estimate:
        terms = (self.P11, self.P12, self.P13, self.P2)
        return Estimate(
            value=sum(t.value for t in terms),
            abs_err=sum(t.abs_err for t in terms),
            method="quadrature",
            converged=all(t.converged for t in terms),
        )

    def closed_reference(self) -> dict[str, float | None]:
        """Closed reductions of each term where one exists."""
        L = coefficient_engine.L_closed(self.mu1).value
        N = coefficient_engine.N_closed(self.mu1).value
        j_fwd = j_rev = None
        if self.mu1 == 0.5:
            j_fwd = j_rev = J_EQUAL_MASS_CLOSED
        elif self.mu1 == 1.0:
            j_fwd = J_HEAVY_LIGHT_CLOSED
        elif self.mu1 == 0.0:
            j_rev = J_HEAVY_LIGHT_CLOSED
        return {
            "P11": None if j_fwd is None else -8.0 * j_fwd,
            "P12": None if j_rev is None else -8.0 * j_rev,
            "P13": 8.0 * L * L,
            "P2": 8.0 * N,
        }


class P0Scan(BaseModel):
    model_config = ConfigDict(frozen=True)

    magnitudes: list[float]
    results: list[PurityResult]
    baseline: PurityResult
    exponent: float | None


def fit_exponent(x, y) -> float | None:
    """Least-squares slope of log y against log x over the strictly positive pairs."""
    x, y = np.asarray(x, dtype=float), np.abs(np.asarray(y, dtype=float))
    keep = (x > 0) & (y > 0)
    if keep.sum() < 2:
        return None
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


def _check_inputs(mu1: float, s: float) -> None:
    if not 0.0 <= mu1 <= 1.0:
        raise ValueError(f"mu1 must lie in [0, 1], got {mu1}")
    if not s > 0:
        raise ValueError(f"sigma/hbar must be positive, got {s}")


class PurityEngine:
    def purity_formula(
        self, mu1: float, c0: float, s: float, e_coeff: Estimate, remainder_order: str = "O(s^3)"
    ) -> PurityResult:
        _check_inputs(mu1, s)
        scale = (c0 * s) ** 2
        deficit = scale * e_coeff.value
        trusted = deficit <= settings.LEADING_ORDER_LIMIT
        if not trusted:
            logger.warning("expansion_beyond_leading_order", deficit=deficit, limit=settings.LEADING_ORDER_LIMIT)
        return PurityResult(
            value=1.0 - deficit,
            abs_err=scale * e_coeff.abs_err,
            method="formula",
            params=PurityParams(mu1=mu1, c0=c0, sigma_over_hbar=s),
            leading_order_trusted=trusted,
            remainder_order=remainder_order,
        )

    # --- expansion terms -------------------------------------------------

    def _projected_moment_level(self, mu1: float, power: int, spec: QuadratureSpec, level: int) -> float:
        """16 pi^2 int int Q^2 q^(2+power) <psi>^2, with <psi> the numeric sphere average of the in-state over q_hat."""
        mu2 = 1.0 - mu1
        s, d = mu1 * mu1 + mu2 * mu2, mu1 - mu2
        n = spec.radial_nodes << level
        big, big_w = quadrature_engine.mapped_rule(n, 0.0, spec.radial_cutoff)
        q, q_w = quadrature_engine.mapped_rule(n, 0.0, spec.radial_cutoff)
        u, u_w = quadrature_engine.gauss_rule(spec.angular_nodes << level)
        total = 0.0
        for P, P_w in zip(big, big_w):
            psi = math.pi**-1.5 * np.exp(-0.5 * s * P * P - q[:, None] ** 2 - d * P * q[:, None] * u[None, :])
            average = 0.5 * (psi @ u_w)
            total += P_w * P * P * float(q_w @ (q ** (2 + power) * average * average))
        return 16.0 * math.pi**2 * total

    def expansion_terms(self, mu1: float, spec: QuadratureSpec | None = None) -> ExpansionTerms:
        if not 0.0 <= mu1 <= 1.0:
            raise ValueError(f"mu1 must lie in [0, 1], got {mu1}")
        spec = spec or QuadratureSpec.from_settings()
        mu2 = 1.0 - mu1
        j_fwd = coefficient_engine.J(mu1, mu2, spec)
        j_rev = j_fwd if mu1 == mu2 else coefficient_engine.J(mu2, mu1, spec)
        lp = quadrature_engine.refine(lambda lv: self._projected_moment_level(mu1, 1, spec, lv), spec, "projected_L")
        np_ = quadrature_engine.refine(lambda lv: self._projected_moment_level(mu1, 2, spec, lv), spec, "projected_N")

        def scaled(est: Estimate, factor: float) -> Estimate:
            return Estimate(
                value=factor * est.value, abs_err=abs(factor) * est.abs_err, method="quadrature", converged=est.converged
            )

        # P13 = 2 (int |q| (Sigma1 psi) psi)^2 with Sigma1 psi = -2 <psi>
        p13 = Estimate(
            value=8.0 * lp.value**2, abs_err=16.0 * abs(lp.value) * lp.abs_err, method="quadrature", converged=lp.converged
        )
        # the Y1 part of Sigma2 is odd in q and drops out of P2
        return ExpansionTerms(mu1=mu1, P11=scaled(j_fwd, -8.0), P12=scaled(j_rev, -8.0), P13=p13, P2=scaled(np_, 8.0))

    # --- Monte-Carlo -----------------------------------------------------

    def _pair_amplitude(self, qa, qb, mu1: float, c0: float, y1: np.ndarray, s: float, q0: np.ndarray):
        """Split the out-state amplitude of one momentum pair into its in-state part and the S-matrix correction.

        Up to a common Gaussian envelope the in-state amplitude is exp(log_t0)
        and the out-state amplitude is exp(log_t0) + correction.
        """
        mu2 = 1.0 - mu1
        d = mu1 - mu2
        Q = qa + qb
        q = mu2 * qa - mu1 * qb
        k = np.linalg.norm(q, axis=1)
        nu = q / np.where(k > 0, k, 1.0)[:, None]
        b = k[:, None] * (2.0 * q0 - d * Q)
        b_len = np.linalg.norm(b, axis=1)
        b_hat = b / np.where(b_len > 0, b_len, 1.0)[:, None]

        log_t0 = np.sum(b * nu, axis=1) - b_len
        i0, i1 = scaled_i0(b_len), scaled_i1(b_len)
        ks = s * k
        anisotropy = SQRT3 * ((b_hat @ y1) * i1 - (nu @ y1) * i0)
        correction = -2j * c0 * ks * i0 - ks * ks * (2.0 * c0 * c0 * i0 + anisotropy)
        return log_t0, correction

    def _sample_values(self, z, mu1: float, sm: LowEnergySMatrix, s: float, q0: np.ndarray, alpha: float, tau2: float):
        wide = np.abs(z[:, 12]) < norm.ppf(0.5 + 0.5 * alpha)
        scale = np.where(wide, math.sqrt(tau2), math.sqrt(0.5))
        blocks = scale[:, None, None] * z[:, :12].reshape(-1, 4, 3)
        q1, q1p = q0 + blocks[:, 0], q0 + blocks[:, 1]
        q2, q2p = -q0 + blocks[:, 2], -q0 + blocks[:, 3]

        deviation = np.sum(blocks * blocks, axis=(1, 2))
        log_narrow = -6.0 * LOG_PI - deviation
        if alpha > 0.0:
            log_wide = -6.0 * math.log(2.0 * math.pi * tau2) - deviation / (2.0 * tau2)
            log_g = np.logaddexp(math.log1p(-alpha) + log_narrow, math.log(alpha) + log_wide)
        else:
            log_g = log_narrow
        log_weight = log_narrow - log_g

        y1 = np.asarray(sm.Y1, dtype=float)
        log_ratio = np.zeros(len(z))
        phase = np.ones(len(z), dtype=complex)
        # Tr rho^2 cycle: phi(q1,q2) conj(phi(q1',q2)) phi(q1',q2') conj(phi(q1,q2'))
        for qa, qb, conjugate in ((q1, q2, False), (q1p, q2, True), (q1p, q2p, False), (q1, q2p, True)):
            log_t0, correction = self._pair_amplitude(qa, qb, mu1, sm.c0, y1, s, q0)
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                relative = 1.0 + np.where(correction == 0, 0.0, correction * np.exp(-log_t0))
                direct = np.exp(log_t0) + correction
                usable = np.isfinite(relative)
                log_ratio += np.where(usable, np.log(np.abs(relative)), np.log(np.abs(direct)) - log_t0)
            chosen = np.where(usable, relative, direct)
            magnitude = np.abs(chosen)
            unit = np.where(magnitude > 0, chosen / np.where(magnitude > 0, magnitude, 1.0), 1.0)
            phase *= np.conj(unit) if conjugate else unit
        # 1 + (F - F0)/g with F0/g = exp(log_weight), F/F0 = exp(log_ratio) * phase
        return 1.0 + (np.exp(log_weight + log_ratio) * phase.real - np.exp(log_weight))

    def purity_mc(
        self,
        mu1: float,
        sm: LowEnergySMatrix,
        s: float,
        p0_over_hbar=(0.0, 0.0, 0.0),
        mc: MCSpec | None = None,
        workers: int | None = None,
    ) -> PurityResult:
        """Tr rho_1^2 of S phi_in,p0 by importance sampling over (q1, q1', q2, q2').

        Samples come from a mixture of the squared packet densities and a wider
        Gaussian; the product-state value 1 is subtracted exactly and each
        sample is paired with its mirror image.
        """
        _check_inputs(mu1, s)
        mc = mc or MCSpec.from_settings()
        p0 = np.asarray(p0_over_hbar, dtype=float)
        if p0.shape != (3,):
            raise ValueError(f"p0 must be a 3-vector, got shape {p0.shape}")
        q0 = p0 / s
        trusted = s <= settings.EXPANSION_S_LIMIT
        if not trusted:
            logger.warning("truncated_smatrix_out_of_range", sigma_over_hbar=s, limit=settings.EXPANSION_S_LIMIT)
        alpha, tau2 = settings.MC_WIDE_FRACTION, settings.MC_WIDE_VARIANCE

        def integrand(z):
            forward = self._sample_values(z, mu1, sm, s, q0, alpha, tau2)
            mirrored = self._sample_values(-z, mu1, sm, s, q0, alpha, tau2)
            return 0.5 * (forward + mirrored)

        estimate = mc_engine.mc_gaussian(integrand, MC_DIMS, mc, workers=workers)
        logger.info("purity_mc_finished", mu1=mu1, s=s, value=estimate.value, stderr=estimate.abs_err)
        return PurityResult(
            value=estimate.value,
            abs_err=estimate.abs_err,
            method="monte-carlo",
            params=PurityParams(mu1=mu1, c0=sm.c0, sigma_over_hbar=s, p0_over_hbar=tuple(float(v) for v in p0)),
            leading_order_trusted=trusted,
            remainder_order=sm.remainder_order.replace("k", "s"),
        )

    def p0_scan(
        self, mu1: float, sm: LowEnergySMatrix, s: float, p0_magnitudes, mc: MCSpec | None = None
    ) -> P0Scan:
        magnitudes = [float(m) for m in p0_magnitudes]
        if any(m < 0 for m in magnitudes):
            raise ValueError("p0 magnitudes must be non-negative")
        mc = mc or MCSpec.from_settings()
        results = [self.purity_mc(mu1, sm, s, (0.0, 0.0, m), mc) for m in magnitudes]
        baseline = next((r for m, r in zip(magnitudes, results) if m == 0.0), None)
        if baseline is None:
            baseline = self.purity_mc(mu1, sm, s, (0.0, 0.0, 0.0), mc)
        exponent = fit_exponent(magnitudes, [r.value - baseline.value for r in results])
        logger.info("p0_scan_finished", mu1=mu1, points=len(magnitudes), exponent=exponent)
        return P0Scan(magnitudes=magnitudes, results=results, baseline=baseline, exponent=exponent)

    def second_order_slope(self, mu1: float, sm: LowEnergySMatrix, s_values, mc: MCSpec | None = None) -> float | None:
        """Log-log slope of 1 - P against sigma/hbar at p0 = 0."""
        s_values = [float(v) for v in s_values]
        deficits = [1.0 - self.purity_mc(mu1, sm, v, mc=mc).value for v in s_values]
        return fit_exponent(s_values, deficits)


purity_engine = PurityEngine()
