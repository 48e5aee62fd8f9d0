import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field

logger = structlog.get_logger()

# Cartesian label of each Y1 coefficient -> magnetic index of the real l=1 harmonic
Y1_COMPONENT_M = {0: 1, 1: -1, 2: 0}


def harmonic_index(l: int, m: int) -> int:
    if l < 0 or abs(m) > l:
        raise ValueError(f"Invalid harmonic (l={l}, m={m})")
    return l * l + l + m


class LowEnergySMatrix(BaseModel):
    """S(k) = I + i k sigma1 - k^2 sigma2 on the real spherical-harmonic basis up to lmax.

    Y1 holds the coefficients of the l=1 anisotropy against the real harmonics
    proportional to (x, y, z).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    c0: float
    Y1: tuple[float, float, float] = (0.0, 0.0, 0.0)
    lmax: int = Field(default=1, ge=1)
    sigma1: np.ndarray
    sigma2: np.ndarray
    remainder_order: str = "O(k^3)"

    @property
    def size(self) -> int:
        return (self.lmax + 1) ** 2

    @property
    def is_identity(self) -> bool:
        return not np.any(self.sigma1) and not np.any(self.sigma2)


class SMatrixEngine:
    def build(self, c0: float, Y1=(0.0, 0.0, 0.0), lmax: int = 1, remainder_order: str = "O(k^3)") -> LowEnergySMatrix:
        if lmax < 1:
            raise ValueError(f"lmax must be >= 1, got {lmax}")
        y1 = tuple(float(c) for c in Y1)
        if len(y1) != 3:
            raise ValueError(f"Y1 needs 3 coefficients, got {len(y1)}")

        size = (lmax + 1) ** 2
        s00 = harmonic_index(0, 0)
        sigma1 = np.zeros((size, size))
        sigma2 = np.zeros((size, size))
        sigma1[s00, s00] = -2.0 * c0
        sigma2[s00, s00] = 2.0 * c0 * c0
        for component, m in Y1_COMPONENT_M.items():
            idx = harmonic_index(1, m)
            sigma2[s00, idx] = y1[component]
            sigma2[idx, s00] = -y1[component]
        sigma1.flags.writeable = False
        sigma2.flags.writeable = False
        return LowEnergySMatrix(
            c0=float(c0), Y1=y1, lmax=lmax, sigma1=sigma1, sigma2=sigma2, remainder_order=remainder_order
        )

    def matrix(self, sm: LowEnergySMatrix, k: float) -> np.ndarray:
        if k < 0:
            raise ValueError(f"Wavenumber must be non-negative, got {k}")
        return np.eye(sm.size) + 1j * k * sm.sigma1 - k * k * sm.sigma2

    def apply(self, sm: LowEnergySMatrix, k: float, coeffs) -> np.ndarray:
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape != (sm.size,):
            raise ValueError(f"Expected {sm.size} harmonic coefficients, got shape {coeffs.shape}")
        if k < 0:
            raise ValueError(f"Wavenumber must be non-negative, got {k}")
        return coeffs + 1j * k * (sm.sigma1 @ coeffs) - k * k * (sm.sigma2 @ coeffs)

    def unitarity_defect(self, sm: LowEnergySMatrix) -> float:
        return float(np.linalg.norm(sm.sigma2 + sm.sigma2.T - sm.sigma1 @ sm.sigma1))


smatrix_engine = SMatrixEngine()
