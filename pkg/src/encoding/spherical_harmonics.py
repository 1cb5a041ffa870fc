"""실수 구면조화함수 (Condon–Shortley 위상 없음)

인덱스 l² + l + m, m = -l..l.
    Y(l, 0)  = Q(l, 0)
    Y(l, m)  = √2 · Q(l, m) · cos(mφ)     (m > 0)
    Y(l, -m) = √2 · Q(l, m) · sin(mφ)
Q(l, m) = N(l, m) · P(l, m)(z) 는 정규화된 점화식으로 바로 계산한다
(계승 없이 계산하므로 높은 차수에서도 안정적).
"""
from dataclasses import dataclass
from typing import Dict

import numpy as np

from src.encoding.base import Encoder, FixedContext
from src.sampling.projection import check_unit
from src.utils.errors import UnsupportedDegreeError

MAX_DEGREE = 16


@dataclass(frozen=True)
class ShConfig:
    degree: int = 2

    @property
    def coefficient_count(self) -> int:
        return (self.degree + 1) ** 2


def _check_degree(degree: int):
    if degree < 0 or degree > MAX_DEGREE:
        raise UnsupportedDegreeError(f"SH 차수는 0..{MAX_DEGREE} 범위여야 합니다: {degree}")


def sh_basis(directions: np.ndarray, degree: int, check: bool = True) -> np.ndarray:
    """(N, 3) 단위 방향 → (N, (degree+1)²)"""
    _check_degree(degree)
    D = np.asarray(directions, dtype=np.float64).reshape(-1, 3)
    if check:
        check_unit(D)
    x, y, z = D[:, 0], D[:, 1], D[:, 2]
    s = np.hypot(x, y)
    phi = np.arctan2(y, x)
    N = len(D)
    out = np.empty((N, (degree + 1) ** 2))
    sqrt2 = np.sqrt(2.0)

    q_mm = np.full(N, np.sqrt(1.0 / (4.0 * np.pi)))
    for m in range(degree + 1):
        if m > 0:
            q_mm = np.sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * q_mm
        if m == 0:
            cos_m, sin_m = None, None
        else:
            cos_m, sin_m = np.cos(m * phi), np.sin(m * phi)

        q_prev2, q_prev = None, q_mm
        for l in range(m, degree + 1):
            if l == m:
                q = q_mm
            elif l == m + 1:
                q = np.sqrt(2.0 * m + 3.0) * z * q_mm
            else:
                a = np.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
                b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
                q = a * (z * q_prev - b * q_prev2)
            if l > m:
                q_prev2, q_prev = q_prev, q

            if m == 0:
                out[:, l * l + l] = q
            else:
                out[:, l * l + l + m] = sqrt2 * q * cos_m
                out[:, l * l + l - m] = sqrt2 * q * sin_m
    return out


def sh_encode(d, cfg: ShConfig = ShConfig()) -> np.ndarray:
    """단위 방향 → (ℓ_max+1)² 계수"""
    return sh_basis(np.asarray(d, dtype=np.float64)[None], cfg.degree)[0]


class SphericalHarmonicsEncoder(Encoder):
    kind = "sh"

    def __init__(self, degree: int = 2):
        _check_degree(int(degree))
        self.cfg = ShConfig(degree=int(degree))

    @property
    def output_dim(self) -> int:
        return self.cfg.coefficient_count

    def prepare(self, x) -> FixedContext:
        return FixedContext(sh_basis(self._check_input(x), self.cfg.degree))

    def to_config(self) -> Dict:
        return {"kind": self.kind, "degree": self.cfg.degree}
