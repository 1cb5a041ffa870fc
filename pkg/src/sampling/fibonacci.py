"""피보나치 격자: 구면 위 균등 방향 샘플링

i = -n..n 에 대해
    lat_i = arcsin(2i / (2n+1))
    lon_i = 2πi / φ   (φ = 황금비)
방향 = (cos lat · cos lon, cos lat · sin lon, sin lat)  (z-up), 경도는 +x → +y.
저장 순서는 i 오름차순이며 데이터셋의 거리 배열 순서와 같다.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.spatial import cKDTree

from src.utils.errors import ContractViolation

logger = logging.getLogger("odfsight")

GOLDEN_RATIO = (1.0 + 5.0 ** 0.5) / 2.0
AXIS_CONVENTION = "z-up"


@dataclass(frozen=True)
class FibonacciLattice:
    """P = 2n+1 개 방향"""
    n: int
    latitudes: np.ndarray  # (P,) rad
    longitudes: np.ndarray  # (P,) rad, 감기지 않은 원래 값
    directions: np.ndarray  # (P, 3)

    @property
    def count(self) -> int:
        return len(self.directions)

    def __len__(self) -> int:
        return self.count


def lat_lon_to_dirs(lat: np.ndarray, lon: np.ndarray) -> np.ndarray:
    cl = np.cos(lat)
    return np.stack([cl * np.cos(lon), cl * np.sin(lon), np.sin(lat)], axis=-1)


@lru_cache(maxsize=16)
def _build(n: int) -> FibonacciLattice:
    i = np.arange(-n, n + 1, dtype=np.float64)
    lat = np.arcsin(2.0 * i / (2 * n + 1))
    lon = 2.0 * np.pi * i / GOLDEN_RATIO
    dirs = lat_lon_to_dirs(lat, lon)
    # 반올림 오차 제거
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    for arr in (lat, lon, dirs):
        arr.setflags(write=False)
    return FibonacciLattice(n=n, latitudes=lat, longitudes=lon, directions=dirs)


def fibonacci_directions(n: int) -> FibonacciLattice:
    """격자 파라미터 n → 2n+1 개 단위 방향 (결과는 읽기 전용, 캐시됨)"""
    if n < 0:
        raise ContractViolation(f"격자 파라미터 n은 0 이상이어야 합니다: {n}")
    return _build(int(n))


def lattice_uniformity(lattice: FibonacciLattice) -> float:
    """최근접 이웃 측지 거리의 변동계수 (std / mean)

    단위 구 위 현 길이 c → 측지 거리 2·arcsin(c/2).
    """
    if lattice.count < 2:
        return 0.0
    tree = cKDTree(lattice.directions)
    chord, _ = tree.query(lattice.directions, k=2)
    geo = 2.0 * np.arcsin(np.clip(chord[:, 1] / 2.0, 0.0, 1.0))
    return float(geo.std() / geo.mean())
