"""3D 다중 해상도 해시 격자 (위치 인코더)

입력 위치는 파티션 상자 기준 [-1, 1]³ 로 정규화되어 들어온다.
레벨 l의 해상도 N_l = floor(N_min · b^l), b = exp((ln N_max − ln N_min)/(L−1)).
레벨 테이블 크기는 min(T, (N_l+1)³). 격자 꼭짓점이 테이블에 다 들어가면
직접 인덱싱하고, 아니면 소수 곱 XOR 해시 mod T 로 인덱싱한다.
코너 c (0..7)의 비트 0/1/2 가 각각 x/y/z 방향 +1 이다.
"""
import logging
from typing import Dict, List, Tuple

import numpy as np

from src.encoding.base import Encoder, Footprint, gather_interpolate, scatter_gradient

logger = logging.getLogger("odfsight")

HASH_PRIMES = (1958374283, 2654435761, 805459861)
INIT_SCALE = 1e-4
_CORNERS = np.array([[(c >> k) & 1 for k in range(3)] for c in range(8)], dtype=np.int64)  # (8, 3)


def hash_level_resolutions(levels: int, base_resolution: int, finest_resolution: int) -> List[int]:
    if levels == 1:
        return [int(base_resolution)]
    b = np.exp((np.log(finest_resolution) - np.log(base_resolution)) / (levels - 1))
    return [int(np.floor(base_resolution * b ** l + 1e-9)) for l in range(levels)]


def spatial_hash(corners: np.ndarray, table_size: int, primes=HASH_PRIMES) -> np.ndarray:
    """(..., 3) 정수 격자 좌표 → 테이블 인덱스 (uint64 오버플로는 감기도록 둔다)"""
    c = corners.astype(np.uint64)
    with np.errstate(over="ignore"):
        h = (c[..., 0] * np.uint64(primes[0])) ^ (c[..., 1] * np.uint64(primes[1])) ^ (c[..., 2] * np.uint64(primes[2]))
    return (h % np.uint64(table_size)).astype(np.int64)


class HashGrid3D:
    """해시 격자 구성 + 학습 가능한 특징 테이블"""

    def __init__(self, levels: int = 16, features: int = 2, log2_table_size: int = 16,
                 base_resolution: int = 16, finest_resolution: int = 512, seed: int = 0,
                 init_scale: float = INIT_SCALE):
        self.levels = int(levels)
        self.feature_width = int(features)
        self.log2_table_size = int(log2_table_size)
        self.base_resolution = int(base_resolution)
        self.finest_resolution = int(finest_resolution)
        self.seed = int(seed)
        self.resolutions = hash_level_resolutions(self.levels, self.base_resolution, self.finest_resolution)

        T = 1 << self.log2_table_size
        self.level_sizes = [min(T, (n + 1) ** 3) for n in self.resolutions]
        self.dense = [(n + 1) ** 3 <= T for n in self.resolutions]
        self.offsets = np.concatenate([[0], np.cumsum(self.level_sizes)[:-1]]).astype(np.int64)
        rng = np.random.default_rng(self.seed)
        self.features = rng.uniform(-init_scale, init_scale, size=(int(sum(self.level_sizes)), self.feature_width))

    @property
    def output_dim(self) -> int:
        return self.levels * self.feature_width

    def footprint(self, positions: np.ndarray) -> Footprint:
        """(B, 3) 정규화 위치 → 레벨별 8 코너 (범위 밖은 잘리고 clamped 표시)"""
        P = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
        x01 = (P + 1.0) / 2.0
        clamped = np.any((x01 < 0.0) | (x01 > 1.0), axis=1)
        x01 = np.clip(x01, 0.0, 1.0)

        B, L = len(P), self.levels
        idx = np.empty((B, L, 8), dtype=np.int64)
        wts = np.empty((B, L, 8))
        for l, n in enumerate(self.resolutions):
            scaled = x01 * n
            base = np.minimum(np.floor(scaled).astype(np.int64), n - 1)
            frac = scaled - base  # 상한 경계에서는 1
            corners = base[:, None, :] + _CORNERS[None]  # (B, 8, 3)
            w = np.where(_CORNERS[None] == 1, frac[:, None, :], 1.0 - frac[:, None, :]).prod(axis=2)

            if self.dense[l]:
                side = n + 1
                local = corners[..., 0] + side * (corners[..., 1] + side * corners[..., 2])
            else:
                local = spatial_hash(corners, self.level_sizes[l])
            idx[:, l] = self.offsets[l] + local
            wts[:, l] = w
        return Footprint(idx, wts, clamped=clamped)

    def to_config(self) -> Dict:
        return {
            "levels": self.levels,
            "features": self.feature_width,
            "log2_table_size": self.log2_table_size,
            "base_resolution": self.base_resolution,
            "finest_resolution": self.finest_resolution,
            "seed": self.seed,
            "primes": list(HASH_PRIMES),
            "resolutions": list(self.resolutions),
        }


def hash3d_encode(p, grid: HashGrid3D) -> Tuple[np.ndarray, Footprint]:
    """정규화 위치 → (L·F 특징, footprint). footprint.clamped 로 상자 이탈 확인"""
    fp = grid.footprint(np.asarray(p, dtype=np.float64)[None])
    return gather_interpolate(grid.features, fp)[0], fp


class HashGrid3DEncoder(Encoder):
    kind = "hash3d"

    def __init__(self, **kwargs):
        self.grid = HashGrid3D(**kwargs)

    @property
    def output_dim(self) -> int:
        return self.grid.output_dim

    def prepare(self, x) -> Footprint:
        fp = self.grid.footprint(self._check_input(x))
        if fp.clamped.any():
            logger.debug(f"[HashGrid3D] 정규화 상자 밖 위치 {int(fp.clamped.sum())}개를 잘라냄")
        return fp

    def forward(self, ctx: Footprint) -> np.ndarray:
        return gather_interpolate(self.grid.features, ctx)

    def backward(self, ctx: Footprint, d_features: np.ndarray) -> Dict[str, np.ndarray]:
        return {"features": scatter_gradient(self.grid.features.shape, ctx, d_features)}

    def parameters(self) -> Dict[str, np.ndarray]:
        return {"features": self.grid.features}

    def to_config(self) -> Dict:
        return {"kind": self.kind, **self.grid.to_config()}
