"""UV 평면 위의 다중 해상도 2D 특징 격자 (방향 인코더)

레벨 l의 해상도 (w_l × h_l)는 가장 거친 16×8에서 가장 고운 256×128까지
기하급수(기본) 또는 선형으로 증가하며, 레벨이 올라갈수록 엄격히 커진다.
텍셀 중심은 ((i+0.5)/w, (j+0.5)/h). 경도(u)는 감기고 위도(v)는 가장자리
텍셀에서 잘린다. 출력은 레벨 우선(거친 것부터) L·F 차원.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from src.encoding.base import Encoder, Footprint, gather_interpolate, scatter_gradient
from src.sampling.projection import check_projection, dirs_to_uv
from src.utils.errors import ContractViolation

logger = logging.getLogger("odfsight")

PROGRESSIONS = ("geometric", "linear")
INIT_SCALE = 1e-4


def level_resolutions(levels: int = 16, coarsest: Tuple[int, int] = (16, 8),
                      finest: Tuple[int, int] = (256, 128),
                      progression: str = "geometric") -> List[Tuple[int, int]]:
    """레벨별 (경도 텍셀 수, 위도 텍셀 수)"""
    if progression not in PROGRESSIONS:
        raise ContractViolation(f"알 수 없는 레벨 진행 방식: {progression!r}")
    if levels < 1:
        raise ContractViolation("레벨 수는 1 이상이어야 합니다")
    if levels == 1:
        return [tuple(int(x) for x in coarsest)]

    t = np.arange(levels) / (levels - 1)
    res = []
    for axis in range(2):
        a, b = float(coarsest[axis]), float(finest[axis])
        if progression == "geometric":
            vals = a * (b / a) ** t
        else:
            vals = a + (b - a) * t
        ints = np.rint(vals).astype(np.int64)
        for l in range(1, levels):
            if ints[l] <= ints[l - 1]:
                ints[l] = ints[l - 1] + 1
        res.append(ints)
    return [(int(w), int(h)) for w, h in zip(*res)]


def grid_memory_bytes(levels: int = 16, features: int = 2, coarsest=(16, 8), finest=(256, 128),
                      progression: str = "geometric", bytes_per_value: int = 4) -> int:
    """특징 테이블 크기 = Σ(w_l·h_l) · F · 4"""
    texels = sum(w * h for w, h in level_resolutions(levels, coarsest, finest, progression))
    return int(texels * features * bytes_per_value)


@dataclass
class MultiResGrid2D:
    """격자 구성 + 학습 가능한 특징 테이블"""
    resolutions: List[Tuple[int, int]]
    features: np.ndarray  # (Σ w·h, F)
    offsets: np.ndarray  # (L,)
    projection: str = "long-lat"

    @property
    def levels(self) -> int:
        return len(self.resolutions)

    @property
    def feature_width(self) -> int:
        return self.features.shape[1]

    @property
    def output_dim(self) -> int:
        return self.levels * self.feature_width

    @classmethod
    def create(cls, levels: int = 16, features: int = 2, coarsest=(16, 8), finest=(256, 128),
               progression: str = "geometric", projection: str = "long-lat",
               seed: int = 0, init_scale: float = INIT_SCALE) -> "MultiResGrid2D":
        check_projection(projection)
        res = level_resolutions(levels, coarsest, finest, progression)
        sizes = np.array([w * h for w, h in res], dtype=np.int64)
        offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]])
        rng = np.random.default_rng(seed)
        table = rng.uniform(-init_scale, init_scale, size=(int(sizes.sum()), features))
        return cls(resolutions=res, features=table, offsets=offsets, projection=projection)

    def footprint_uv(self, uv: np.ndarray) -> Footprint:
        """(B, 2) uv → 레벨별 4 텍셀 (w00, w10, w01, w11)"""
        UV = np.asarray(uv, dtype=np.float64).reshape(-1, 2)
        B, L = len(UV), self.levels
        idx = np.empty((B, L, 4), dtype=np.int64)
        wts = np.empty((B, L, 4))
        u, v = UV[:, 0], UV[:, 1]

        for l, (W, H) in enumerate(self.resolutions):
            x = u * W - 0.5
            i0 = np.floor(x)
            fx = x - i0
            i0 = i0.astype(np.int64) % W
            i1 = (i0 + 1) % W

            if H == 1:
                j0 = np.zeros(B, dtype=np.int64)
                j1 = j0
                fy = np.zeros(B)
            else:
                y = v * H - 0.5
                j0 = np.clip(np.floor(y), 0, H - 2).astype(np.int64)
                fy = np.clip(y - j0, 0.0, 1.0)
                j1 = j0 + 1

            off = self.offsets[l]
            idx[:, l, 0] = off + j0 * W + i0
            idx[:, l, 1] = off + j0 * W + i1
            idx[:, l, 2] = off + j1 * W + i0
            idx[:, l, 3] = off + j1 * W + i1
            wts[:, l, 0] = (1.0 - fx) * (1.0 - fy)
            wts[:, l, 1] = fx * (1.0 - fy)
            wts[:, l, 2] = (1.0 - fx) * fy
            wts[:, l, 3] = fx * fy
        return Footprint(idx, wts)

    def footprint(self, directions: np.ndarray, check: bool = True) -> Footprint:
        return self.footprint_uv(dirs_to_uv(directions, self.projection, check=check))


def grid2d_encode(d, grid: MultiResGrid2D) -> Tuple[np.ndarray, Footprint]:
    """단위 방향 → (L·F 특징, footprint)"""
    fp = grid.footprint(np.asarray(d, dtype=np.float64)[None])
    return gather_interpolate(grid.features, fp)[0], fp


class Grid2DEncoder(Encoder):
    kind = "grid2d"

    def __init__(self, levels: int = 16, features: int = 2, coarsest=(16, 8), finest=(256, 128),
                 progression: str = "geometric", projection: str = "long-lat", seed: int = 0):
        self.progression = progression
        self.seed = int(seed)
        self.coarsest = tuple(int(x) for x in coarsest)
        self.finest = tuple(int(x) for x in finest)
        self.grid = MultiResGrid2D.create(levels, features, self.coarsest, self.finest,
                                          progression, projection, seed)

    @property
    def output_dim(self) -> int:
        return self.grid.output_dim

    def prepare(self, x) -> Footprint:
        return self.grid.footprint(self._check_input(x))

    def forward(self, ctx: Footprint) -> np.ndarray:
        return gather_interpolate(self.grid.features, ctx)

    def backward(self, ctx: Footprint, d_features: np.ndarray) -> Dict[str, np.ndarray]:
        return {"features": scatter_gradient(self.grid.features.shape, ctx, d_features)}

    def parameters(self) -> Dict[str, np.ndarray]:
        return {"features": self.grid.features}

    def to_config(self) -> Dict:
        return {
            "kind": self.kind,
            "levels": self.grid.levels,
            "features": self.grid.feature_width,
            "coarsest": list(self.coarsest),
            "finest": list(self.finest),
            "progression": self.progression,
            "projection": self.grid.projection,
            "seed": self.seed,
            "resolutions": [list(r) for r in self.grid.resolutions],
        }
