"""입력 인코더 공통 인터페이스

인코딩은 두 단계로 나뉜다.
- prepare(x): 파라미터와 무관한 부분 (고정 특징, 또는 보간 footprint)
- forward(ctx): 현재 파라미터로 특징 계산

학습 시 격자 방향/source 위치의 prepare 결과를 한 번만 계산해 두고
미니배치마다 take()로 행을 골라 forward/backward 한다.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from src.utils.errors import ShapeError


@dataclass
class FixedContext:
    """학습 파라미터가 없는 인코더의 prepare 결과"""
    features: np.ndarray  # (B, D)

    def take(self, rows: np.ndarray) -> "FixedContext":
        return FixedContext(self.features[rows])

    def __len__(self):
        return len(self.features)


@dataclass
class Footprint:
    """보간 footprint: 레벨별 코너 행 번호와 가중치

    indices/weights 형상은 (B, L, K). 격자는 K=4, 해시는 K=8.
    행 번호는 평탄화된 특징 테이블의 전역 행이다.
    """
    indices: np.ndarray
    weights: np.ndarray
    clamped: Optional[np.ndarray] = None  # (B,) 정규화 상자 밖이라 잘린 입력

    def take(self, rows: np.ndarray) -> "Footprint":
        return Footprint(self.indices[rows], self.weights[rows],
                         None if self.clamped is None else self.clamped[rows])

    def __len__(self):
        return len(self.indices)


class Encoder(ABC):
    """모든 인코더의 기본 클래스"""

    kind: str = ""
    input_dim: int = 3

    @property
    @abstractmethod
    def output_dim(self) -> int:
        pass

    @property
    def learnable(self) -> bool:
        return bool(self.parameters())

    @abstractmethod
    def prepare(self, x: np.ndarray):
        """입력 → 파라미터 무관 컨텍스트"""
        pass

    def forward(self, ctx) -> np.ndarray:
        return ctx.features

    def backward(self, ctx, d_features: np.ndarray) -> Dict[str, np.ndarray]:
        """d loss / d features → 학습 파라미터 기울기 (없으면 빈 dict)"""
        return {}

    def encode(self, x: np.ndarray) -> Tuple[np.ndarray, object]:
        ctx = self.prepare(x)
        return self.forward(ctx), ctx

    def parameters(self) -> Dict[str, np.ndarray]:
        return {}

    def buffers(self) -> Dict[str, np.ndarray]:
        """직렬화가 필요한 고정 텐서"""
        return {}

    def load_tensors(self, tensors: Dict[str, np.ndarray]):
        for name, arr in {**self.parameters(), **self.buffers()}.items():
            src = np.asarray(tensors[name], dtype=np.float64)
            if src.shape != arr.shape:
                raise ShapeError(f"[{self.kind}] {name} 형상 불일치: {src.shape} != {arr.shape}")
            arr[...] = src

    def parameter_count(self) -> int:
        return int(sum(p.size for p in self.parameters().values()))

    @abstractmethod
    def to_config(self) -> Dict:
        pass

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        X = np.asarray(x, dtype=np.float64)
        X = X.reshape(-1, self.input_dim)
        return X


def gather_interpolate(table: np.ndarray, fp: Footprint) -> np.ndarray:
    """footprint 가중합 → (B, L·F), 레벨 우선(coarse → fine)"""
    B, L, _ = fp.indices.shape
    feats = np.einsum("blk,blkf->blf", fp.weights, table[fp.indices])
    return feats.reshape(B, L * table.shape[1])


def scatter_gradient(table_shape: Tuple[int, int], fp: Footprint, d_features: np.ndarray) -> np.ndarray:
    """gather_interpolate의 역전파: 코너 행마다 가중 기울기 누적"""
    rows, F = table_shape
    B, L, K = fp.indices.shape
    d = np.asarray(d_features, dtype=np.float64).reshape(B, L, F)
    flat_idx = fp.indices.ravel()
    grad = np.empty((rows, F))
    for f in range(F):
        contrib = fp.weights * d[:, :, f][:, :, None]
        grad[:, f] = np.bincount(flat_idx, weights=contrib.ravel(), minlength=rows)
    return grad
