"""고정(비학습) 인코더: 위치 인코딩(PE), 푸리에 특징 매핑(FFM), 항등 매핑

PE 출력 배치: 좌표 우선, 그 안에서 주파수 오름차순, 각 주파수마다 (sin, cos).
    [sin(2⁰x₀), cos(2⁰x₀), sin(2¹x₀), cos(2¹x₀), …, sin(2⁰x₁), …]
FFM 출력 배치: [sin(2πBp) 블록, cos(2πBp) 블록]
"""
from dataclasses import dataclass, asdict
from functools import lru_cache
from typing import Dict

import numpy as np

from src.encoding.base import Encoder, FixedContext


# ═══════════════════════════════════════════
# Positional Encoding
# ═══════════════════════════════════════════
@dataclass(frozen=True)
class PeConfig:
    n_freq: int = 6


def pe_encode_batch(X: np.ndarray, n_freq: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    B, k = X.shape
    freqs = 2.0 ** np.arange(n_freq)
    arg = X[:, :, None] * freqs
    return np.stack([np.sin(arg), np.cos(arg)], axis=-1).reshape(B, k * n_freq * 2)


def pe_encode(x, cfg: PeConfig = PeConfig()) -> np.ndarray:
    """k차원 점 → 2·k·n_freq 특징"""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    return pe_encode_batch(x[None], cfg.n_freq)[0]


class PositionalEncoder(Encoder):
    kind = "pe"

    def __init__(self, n_freq: int = 6, input_dim: int = 3):
        self.cfg = PeConfig(n_freq=int(n_freq))
        self.input_dim = int(input_dim)

    @property
    def output_dim(self) -> int:
        return 2 * self.input_dim * self.cfg.n_freq

    def prepare(self, x) -> FixedContext:
        return FixedContext(pe_encode_batch(self._check_input(x), self.cfg.n_freq))

    def to_config(self) -> Dict:
        return {"kind": self.kind, "n_freq": self.cfg.n_freq, "input_dim": self.input_dim}


# ═══════════════════════════════════════════
# Fourier Feature Mapping
# ═══════════════════════════════════════════
@dataclass(frozen=True)
class FfmConfig:
    n_features: int = 128
    sigma: float = 1.0
    seed: int = 0
    input_dim: int = 3


@lru_cache(maxsize=32)
def ffm_matrix(cfg: FfmConfig) -> np.ndarray:
    """가우시안 행렬 B (n_features, input_dim), seed 고정, 읽기 전용"""
    rng = np.random.default_rng(cfg.seed)
    B = rng.normal(0.0, cfg.sigma, size=(cfg.n_features, cfg.input_dim))
    B.setflags(write=False)
    return B


def _ffm_features(X: np.ndarray, B: np.ndarray) -> np.ndarray:
    proj = 2.0 * np.pi * (X @ B.T)
    return np.concatenate([np.sin(proj), np.cos(proj)], axis=1)


def ffm_encode(p, cfg: FfmConfig = FfmConfig()) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64).reshape(1, cfg.input_dim)
    return _ffm_features(p, ffm_matrix(cfg))[0]


class FourierFeatureEncoder(Encoder):
    kind = "ffm"

    def __init__(self, n_features: int = 128, sigma: float = 1.0, seed: int = 0, input_dim: int = 3):
        self.cfg = FfmConfig(int(n_features), float(sigma), int(seed), int(input_dim))
        self.input_dim = self.cfg.input_dim
        self.matrix = ffm_matrix(self.cfg)

    @property
    def output_dim(self) -> int:
        return 2 * self.cfg.n_features

    def prepare(self, x) -> FixedContext:
        return FixedContext(_ffm_features(self._check_input(x), self.matrix))

    def buffers(self) -> Dict[str, np.ndarray]:
        return {"matrix": self.matrix}

    def load_tensors(self, tensors: Dict[str, np.ndarray]):
        # 저장된 행렬을 그대로 쓴다 (f32 왕복 값)
        B = np.array(tensors["matrix"], dtype=np.float64).reshape(self.matrix.shape)
        B.setflags(write=False)
        self.matrix = B

    def to_config(self) -> Dict:
        return {"kind": self.kind, **asdict(self.cfg)}


# ═══════════════════════════════════════════
# 항등 매핑 (no mapping)
# ═══════════════════════════════════════════
class IdentityEncoder(Encoder):
    """입력을 그대로 MLP에 넣는다 (위치는 [-1,1] 정규화, 방향은 단위 벡터)"""
    kind = "none"

    def __init__(self, input_dim: int = 3):
        self.input_dim = int(input_dim)

    @property
    def output_dim(self) -> int:
        return self.input_dim

    def prepare(self, x) -> FixedContext:
        return FixedContext(self._check_input(x).copy())

    def to_config(self) -> Dict:
        return {"kind": self.kind, "input_dim": self.input_dim}
