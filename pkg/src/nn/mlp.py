"""완전연결 MLP (numpy 구현)

은닉층 ReLU, 출력층 선형 스칼라. 학습은 float64, 저장은 float32.
가중치 형상은 (out, in). 초기화는 U(±√(6/fan_in)), 편향 0.

forward가 돌려주는 캐시는 파라미터 버전을 기록한다. 옵티마이저 스텝 후
touch()로 버전을 올리면 이전 캐시로 backward 할 수 없다. 캐시는 한 번만
쓸 수 있다.
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.utils.errors import ShapeError, StaleCacheError


@dataclass
class MlpCache:
    version: int
    inputs: List[np.ndarray]  # 각 층의 입력 (B, in_k)
    preacts: List[np.ndarray]  # 은닉층 pre-activation (B, out_k)
    consumed: bool = False


@dataclass
class MlpGradients:
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    input: np.ndarray  # (B, in)

    def as_dict(self) -> Dict[str, np.ndarray]:
        out = {}
        for k, (gw, gb) in enumerate(zip(self.weights, self.biases)):
            out[f"W{k}"] = gw
            out[f"b{k}"] = gb
        return out


class Mlp:
    """layer_sizes = [in, h, ..., h, 1]"""

    activation = "relu"

    def __init__(self, layer_sizes: Sequence[int], seed: int = 0):
        sizes = [int(s) for s in layer_sizes]
        if len(sizes) < 2 or sizes[-1] != 1 or min(sizes) < 1:
            raise ShapeError(f"잘못된 층 구성: {sizes} (마지막은 1)")
        self.layer_sizes = sizes
        self.seed = int(seed)
        rng = np.random.default_rng(seed)
        self.weights: List[np.ndarray] = []
        self.biases: List[np.ndarray] = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = np.sqrt(6.0 / fan_in)
            self.weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
            self.biases.append(np.zeros(fan_out))
        self.version = 0

    @classmethod
    def create(cls, input_dim: int, width: int = 128, depth: int = 4, seed: int = 0) -> "Mlp":
        """입력 차원, 은닉 폭 × 은닉층 수 (예: 128×4)"""
        return cls([input_dim] + [width] * depth + [1], seed=seed)

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def shape_label(self) -> str:
        hidden = self.layer_sizes[1:-1]
        if not hidden:
            return "linear"
        return f"{hidden[0]}x{len(hidden)}"

    def parameter_count(self) -> int:
        return int(sum(w.size + b.size for w, b in zip(self.weights, self.biases)))

    def parameters(self) -> Dict[str, np.ndarray]:
        out = {}
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            out[f"W{k}"] = w
            out[f"b{k}"] = b
        return out

    def decay_names(self) -> List[str]:
        """weight decay 대상 (가중치만, 편향 제외)"""
        return [f"W{k}" for k in range(len(self.weights))]

    def touch(self):
        """파라미터가 바뀌었음을 표시 (이전 캐시 무효화)"""
        self.version += 1

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        X = np.asarray(x, dtype=np.float64)
        if X.ndim == 1:
            X = X[None]
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise ShapeError(f"입력 폭 불일치: {X.shape[-1]} != {self.input_dim}")
        return X

    # ───────────────────────────────────────
    # 순전파 / 역전파
    # ───────────────────────────────────────
    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, MlpCache]:
        """(B, in) → ((B,) 예측, 캐시)"""
        h = self._check_input(x)
        inputs, preacts = [], []
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            inputs.append(h)
            z = h @ w.T + b
            if k < last:
                preacts.append(z)
                h = np.maximum(z, 0.0)
            else:
                h = z
        return h[:, 0], MlpCache(self.version, inputs, preacts)

    def predict(self, x: np.ndarray) -> np.ndarray:
        """캐시 없는 추론"""
        h = self._check_input(x)
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w.T + b
            if k < last:
                np.maximum(h, 0.0, out=h)
        return h[:, 0]

    def predict_one(self, x: np.ndarray) -> float:
        """단일 입력 벡터 추론 (행렬-벡터 곱)"""
        h = np.asarray(x, dtype=np.float64)
        if h.shape != (self.input_dim,):
            raise ShapeError(f"입력 폭 불일치: {h.shape} != ({self.input_dim},)")
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = w @ h + b
            if k < last:
                h = np.maximum(h, 0.0)
        return float(h[0])

    def backward(self, cache: MlpCache, d_out) -> MlpGradients:
        """d loss / d out (B,) → 모든 가중치/편향/입력 기울기"""
        if cache.consumed:
            raise StaleCacheError("이미 사용한 forward 캐시입니다")
        if cache.version != self.version:
            raise StaleCacheError(f"파라미터가 바뀐 뒤의 캐시입니다 (cache v{cache.version}, model v{self.version})")
        B = len(cache.inputs[0])
        g = np.asarray(d_out, dtype=np.float64).reshape(-1)
        if g.size == 1 and B > 1:
            g = np.full(B, g[0])
        if g.shape != (B,):
            raise ShapeError(f"d_out 형상 불일치: {g.shape} != ({B},)")
        cache.consumed = True

        g = g[:, None]
        n = len(self.weights)
        gw: List[Optional[np.ndarray]] = [None] * n
        gb: List[Optional[np.ndarray]] = [None] * n
        for k in range(n - 1, -1, -1):
            gw[k] = g.T @ cache.inputs[k]
            gb[k] = g.sum(axis=0)
            g = g @ self.weights[k]
            if k > 0:
                g = g * (cache.preacts[k - 1] > 0.0)
        return MlpGradients(weights=gw, biases=gb, input=g)

    # ───────────────────────────────────────
    # 직렬화
    # ───────────────────────────────────────
    def to_config(self) -> Dict:
        return {"layer_sizes": list(self.layer_sizes), "activation": self.activation, "seed": self.seed}

    def load_tensors(self, tensors: Dict[str, np.ndarray]):
        for name, arr in self.parameters().items():
            src = np.asarray(tensors[name], dtype=np.float64)
            if src.shape != arr.shape:
                raise ShapeError(f"[Mlp] {name} 형상 불일치: {src.shape} != {arr.shape}")
            arr[...] = src
        self.touch()


def mse_loss(pred, target) -> Tuple[float, np.ndarray]:
    """(loss, d loss / d pred). 배치면 평균 손실과 2(p−t)/B"""
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if p.shape != t.shape:
        raise ShapeError(f"예측/목표 형상 불일치: {p.shape} != {t.shape}")
    diff = p - t
    if diff.ndim == 0:
        return float(diff * diff), 2.0 * diff
    n = diff.size
    return float(np.mean(diff * diff)), 2.0 * diff / n
