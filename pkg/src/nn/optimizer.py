"""Adam + decoupled weight decay

    p ← p · (1 − lr·λ)               (decay_mask에 있는 텐서만)
    m ← β₁m + (1−β₁)g,  v ← β₂v + (1−β₂)g²
    p ← p − lr · m̂ / (√v̂ + ε)
decay_mask에는 MLP 가중치만 넣는다 (편향, 격자/해시 특징 테이블 제외).
"""
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Set

import numpy as np

from src.utils.errors import ShapeError

DEFAULT_LR = 1e-3
DEFAULT_BETAS = (0.9, 0.999)
DEFAULT_EPS = 1e-8
DEFAULT_WEIGHT_DECAY = 1e-5


@dataclass
class AdamState:
    lr: float = DEFAULT_LR
    beta1: float = DEFAULT_BETAS[0]
    beta2: float = DEFAULT_BETAS[1]
    eps: float = DEFAULT_EPS
    weight_decay: float = DEFAULT_WEIGHT_DECAY
    decay_mask: Set[str] = field(default_factory=set)
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_parameters(cls, params: Dict[str, np.ndarray], decay_names: Optional[Iterable[str]] = None,
                       **hyper) -> "AdamState":
        state = cls(decay_mask=set(decay_names or ()), **hyper)
        for name, p in params.items():
            state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        return state

    def hyperparameters(self) -> Dict:
        return {"lr": self.lr, "beta1": self.beta1, "beta2": self.beta2,
                "eps": self.eps, "weight_decay": self.weight_decay}


def adam_step(params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray], state: AdamState):
    """params를 제자리 갱신하고 (params, state) 반환

    grads에 없는 텐서는 건드리지 않는다.
    """
    for name, g in grads.items():
        if name not in params:
            raise ShapeError(f"알 수 없는 파라미터: {name}")
        if g.shape != params[name].shape:
            raise ShapeError(f"{name} 기울기 형상 불일치: {g.shape} != {params[name].shape}")

    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t

    for name, g in grads.items():
        p = params[name]
        if name not in state.m:
            state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        m, v = state.m[name], state.v[name]

        if name in state.decay_mask and state.weight_decay:
            p *= 1.0 - state.lr * state.weight_decay

        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)

    return params, state
