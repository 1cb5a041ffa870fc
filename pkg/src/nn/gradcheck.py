"""중앙 차분 기울기 검증"""
from typing import Callable, Optional

import numpy as np

FD_STEP = 1e-5
RELATIVE_FLOOR = 1e-7


def relative_error(analytic, numeric, floor: float = RELATIVE_FLOOR) -> float:
    """max |a − n| / max(|a|, |n|, floor)"""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / denom)) if a.size else 0.0


def numeric_gradient(loss_fn: Callable[[], float], param: np.ndarray, indices: np.ndarray,
                     h: float = FD_STEP) -> np.ndarray:
    """param의 평탄 인덱스들에 대한 중앙 차분 (param은 제자리 변경 후 복원)"""
    flat = param.reshape(-1)
    out = np.empty(len(indices))
    for k, i in enumerate(indices):
        orig = flat[i]
        flat[i] = orig + h
        f_plus = loss_fn()
        flat[i] = orig - h
        f_minus = loss_fn()
        flat[i] = orig
        out[k] = (f_plus - f_minus) / (2.0 * h)
    return out


def finite_difference_check(loss_fn: Callable[[], float], param: np.ndarray, analytic: np.ndarray,
                            h: float = FD_STEP, max_checks: Optional[int] = 32, seed: int = 0,
                            indices: Optional[np.ndarray] = None) -> float:
    """해석적 기울기 vs 중앙 차분, 최대 상대 오차

    max_checks개 원소만 무작위로 고른다 (None이면 전부). 큰 기울기 원소를
    우선 포함하도록 절반은 |analytic| 상위에서 뽑는다.
    """
    size = param.size
    if indices is None:
        if max_checks is None or max_checks >= size:
            indices = np.arange(size)
        else:
            rng = np.random.default_rng(seed)
            top = np.argsort(-np.abs(analytic.reshape(-1)))[: max_checks // 2]
            rest = rng.choice(size, size=max_checks - len(top), replace=False)
            indices = np.unique(np.concatenate([top, rest]))
    numeric = numeric_gradient(loss_fn, param, indices, h)
    return relative_error(analytic.reshape(-1)[indices], numeric)
