"""가시성 예측기 (같은 배치 인터페이스) 와 테스트셋 평가"""
import logging
import time
from abc import ABC, abstractmethod

import numpy as np

from src.evaluation.metrics import MetricsReport, classify_metrics
from src.geometry.bvh import Scene
from src.odf.model import OdfAtlas, predict_visibility, predict_visibility_batch
from src.storage.formats import VisibilityTestSet
from src.utils.errors import InputError

logger = logging.getLogger("odfsight")

TIMING_SAMPLES = 200


class VisibilityPredictor(ABC):
    """(s, t) → 보임 여부"""
    name = "predictor"

    @abstractmethod
    def predict_batch(self, sources: np.ndarray, targets: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def predict_one(self, s, t) -> bool:
        pass

    def parameter_count(self) -> int:
        return 0


class OraclePredictor(VisibilityPredictor):
    """BVH 레이캐스트 기준선"""
    name = "raycast"

    def __init__(self, scene: Scene):
        self.scene = scene

    def predict_batch(self, sources, targets) -> np.ndarray:
        return self.scene.oracle_visibility_batch(sources, targets)

    def predict_one(self, s, t) -> bool:
        return self.scene.oracle_visibility(s, t)

    def memory_bytes(self) -> int:
        return self.scene.memory_bytes()


class AtlasPredictor(VisibilityPredictor):
    """신경 ODF 아틀라스 (질의당 모델 하나)"""
    name = "odf"

    def __init__(self, atlas: OdfAtlas, bias: float = 0.0):
        self.atlas = atlas
        self.bias = float(bias)

    def predict_batch(self, sources, targets) -> np.ndarray:
        return predict_visibility_batch(self.atlas, sources, targets, self.bias)

    def predict_one(self, s, t) -> bool:
        return predict_visibility(self.atlas, s, t, self.bias)

    def parameter_count(self) -> int:
        return self.atlas.parameter_count()

    def memory_bytes(self) -> int:
        return self.atlas.memory_bytes()


def evaluate_predictor(predictor: VisibilityPredictor, test_set: VisibilityTestSet, label: str = "",
                       timing_samples: int = TIMING_SAMPLES) -> MetricsReport:
    """테스트셋 분류 지표 + 단일 질의 시간 (배치 없이 한 건씩, 평균 ± 표준편차 µs)"""
    if len(test_set) == 0:
        raise InputError("테스트셋이 비어 있습니다")
    S = test_set.sources.astype(np.float64)
    T = test_set.targets.astype(np.float64)
    predictions = predictor.predict_batch(S, T)
    report = classify_metrics(predictions, test_set.labels.astype(bool),
                              label=label or predictor.name, parameters=predictor.parameter_count())

    k = min(int(timing_samples), len(test_set))
    if k > 0:
        samples = np.empty(k)
        clock = time.perf_counter_ns
        for i in range(k):
            t0 = clock()
            predictor.predict_one(S[i], T[i])
            samples[i] = (clock() - t0) / 1000.0
        report.time_mean_us = float(samples.mean())
        report.time_std_us = float(samples.std())

    logger.info(f"[evaluate_predictor] {report.label}: acc {report.accuracy:.4f}, "
                f"F1 {report.f1 if report.f1 is not None else 'n/a'}, 케이스 {len(test_set):,}건")
    return report
