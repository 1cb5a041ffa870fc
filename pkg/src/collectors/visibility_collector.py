"""가시성 테스트셋 수집기

source마다 장면 경계 상자에서 target을 균등 샘플링하고 오라클로 라벨을
붙인다. 같은 광선 위 점끼리 평가가 새는 것을 막기 위해 target은 격자
방향이 아니라 장면 전체에서 무작위로 뽑는다.
"""
import logging
import time
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .base_collector import BaseCollector
from src.geometry.bvh import DEFAULT_MAX_DISTANCE, Scene
from src.storage.formats import VisibilityTestSet
from src.utils.errors import InputError

logger = logging.getLogger("odfsight")

MIN_PAIR_DISTANCE = 0.01  # m
Z_EXTENSION = 2.0  # 평평한 장면에서도 3D target이 나오도록 최저점 위로 확장하는 높이 (m)
MAX_ROUNDS = 64


@dataclass
class TestSetReport:
    """테스트셋 요약 (클래스 균형)"""
    __test__ = False  # pytest 수집 대상 아님
    cases: int
    visible: int
    occluded: int
    short_sources: int  # 목표 개수를 못 채운 source 수
    seconds: float = 0.0

    @property
    def visible_fraction(self) -> float:
        return self.visible / self.cases if self.cases else 0.0

    def to_dict(self) -> Dict:
        return {
            "cases": self.cases, "visible": self.visible, "occluded": self.occluded,
            "visible_fraction": round(self.visible_fraction, 6),
            "short_sources": self.short_sources, "seconds": round(self.seconds, 3),
        }


def target_bounds(scene: Scene, sources: np.ndarray, z_extension: float = Z_EXTENSION) -> Tuple[np.ndarray, np.ndarray]:
    """target 샘플링 상자: 장면과 source를 모두 포함하고 z는 최저점 + z_extension 이상"""
    lo, hi = scene.bounds
    if scene.triangle_count:
        lo = np.minimum(lo, sources.min(axis=0))
        hi = np.maximum(hi, sources.max(axis=0))
    else:
        lo, hi = sources.min(axis=0), sources.max(axis=0)
    hi = hi.copy()
    hi[2] = max(hi[2], lo[2] + z_extension)
    return lo, hi


def _sample_targets(rng: np.random.Generator, s: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                    count: int, clamp: float, min_distance: float) -> np.ndarray:
    picked = []
    have = 0
    for _ in range(MAX_ROUNDS):
        cand = rng.uniform(lo, hi, size=(max(count * 2, 16), 3))
        d = np.linalg.norm(cand - s, axis=1)
        cand = cand[(d <= clamp) & (d >= min_distance)]
        picked.append(cand[:count - have])
        have += len(picked[-1])
        if have >= count:
            break
    return np.concatenate(picked) if picked else np.zeros((0, 3))


class VisibilityCollector(BaseCollector):
    """source-target 쌍 샘플링 + 오라클 라벨링 → VisibilityTestSet"""

    def collect(self, scene: Scene, sources, targets_per_source: int = 100, seed: int = 0,
                clamp: float = DEFAULT_MAX_DISTANCE, **kwargs) -> Tuple[VisibilityTestSet, TestSetReport]:
        with self._tracked_run() as run:
            ts, report = self._collect(scene, sources, targets_per_source, seed, clamp,
                                       kwargs.get("min_distance", MIN_PAIR_DISTANCE),
                                       kwargs.get("z_extension", Z_EXTENSION))
            if run is not None:
                run.scene_hash = ts.scene_hash.hex()
                self._finish_run(run, len(ts))
        return ts, report

    def _collect(self, scene: Scene, sources, targets_per_source: int, seed: int, clamp: float,
                 min_distance: float, z_extension: float) -> Tuple[VisibilityTestSet, TestSetReport]:
        S = np.asarray(sources, dtype=np.float64).reshape(-1, 3)
        if len(S) == 0:
            raise InputError("source 위치가 비어 있습니다")
        if targets_per_source < 1:
            raise InputError(f"source당 target 수는 1 이상이어야 합니다: {targets_per_source}")

        started = time.perf_counter()
        # 저장되는 f32 좌표로 라벨을 계산해야 파일만으로 재현된다
        S = S.astype(np.float32).astype(np.float64)
        lo, hi = target_bounds(scene, S, z_extension)
        rng = np.random.default_rng(seed)

        src_rows, tgt_rows = [], []
        short = 0
        for s in S:
            T = _sample_targets(rng, s, lo, hi, targets_per_source, clamp, min_distance)
            T = T.astype(np.float32).astype(np.float64)
            T = T[np.linalg.norm(T - s, axis=1) > 0]
            if len(T) < targets_per_source:
                short += 1
            src_rows.append(np.repeat(s[None], len(T), axis=0))
            tgt_rows.append(T)

        src = np.concatenate(src_rows)
        tgt = np.concatenate(tgt_rows)
        labels = scene.oracle_visibility_batch(src, tgt) if len(src) else np.zeros(0, dtype=bool)
        ts = VisibilityTestSet(scene.scene_hash, src, tgt, labels.astype(np.uint8))

        visible = int(ts.labels.sum())
        report = TestSetReport(len(ts), visible, len(ts) - visible, short, time.perf_counter() - started)
        if short:
            logger.warning(f"[{self.pipeline_name}] target {targets_per_source}개를 채우지 못한 source {short}개")
        logger.info(f"[{self.pipeline_name}] 테스트 {report.cases:,}건: 보임 {report.visible_fraction:.1%} / "
                    f"가림 {1 - report.visible_fraction:.1%}")
        return ts, report


def build_test_set(scene: Scene, sources, targets_per_source: int = 100, seed: int = 0,
                   clamp: float = DEFAULT_MAX_DISTANCE) -> VisibilityTestSet:
    """실행 기록 없이 테스트셋 생성"""
    ts, _ = VisibilityCollector()._collect(scene, sources, targets_per_source, seed, clamp,
                                           MIN_PAIR_DISTANCE, Z_EXTENSION)
    return ts
