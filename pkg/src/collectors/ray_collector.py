"""학습 광선 수집기

source마다 피보나치 격자 2n+1 방향으로 레이캐스트하고, 미교차는 clamp
거리로 기록한다. 고체 내부 source는 허용하되 리포트에 표시한다.
"""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .base_collector import BaseCollector
from src.geometry.bvh import INSIDE_FRACTION, Scene
from src.sampling.fibonacci import fibonacci_directions
from src.storage.formats import RayDataset
from src.utils.errors import InputError
from src.utils.helpers import chunk_ranges, resolve_workers

logger = logging.getLogger("odfsight")

RAYS_PER_TASK = 1 << 18


@dataclass
class CollectionReport:
    """수집 요약"""
    sources: int
    rays: int
    lattice_n: int
    clamp: float
    miss_fraction: float
    mean_distance: float
    inside_solid: List[int] = field(default_factory=list)  # 고체 내부로 보이는 source 인덱스
    seconds: float = 0.0

    def to_dict(self) -> Dict:
        return {
            "sources": self.sources, "rays": self.rays, "lattice_n": self.lattice_n,
            "clamp": self.clamp, "miss_fraction": round(self.miss_fraction, 6),
            "mean_distance": round(self.mean_distance, 6),
            "inside_solid": list(self.inside_solid), "seconds": round(self.seconds, 3),
        }


@dataclass
class AliasingAudit:
    """같은 광선 위 원점 이동 검사 결과: ODF(p + λd, d) = ODF(p, d) − λ"""
    checked: int
    max_error: float
    failures: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.failures == 0


class RayCollector(BaseCollector):
    """격자 방향 레이캐스트 → RayDataset"""

    def collect(self, scene: Scene, sources, lattice_n: int = 2000, clamp: float = 100.0,
                workers: Optional[int] = None, **kwargs) -> Tuple[RayDataset, CollectionReport]:
        with self._tracked_run() as run:
            ds, report = self._collect(scene, sources, lattice_n, clamp, workers)
            if run is not None:
                run.scene_hash = ds.scene_hash.hex()
                self._finish_run(run, ds.ray_count)
        return ds, report

    def _collect(self, scene: Scene, sources, lattice_n: int, clamp: float,
                 workers: Optional[int]) -> Tuple[RayDataset, CollectionReport]:
        S = np.asarray(sources, dtype=np.float64).reshape(-1, 3)
        if len(S) == 0:
            raise InputError("source 위치가 비어 있습니다")
        if lattice_n < 1:
            raise InputError(f"격자 파라미터 n은 1 이상이어야 합니다: {lattice_n}")
        if clamp <= 0:
            raise InputError(f"clamp 거리는 0보다 커야 합니다: {clamp}")

        started = time.perf_counter()
        # 저장되는 f32 위치를 그대로 원점으로 쓴다
        S = S.astype(np.float32).astype(np.float64)
        clamp = float(np.float32(clamp))
        dirs = fibonacci_directions(lattice_n).directions
        P = len(dirs)

        per_task = max(1, RAYS_PER_TASK // P)
        tasks = chunk_ranges(len(S), per_task)
        distances = np.empty((len(S), P))
        back_fraction = np.zeros(len(S))

        def run_task(rows: range):
            origins = np.repeat(S[rows.start:rows.stop], P, axis=0)
            D = np.tile(dirs, (len(rows), 1))
            dist, tri = scene.raycast_batch(origins, D, clamp)
            distances[rows.start:rows.stop] = dist.reshape(len(rows), P)
            hit = tri >= 0
            facing = np.zeros(len(tri), dtype=bool)
            facing[hit] = np.einsum("ij,ij->i", scene.normals[tri[hit]], D[hit]) > 0
            hits = hit.reshape(len(rows), P).sum(axis=1)
            backs = facing.reshape(len(rows), P).sum(axis=1)
            back_fraction[rows.start:rows.stop] = np.where(hits > 0, backs / np.maximum(hits, 1), 0.0)

        workers = min(resolve_workers(workers), len(tasks))
        if workers <= 1:
            for rows in tasks:
                run_task(rows)
        else:
            with ThreadPoolExecutor(max_workers=workers) as executor:
                list(executor.map(run_task, tasks))

        ds = RayDataset(lattice_n, clamp, scene.scene_hash, S, distances)
        d32 = ds.distances
        inside = [int(i) for i in np.flatnonzero(back_fraction >= INSIDE_FRACTION)]
        report = CollectionReport(
            sources=ds.source_count, rays=ds.ray_count, lattice_n=lattice_n, clamp=clamp,
            miss_fraction=float(np.mean(d32 >= np.float32(clamp))),
            mean_distance=float(d32.mean()),
            inside_solid=inside,
            seconds=time.perf_counter() - started,
        )
        if inside:
            logger.warning(f"[{self.pipeline_name}] 고체 내부로 보이는 source {len(inside)}개: {inside[:10]}")
        logger.info(f"[{self.pipeline_name}] source {ds.source_count}개 × 방향 {P}개 = 광선 {ds.ray_count:,}개 "
                    f"(미교차 {report.miss_fraction:.1%}, {report.seconds:.1f}s)")
        return ds, report


def collect_rays(scene: Scene, sources, lattice_n: int = 2000, clamp: float = 100.0,
                 workers: Optional[int] = None) -> RayDataset:
    """실행 기록 없이 광선 수집"""
    ds, _ = RayCollector()._collect(scene, sources, lattice_n, clamp, workers)
    return ds


def audit_ray_aliasing(scene: Scene, dataset: RayDataset, samples: int = 1000,
                       fractions=(0.25, 0.5, 0.75), seed: int = 0,
                       tolerance: float = 1e-4) -> AliasingAudit:
    """거리 D < clamp 인 광선을 골라 p + λd 에서 다시 쏜 거리가 D − λ 인지 확인"""
    D = dataset.distances.astype(np.float64)
    hit_rows, hit_cols = np.nonzero(dataset.distances < np.float32(dataset.clamp))
    if len(hit_rows) == 0:
        return AliasingAudit(0, 0.0, 0, tolerance)
    rng = np.random.default_rng(seed)
    pick = rng.choice(len(hit_rows), size=min(samples, len(hit_rows)), replace=False)
    rows, cols = hit_rows[pick], hit_cols[pick]

    dirs = dataset.lattice().directions[cols]
    base = dataset.positions.astype(np.float64)[rows]
    dist = D[rows, cols]
    lam = np.concatenate([f * dist for f in fractions])
    origins = np.tile(base, (len(fractions), 1)) + lam[:, None] * np.tile(dirs, (len(fractions), 1))
    expected = np.tile(dist, len(fractions)) - lam
    got, _ = scene.raycast_batch(origins, np.tile(dirs, (len(fractions), 1)), dataset.clamp)
    err = np.abs(got - expected)
    audit = AliasingAudit(len(err), float(err.max()), int((err > tolerance).sum()), tolerance)
    logger.info(f"[audit_ray_aliasing] {audit.checked}건 검사, 최대 오차 {audit.max_error:.2e} m, 실패 {audit.failures}건")
    return audit
