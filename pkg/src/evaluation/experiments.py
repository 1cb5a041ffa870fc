"""비교 실험 구성

- 인코더 비교 (9행): 같은 데이터/파티션/MLP로 인코더 조합만 바꿔 학습·평가
- 단일 위치 재구성: 방향 인코더별 보류 방향 MSE
- MLP 크기별 지연 시간, 장면별 고정 시간 표, 장면별 메모리 비교

지연 시간 측정은 가중치 값과 무관하므로 학습하지 않은 같은 구조의
아틀라스를 쓴다.
"""
import itertools
import logging
from dataclasses import replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.evaluation.metrics import MetricsReport
from src.evaluation.predictors import AtlasPredictor, evaluate_predictor
from src.evaluation.timing import TimingReport, bench_latency
from src.geometry.bvh import Scene
from src.odf.model import OdfAtlas, OdfPartitionModel, predict_visibility
from src.odf.partition import PartitionScheme, build_scheme
from src.odf.trainer import TrainingConfig, ray_mse, train_atlas, train_partition
from src.storage.formats import RayDataset, VisibilityTestSet
from src.utils.errors import InputError

logger = logging.getLogger("odfsight")

PE = {"kind": "pe", "n_freq": 6}
HASH = {"kind": "hash3d", "levels": 16, "features": 2, "log2_table_size": 16}
FFM = {"kind": "ffm", "n_features": 128, "sigma": 1.0}
NONE = {"kind": "none"}


def _grid(projection: str) -> Dict:
    return {"kind": "grid2d", "levels": 16, "features": 2, "projection": projection}


def _sh(degree: int) -> Dict:
    return {"kind": "sh", "degree": degree}


# (라벨, 위치 인코더, 방향 인코더)
ENCODER_ROWS: List[Tuple[str, Dict, Dict]] = [
    ("No mapping", NONE, NONE),
    ("Positional encoding", PE, PE),
    ("Hash encoding (SH2)", HASH, _sh(2)),
    ("Hash encoding (SH12)", HASH, _sh(12)),
    ("FFM (SH12)", FFM, _sh(12)),
    ("UV grid (Hash, Long-Lat)", HASH, _grid("long-lat")),
    ("UV grid (Hash, Mercator)", HASH, _grid("mercator")),
    ("UV grid (PE, Long-Lat)", PE, _grid("long-lat")),
    ("UV grid (PE, Mercator)", PE, _grid("mercator")),
]

RECONSTRUCTION_ENCODERS: Dict[str, Dict] = {
    "SH2": _sh(2),
    "SH5": _sh(5),
    "SH12": _sh(12),
    "grid": _grid("long-lat"),
}

MLP_SIZES: List[Tuple[int, int]] = [(128, 4), (128, 2), (64, 2), (32, 2)]


def mlp_label(width: int, depth: int) -> str:
    return f"{width}x{depth}"


# ═══════════════════════════════════════════
# 정확도 실험
# ═══════════════════════════════════════════
def run_encoder_sweep(dataset: RayDataset, test_set: VisibilityTestSet, scheme: PartitionScheme,
                      config: Optional[TrainingConfig] = None,
                      rows: Optional[Sequence[Tuple[str, Dict, Dict]]] = None,
                      workers: Optional[int] = None) -> List[MetricsReport]:
    """인코더 조합별로 아틀라스를 학습하고 같은 테스트셋으로 평가"""
    config = config or TrainingConfig()
    reports = []
    for label, pos_cfg, dir_cfg in (rows or ENCODER_ROWS):
        row_config = replace(config, position_encoder=dict(pos_cfg), direction_encoder=dict(dir_cfg))
        logger.info(f"[run_encoder_sweep] {label} 학습")
        atlas, _ = train_atlas(dataset, scheme, row_config, workers=workers)
        reports.append(evaluate_predictor(AtlasPredictor(atlas), test_set, label=label))
    return reports


def holdout_mask(source_count: int, direction_count: int, fraction: float = 0.1, seed: int = 0) -> np.ndarray:
    """학습용 광선 마스크 (False = 보류). source마다 같은 비율의 방향을 보류"""
    if not 0.0 < fraction < 1.0:
        raise InputError(f"보류 비율은 (0, 1) 범위여야 합니다: {fraction}")
    rng = np.random.default_rng(seed)
    mask = np.ones((source_count, direction_count), dtype=bool)
    k = max(1, int(round(fraction * direction_count)))
    for i in range(source_count):
        mask[i, rng.choice(direction_count, size=k, replace=False)] = False
    return mask


def direction_reconstruction(rays: RayDataset, encoders: Optional[Dict[str, Dict]] = None,
                             config: Optional[TrainingConfig] = None, holdout: float = 0.1,
                             seed: int = 0) -> Dict[str, float]:
    """방향 인코더별 보류 방향 MSE (정규화 거리 기준)

    위치 인코더는 쓰지 않고 방향 인코더만 바꾼다. 보통 source 하나로 돌린다.
    """
    config = config or TrainingConfig()
    mask = holdout_mask(rays.source_count, rays.direction_count, holdout, seed)
    held_out = np.flatnonzero(~mask.reshape(-1))
    results = {}
    for label, dir_cfg in (encoders or RECONSTRUCTION_ENCODERS).items():
        row_config = replace(config, position_encoder=dict(NONE), direction_encoder=dict(dir_cfg))
        model, _ = train_partition(rays, row_config, ray_mask=mask)
        results[label] = ray_mse(model, rays, held_out)
        logger.info(f"[direction_reconstruction] {label}: 보류 MSE {results[label]:.3e}")
    return results


# ═══════════════════════════════════════════
# 지연 시간 / 메모리 실험
# ═══════════════════════════════════════════
def config_from_atlas(atlas: OdfAtlas) -> TrainingConfig:
    """저장된 아틀라스의 인코더/MLP 구조를 TrainingConfig로 복원"""
    model = next(iter(atlas.models.values()))
    hidden = model.mlp.layer_sizes[1:-1]
    config = TrainingConfig.from_dict(model.metadata)
    return replace(
        config,
        position_encoder=model.position_encoder.to_config(),
        direction_encoder=model.direction_encoder.to_config(),
        width=hidden[0] if hidden else config.width,
        depth=len(hidden),
    )


def build_untrained_atlas(scheme: PartitionScheme, config: TrainingConfig, clamp: float = 100.0) -> OdfAtlas:
    """학습하지 않은 같은 구조의 아틀라스 (시간/메모리 측정용)"""
    axes = 2 if scheme.kind == "grid2d" else 3
    models = {}
    for pid in scheme.active_cells:
        lo, hi = scheme.cell_bounds(pid)
        models[pid] = OdfPartitionModel.create(
            pid, config.position_encoder, config.direction_encoder,
            config.width, config.depth, clamp, lo, hi, axes=axes, seed=config.seed + pid,
        )
    return OdfAtlas(scheme, models)


def cycling_workload(query: Callable, sources: np.ndarray, targets: np.ndarray) -> Callable[[], object]:
    """호출할 때마다 다음 (s, t) 쌍으로 단일 질의"""
    pairs = itertools.cycle(list(zip(np.asarray(sources, dtype=np.float64),
                                     np.asarray(targets, dtype=np.float64))))

    def run():
        s, t = next(pairs)
        return query(s, t)

    return run


def odf_workload(atlas: OdfAtlas, sources, targets) -> Callable[[], object]:
    return cycling_workload(lambda s, t: predict_visibility(atlas, s, t), sources, targets)


def raycast_workload(scene: Scene, sources, targets) -> Callable[[], object]:
    return cycling_workload(scene.oracle_visibility, sources, targets)


def run_mlp_sweep(scheme: PartitionScheme, sources: np.ndarray, targets: np.ndarray,
                  config: Optional[TrainingConfig] = None, sizes: Sequence[Tuple[int, int]] = MLP_SIZES,
                  reps: int = 2000, rounds: int = 5, mode: str = "both", clamp: float = 100.0) -> List[TimingReport]:
    """MLP 크기별 단일 질의 지연 시간

    크기별 측정을 rounds번 번갈아 돌려 호스트 상태 변화가 한쪽에 몰리지 않게 한다.
    """
    config = config or TrainingConfig()
    atlases = {
        mlp_label(w, d): build_untrained_atlas(scheme, replace(config, width=w, depth=d), clamp)
        for w, d in sizes
    }
    reports = {label: TimingReport(label=label) for label in atlases}
    per_round = max(1, reps // rounds)
    for _ in range(rounds):
        for label, atlas in atlases.items():
            reports[label].merge(bench_latency(odf_workload(atlas, sources, targets), mode, per_round, label=label))
    for r in reports.values():
        logger.info(f"[run_mlp_sweep] {r.label}: warm {r.warm_median:.2f} µs, cold {r.cold_median:.2f} µs")
    return list(reports.values())


def latency_ratio(values: Sequence[float]) -> float:
    """max / min"""
    values = [float(v) for v in values]
    return max(values) / min(values) if values and min(values) > 0 else float("inf")


def constant_time_table(scenes: Dict[str, Tuple[Scene, np.ndarray, np.ndarray]],
                        config: Optional[TrainingConfig] = None, partition_kind: str = "voxel3d",
                        cell_size: float = 16.0, reps: int = 1000, mode: str = "both",
                        clamp: float = 100.0) -> Tuple[List[Dict], List[TimingReport]]:
    """장면별 레이캐스트 vs ODF 지연 시간 (같은 아틀라스 구성)

    Args:
        scenes: 이름 → (장면, source 배열, target 배열)
    """
    config = config or TrainingConfig()
    rows, timings = [], []
    for name, (scene, S, T) in scenes.items():
        scheme = build_scheme(S, partition_kind, cell_size=cell_size)
        atlas = build_untrained_atlas(scheme, config, clamp)
        odf = bench_latency(odf_workload(atlas, S, T), mode, reps, label=f"odf {mlp_label(config.width, config.depth)}",
                            scene=name)
        ray = bench_latency(raycast_workload(scene, S, T), mode, reps, label="raycast", scene=name)
        timings.extend([ray, odf])
        rows.append({
            "scene": name,
            "triangles": scene.triangle_count,
            "partitions": len(atlas),
            "raycast_cold_us": ray.cold_median,
            "raycast_warm_us": ray.warm_median,
            "odf_cold_us": odf.cold_median,
            "odf_warm_us": odf.warm_median,
            "speedup_cold": ray.cold_median / odf.cold_median if odf.cold_us else float("nan"),
            "speedup_warm": ray.warm_median / odf.warm_median if odf.warm_us else float("nan"),
        })
        logger.info(f"[constant_time_table] {name} (삼각형 {scene.triangle_count:,}): "
                    f"raycast {ray.warm_median:.2f} µs / odf {odf.warm_median:.2f} µs")
    return rows, timings


def model_bytes_for(config: TrainingConfig, width: int, depth: int) -> int:
    """이 구성의 파티션 모델 한 개 바이트 수"""
    model = OdfPartitionModel.create(0, config.position_encoder, config.direction_encoder,
                                     width, depth, 1.0, np.zeros(3), np.ones(3), seed=config.seed)
    return model.memory_bytes()


def memory_comparison(scenes: Dict[str, Tuple[Scene, PartitionScheme]], config: Optional[TrainingConfig] = None,
                      sizes: Sequence[Tuple[int, int]] = MLP_SIZES) -> List[Dict]:
    """장면별 레이캐스트 메모리 vs 파티션 수 × 모델 크기"""
    config = config or TrainingConfig()
    per_model = {mlp_label(w, d): model_bytes_for(config, w, d) for w, d in sizes}
    rows = []
    for name, (scene, scheme) in scenes.items():
        row = {
            "scene": name,
            "triangles": scene.triangle_count,
            "raycast_bytes": scene.memory_bytes(),
            "partitions": len(scheme.active_cells),
        }
        for label, b in per_model.items():
            row[f"odf_{label}_bytes"] = len(scheme.active_cells) * b
        rows.append(row)
    return rows
