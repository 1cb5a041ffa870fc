"""파티션별 ODF 학습

목표값은 거리/clamp (∈ (0, 1]), 손실은 MSE. 광선 r = (source, 격자 방향)의
특징은 source 위치 컨텍스트와 격자 방향 컨텍스트를 미리 한 번 계산해 두고
미니배치마다 행만 고른다. 파티션끼리는 상태를 공유하지 않으므로
프로세스 풀로 병렬 학습한다.
"""
import logging
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field, asdict
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.nn.mlp import mse_loss
from src.nn.optimizer import AdamState, adam_step
from src.odf.model import OdfAtlas, OdfPartitionModel
from src.odf.partition import PartitionScheme
from src.storage.formats import RayDataset
from src.utils.errors import DataIntegrityError, InputError, ShapeError
from src.utils.helpers import resolve_workers

logger = logging.getLogger("odfsight")

EVAL_CHUNK = 65536


@dataclass
class TrainingConfig:
    """학습 하이퍼파라미터와 인코더/MLP 구성"""
    position_encoder: Dict = field(default_factory=lambda: {"kind": "pe", "n_freq": 6})
    direction_encoder: Dict = field(default_factory=lambda: {"kind": "grid2d", "levels": 16, "features": 2})
    width: int = 128
    depth: int = 4
    epochs: int = 30
    batch_size: int = 4096
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 1e-5
    seed: int = 0

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Optional[Dict]) -> "TrainingConfig":
        known = {k: v for k, v in (data or {}).items() if k in cls.__dataclass_fields__}
        return cls(**known)

    def metadata(self) -> Dict:
        """모델 파일에 남기는 학습 메타데이터"""
        return {k: v for k, v in self.to_dict().items() if k not in ("position_encoder", "direction_encoder")}


@dataclass
class TrainingReport:
    partition_id: int
    sources: int
    rays: int
    epochs: int
    loss_history: List[float]
    final_mse: float
    seconds: float

    @property
    def initial_loss(self) -> float:
        return self.loss_history[0] if self.loss_history else float("nan")


def _with_seed(encoder_config: Dict, seed: int) -> Dict:
    cfg = dict(encoder_config)
    if cfg.get("kind") in ("grid2d", "hash3d") and "seed" not in cfg:
        cfg["seed"] = seed
    return cfg


def _default_box(positions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    lo, hi = positions.min(axis=0), positions.max(axis=0)
    pad = np.maximum(0.5 * (hi - lo), 0.5)
    return lo - pad, hi + pad


def ray_mse(model: OdfPartitionModel, rays: RayDataset, indices: Optional[np.ndarray] = None) -> float:
    """정규화 거리(거리/clamp) 기준 MSE. indices는 평탄화된 광선 인덱스 (source × P + 방향)"""
    P = rays.direction_count
    idx_all = np.arange(rays.ray_count) if indices is None else np.asarray(indices, dtype=np.int64)
    if len(idx_all) == 0:
        return float("nan")
    positions = rays.positions.astype(np.float64)
    targets = rays.distances.astype(np.float64).reshape(-1) / rays.clamp
    pos_ctx = model.position_encoder.prepare(model.normalize_positions(positions))
    dir_ctx = model.direction_encoder.prepare(rays.lattice().directions)
    total = 0.0
    for start in range(0, len(idx_all), EVAL_CHUNK):
        idx = idx_all[start:start + EVAL_CHUNK]
        x = np.concatenate([model.position_encoder.forward(pos_ctx.take(idx // P)),
                            model.direction_encoder.forward(dir_ctx.take(idx % P))], axis=1)
        diff = model.mlp.predict(x) - targets[idx]
        total += float(diff @ diff)
    return total / len(idx_all)


def train_partition(rays: RayDataset, config: TrainingConfig = None, partition_id: int = 0,
                    box: Optional[Tuple[np.ndarray, np.ndarray]] = None,
                    axes: int = 3, ray_mask: Optional[np.ndarray] = None) -> Tuple[OdfPartitionModel, TrainingReport]:
    """한 파티션의 광선 기록으로 모델 학습

    Args:
        rays: 이 파티션 source들의 광선 기록
        box: 파티션 상자 (lo, hi). 없으면 source 경계 상자에 여유를 둔다
        axes: 상자 포함 검사 축 수 (grid2d 파티션은 2)
        ray_mask: (sources, P) bool. 주어지면 True인 광선만 학습/최종 MSE에 쓴다
    """
    config = config or TrainingConfig()
    if rays.source_count == 0:
        raise InputError(f"파티션 {partition_id}: 학습할 광선이 없습니다")
    rays.validate()
    started = time.perf_counter()

    positions = rays.positions.astype(np.float64)
    targets = rays.distances.astype(np.float64) / rays.clamp
    lo, hi = box if box is not None else _default_box(positions)

    seed = int(config.seed) + int(partition_id)
    model = OdfPartitionModel.create(
        partition_id,
        _with_seed(config.position_encoder, seed),
        _with_seed(config.direction_encoder, seed),
        config.width, config.depth, rays.clamp, lo, hi, axes=axes, seed=seed,
    )
    inside = model.contains(positions)
    if not inside.all():
        bad = positions[int(np.argmin(inside))]
        raise DataIntegrityError(f"파티션 {partition_id} 밖의 광선 원점: {bad.tolist()}")

    pos_enc, dir_enc = model.position_encoder, model.direction_encoder
    pos_ctx = pos_enc.prepare(model.normalize_positions(positions))
    dir_ctx = dir_enc.prepare(rays.lattice().directions)
    pos_dim = pos_enc.output_dim

    params = model.parameters()
    state = AdamState.for_parameters(params, model.decay_names(), lr=config.lr, beta1=config.beta1,
                                     beta2=config.beta2, eps=config.eps, weight_decay=config.weight_decay)
    rng = np.random.default_rng(seed)
    P = rays.direction_count
    if ray_mask is None:
        train_idx = np.arange(rays.ray_count)
    else:
        mask = np.asarray(ray_mask, dtype=bool)
        if mask.shape != (rays.source_count, P):
            raise ShapeError(f"ray_mask 형상 {mask.shape} != {(rays.source_count, P)}")
        train_idx = np.flatnonzero(mask.reshape(-1))
        if len(train_idx) == 0:
            raise InputError(f"파티션 {partition_id}: 학습할 광선이 없습니다")
    N = len(train_idx)
    flat_targets = targets.reshape(-1)

    def batch_features(idx):
        pc = pos_ctx.take(idx // P)
        dc = dir_ctx.take(idx % P)
        x = np.concatenate([pos_enc.forward(pc), dir_enc.forward(dc)], axis=1)
        return x, pc, dc

    history: List[float] = []
    for epoch in range(config.epochs):
        order = train_idx[rng.permutation(N)]
        total = 0.0
        for start in range(0, N, config.batch_size):
            idx = order[start:start + config.batch_size]
            x, pc, dc = batch_features(idx)
            pred, cache = model.mlp.forward(x)
            loss, d_pred = mse_loss(pred, flat_targets[idx])
            total += loss * len(idx)

            g = model.mlp.backward(cache, d_pred)
            grads = {f"mlp.{k}": v for k, v in g.as_dict().items()}
            if pos_enc.learnable:
                grads.update({f"pos.{k}": v for k, v in pos_enc.backward(pc, g.input[:, :pos_dim]).items()})
            if dir_enc.learnable:
                grads.update({f"dir.{k}": v for k, v in dir_enc.backward(dc, g.input[:, pos_dim:]).items()})
            adam_step(params, grads, state)
            model.mlp.touch()
        history.append(total / N)
        logger.debug(f"[train_partition] p{partition_id} epoch {epoch + 1}/{config.epochs} loss={history[-1]:.6g}")

    final = ray_mse(model, rays, train_idx)

    model.metadata = {**config.metadata(), "partition_id": int(partition_id), "seed": seed,
                      "sources": int(rays.source_count),
                      "rays": int(N), "final_mse": float(final)}
    seconds = time.perf_counter() - started
    report = TrainingReport(int(partition_id), rays.source_count, int(N), config.epochs, history, final, seconds)
    logger.info(f"[train_partition] p{partition_id}: source {rays.source_count}개, 광선 {N:,}개, "
                f"MSE {final:.3e} ({seconds:.1f}s)")
    return model, report


def _train_job(args):
    rays, config, pid, box, axes = args
    return train_partition(rays, config, pid, box, axes)


def train_atlas(dataset: RayDataset, scheme: PartitionScheme, config: TrainingConfig = None,
                workers: Optional[int] = None) -> Tuple[OdfAtlas, List[TrainingReport]]:
    """활성 파티션마다 독립 모델을 학습해 아틀라스 구성"""
    config = config or TrainingConfig()
    ids = scheme.assign(dataset.positions.astype(np.float64))
    axes = 2 if scheme.kind == "grid2d" else 3
    jobs = []
    for pid in scheme.active_cells:
        rows = np.flatnonzero(ids == pid)
        jobs.append((dataset.subset(rows), config, pid, scheme.cell_bounds(pid), axes))

    workers = min(resolve_workers(workers), len(jobs))
    logger.info(f"[train_atlas] 파티션 {len(jobs)}개 학습 시작 (워커 {workers}개)")

    results: Dict[int, Tuple[OdfPartitionModel, TrainingReport]] = {}
    if workers <= 1:
        for job in jobs:
            results[job[2]] = _train_job(job)
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            future_to_pid = {executor.submit(_train_job, job): job[2] for job in jobs}
            for done, future in enumerate(as_completed(future_to_pid), start=1):
                pid = future_to_pid[future]
                results[pid] = future.result()
                logger.info(f"[train_atlas] [{done}/{len(jobs)}] p{pid} MSE {results[pid][1].final_mse:.3e}")

    models = {pid: results[pid][0] for pid in scheme.active_cells}
    reports = [results[pid][1] for pid in scheme.active_cells]
    metadata = {
        "scene_hash": dataset.scene_hash.hex(),
        "lattice_n": dataset.lattice_n,
        "clamp": dataset.clamp,
        "training": config.metadata(),
    }
    return OdfAtlas(scheme, models, metadata), reports
