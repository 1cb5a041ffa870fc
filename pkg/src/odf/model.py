"""파티션별 ODF 모델과 아틀라스, 가시성 판정

ODF(p, d) = p에서 d 방향으로 처음 만나는 표면까지의 거리.
모델 = 위치 인코더 + 방향 인코더 → MLP → 정규화 거리 (× clamp).
가시성: ODF_i(s, û) > ‖s − t‖ 이면 보임 (같으면 안 보임),
i 는 s가 속한 파티션, û = (t − s)/‖t − s‖.
"""
import logging
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.encoding import Encoder, build_encoder, HASH_PRIMES
from src.nn.mlp import Mlp
from src.odf.partition import PartitionScheme, partition_of
from src.sampling.fibonacci import AXIS_CONVENTION
from src.sampling.projection import check_unit
from src.storage.formats import ModelFile, read_model_file, write_model_file
from src.utils.errors import ContractViolation, DataIntegrityError, DegeneratePairError, ShapeError

logger = logging.getLogger("odfsight")

BOX_TOLERANCE = 1e-6


class OdfPartitionModel:
    """한 파티션의 신경 ODF"""

    def __init__(self, partition_id: int, position_encoder: Encoder, direction_encoder: Encoder,
                 mlp: Mlp, clamp: float, box_lo, box_hi, axes: int = 3, metadata: Optional[Dict] = None):
        if position_encoder.output_dim + direction_encoder.output_dim != mlp.input_dim:
            raise ShapeError(
                f"인코더 출력 폭 합({position_encoder.output_dim}+{direction_encoder.output_dim})이 "
                f"MLP 입력 폭({mlp.input_dim})과 다릅니다"
            )
        self.partition_id = int(partition_id)
        self.position_encoder = position_encoder
        self.direction_encoder = direction_encoder
        self.mlp = mlp
        self.clamp = float(clamp)
        self.box_lo = np.asarray(box_lo, dtype=np.float64)
        self.box_hi = np.asarray(box_hi, dtype=np.float64)
        self.axes = int(axes)
        self.metadata = dict(metadata or {})
        extent = self.box_hi - self.box_lo
        self._scale = np.where(extent > 0, 2.0 / np.where(extent > 0, extent, 1.0), 1.0)

    @classmethod
    def create(cls, partition_id: int, position_config: Dict, direction_config: Dict,
               width: int, depth: int, clamp: float, box_lo, box_hi, axes: int = 3,
               seed: int = 0) -> "OdfPartitionModel":
        pos = build_encoder(position_config)
        dirn = build_encoder(direction_config)
        mlp = Mlp.create(pos.output_dim + dirn.output_dim, width=width, depth=depth, seed=seed)
        return cls(partition_id, pos, dirn, mlp, clamp, box_lo, box_hi, axes)

    # ───────────────────────────────────────
    # 입력 처리
    # ───────────────────────────────────────
    def normalize_positions(self, positions: np.ndarray) -> np.ndarray:
        """파티션 상자 → [-1, 1]³"""
        P = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
        return (P - self.box_lo) * self._scale - 1.0

    def contains(self, positions: np.ndarray) -> np.ndarray:
        P = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
        tol = BOX_TOLERANCE * max(1.0, float(np.max(self.box_hi - self.box_lo)))
        a = self.axes
        return np.all((P[:, :a] >= self.box_lo[:a] - tol) & (P[:, :a] <= self.box_hi[:a] + tol), axis=1)

    def _check_inside(self, positions: np.ndarray):
        inside = self.contains(positions)
        if not inside.all():
            bad = np.asarray(positions, dtype=np.float64).reshape(-1, 3)[int(np.argmin(inside))]
            raise ContractViolation(f"파티션 {self.partition_id} 밖의 source 위치: {bad.tolist()}")

    def features(self, positions: np.ndarray, directions: np.ndarray) -> np.ndarray:
        fp = self.position_encoder.forward(self.position_encoder.prepare(self.normalize_positions(positions)))
        fd = self.direction_encoder.forward(self.direction_encoder.prepare(directions))
        return np.concatenate([fp, fd], axis=1)

    # ───────────────────────────────────────
    # 질의
    # ───────────────────────────────────────
    def query_distance(self, s, d) -> float:
        """MLP 추론 한 번 → 거리 (m), [0, clamp]"""
        s = np.asarray(s, dtype=np.float64)
        d = np.asarray(d, dtype=np.float64)
        self._check_inside(s)
        check_unit(d)
        x = self.features(s[None], d[None])[0]
        y = self.mlp.predict_one(x) * self.clamp
        return min(max(y, 0.0), self.clamp)

    def query_distance_batch(self, S: np.ndarray, D: np.ndarray) -> np.ndarray:
        S = np.asarray(S, dtype=np.float64).reshape(-1, 3)
        D = np.asarray(D, dtype=np.float64).reshape(-1, 3)
        if len(S) != len(D):
            raise ShapeError(f"위치/방향 개수 불일치: {len(S)} != {len(D)}")
        self._check_inside(S)
        check_unit(D)
        y = self.mlp.predict(self.features(S, D)) * self.clamp
        return np.clip(y, 0.0, self.clamp)

    # ───────────────────────────────────────
    # 파라미터 / 직렬화
    # ───────────────────────────────────────
    def parameters(self) -> Dict[str, np.ndarray]:
        out = {}
        for prefix, module in (("pos", self.position_encoder), ("dir", self.direction_encoder), ("mlp", self.mlp)):
            for name, arr in module.parameters().items():
                out[f"{prefix}.{name}"] = arr
        return out

    def decay_names(self) -> List[str]:
        return [f"mlp.{n}" for n in self.mlp.decay_names()]

    def tensors(self) -> Dict[str, np.ndarray]:
        """직렬화 대상 전체 (학습 파라미터 + 고정 버퍼), 이름 정렬"""
        out = dict(self.parameters())
        for prefix, enc in (("pos", self.position_encoder), ("dir", self.direction_encoder)):
            for name, arr in enc.buffers().items():
                out[f"{prefix}.{name}"] = arr
        return dict(sorted(out.items()))

    def load_tensors(self, tensors: Dict[str, np.ndarray]):
        for prefix, module in (("pos", self.position_encoder), ("dir", self.direction_encoder), ("mlp", self.mlp)):
            sub = {k[len(prefix) + 1:]: v for k, v in tensors.items() if k.startswith(prefix + ".")}
            module.load_tensors(sub)

    def parameter_count(self) -> int:
        """저장되는 float 개수 (특징 + 가중치 + 편향 + 고정 버퍼)"""
        return int(sum(a.size for a in self.tensors().values()))

    def memory_bytes(self) -> int:
        return 4 * self.parameter_count()

    def to_config(self) -> Dict:
        return {
            "partition_id": self.partition_id,
            "clamp": self.clamp,
            "box_lo": [float(x) for x in self.box_lo],
            "box_hi": [float(x) for x in self.box_hi],
            "axes": self.axes,
            "position_encoder": self.position_encoder.to_config(),
            "direction_encoder": self.direction_encoder.to_config(),
            "mlp": self.mlp.to_config(),
            "training": self.metadata,
        }

    @classmethod
    def from_config(cls, config: Dict, tensors: Optional[Dict[str, np.ndarray]] = None) -> "OdfPartitionModel":
        pos = build_encoder(config["position_encoder"])
        dirn = build_encoder(config["direction_encoder"])
        mlp_cfg = config["mlp"]
        mlp = Mlp(mlp_cfg["layer_sizes"], seed=mlp_cfg.get("seed", 0))
        model = cls(config["partition_id"], pos, dirn, mlp, config["clamp"],
                    config["box_lo"], config["box_hi"], config.get("axes", 3), config.get("training"))
        if tensors is not None:
            model.load_tensors(tensors)
        return model


def query_distance(model: OdfPartitionModel, s, d) -> float:
    return model.query_distance(s, d)


class OdfAtlas:
    """파티션 스킴 + 파티션별 모델. 모델 읽기 횟수를 센다"""

    def __init__(self, scheme: PartitionScheme, models: Dict[int, OdfPartitionModel], metadata: Optional[Dict] = None):
        missing = set(scheme.active_cells) - set(models)
        extra = set(models) - set(scheme.active_cells)
        if missing or extra:
            raise ContractViolation(f"아틀라스 모델과 활성 파티션 불일치 (누락 {sorted(missing)}, 초과 {sorted(extra)})")
        self.scheme = scheme
        self.models = {int(k): models[k] for k in sorted(models)}
        self.metadata = dict(metadata or {})
        self.reads = 0

    def __len__(self) -> int:
        return len(self.models)

    @property
    def clamp(self) -> float:
        return next(iter(self.models.values())).clamp

    def model_for(self, partition_id: int) -> OdfPartitionModel:
        self.reads += 1
        return self.models[partition_id]

    def reset_reads(self):
        self.reads = 0

    def parameter_count(self) -> int:
        return int(sum(m.parameter_count() for m in self.models.values()))

    def memory_bytes(self) -> int:
        return int(sum(m.memory_bytes() for m in self.models.values()))

    def query_distance(self, s, d) -> float:
        return self.model_for(partition_of(self.scheme, s)).query_distance(s, d)


def _direction(s: np.ndarray, t: np.ndarray) -> Tuple[np.ndarray, float]:
    delta = t - s
    dist = float(np.linalg.norm(delta))
    if dist == 0.0:
        raise DegeneratePairError("source와 target이 같은 위치입니다")
    return delta / dist, dist


def predict_visibility(atlas: OdfAtlas, s, t, bias: float = 0.0) -> bool:
    """ODF_i(s, û) − bias > ‖s − t‖ 이면 True. ‖s − t‖ > clamp 이면 False"""
    s = np.asarray(s, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    u, dist = _direction(s, t)
    model = atlas.model_for(partition_of(atlas.scheme, s))
    if dist > model.clamp:
        return False
    return model.query_distance(s, u) - bias > dist


def predict_visibility_batch(atlas: OdfAtlas, S: np.ndarray, T: np.ndarray, bias: float = 0.0) -> np.ndarray:
    """배치 판정: source 파티션별로 묶어 모델당 한 번씩 추론"""
    S = np.asarray(S, dtype=np.float64).reshape(-1, 3)
    T = np.asarray(T, dtype=np.float64).reshape(-1, 3)
    if len(S) != len(T):
        raise ShapeError(f"source/target 개수 불일치: {len(S)} != {len(T)}")
    delta = T - S
    dist = np.linalg.norm(delta, axis=1)
    if np.any(dist == 0.0):
        raise DegeneratePairError("source와 target이 같은 위치입니다")
    U = delta / dist[:, None]

    pids = atlas.scheme.assign(S)
    out = np.zeros(len(S), dtype=bool)
    for pid in np.unique(pids):
        rows = np.flatnonzero(pids == pid)
        model = atlas.models[int(pid)]
        atlas.reads += len(rows)
        pred = model.query_distance_batch(S[rows], U[rows])
        out[rows] = (pred - bias > dist[rows]) & (dist[rows] <= model.clamp)
    return out


# ═══════════════════════════════════════════
# 아틀라스 ↔ ODFM
# ═══════════════════════════════════════════
def atlas_to_model_file(atlas: OdfAtlas) -> ModelFile:
    metadata = {
        "format": {"axis": AXIS_CONVENTION, "dtype": "<f4", "hash_primes": list(HASH_PRIMES)},
        "scheme": atlas.scheme.to_dict(),
        "partitions": [m.to_config() for m in atlas.models.values()],
        "atlas": atlas.metadata,
    }
    tensors = {
        f"p{pid}/{name}": arr
        for pid, model in atlas.models.items()
        for name, arr in model.tensors().items()
    }
    return ModelFile(metadata=metadata, tensors=tensors)


def model_file_to_atlas(mf: ModelFile) -> OdfAtlas:
    meta = mf.metadata
    primes = meta.get("format", {}).get("hash_primes")
    if primes is not None and tuple(primes) != HASH_PRIMES:
        raise DataIntegrityError(f"해시 소수가 다릅니다: {primes}")
    scheme = PartitionScheme.from_dict(meta["scheme"])
    models = {}
    for cfg in meta["partitions"]:
        pid = int(cfg["partition_id"])
        prefix = f"p{pid}/"
        tensors = {k[len(prefix):]: v for k, v in mf.tensors.items() if k.startswith(prefix)}
        models[pid] = OdfPartitionModel.from_config(cfg, tensors)
    return OdfAtlas(scheme, models, meta.get("atlas"))


def save_atlas(atlas: OdfAtlas, path):
    write_model_file(atlas_to_model_file(atlas), path)
    logger.info(f"[save_atlas] 파티션 {len(atlas)}개, 파라미터 {atlas.parameter_count():,}개 → {path}")


def load_atlas(path) -> OdfAtlas:
    return model_file_to_atlas(read_model_file(path))
