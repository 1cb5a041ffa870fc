"""메모리 산정

깊이 맵(무압축) 바이트 = 위치 수 × 가로 × 세로 × 4.
모델 바이트 = 4 × (특징 + 가중치 + 편향 + 고정 버퍼 float 개수).
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

logger = logging.getLogger("odfsight")

BYTES_PER_FLOAT = 4
DEFAULT_DEPTH_RESOLUTIONS: List[Tuple[int, int]] = [(256, 128), (512, 256)]


def depth_map_bytes(positions: int, width: int, height: int) -> int:
    """무압축 f32 전방위 깊이 맵 크기"""
    return int(positions) * int(width) * int(height) * BYTES_PER_FLOAT


def format_bytes(n: float) -> str:
    """10진 단위 (13_107_200 → '13.1 MB')"""
    for unit, scale in (("GB", 1e9), ("MB", 1e6), ("KB", 1e3)):
        if n >= scale:
            return f"{n / scale:.1f} {unit}"
    return f"{int(n)} B"


@dataclass
class MemoryReport:
    """파티션당 메모리 구성과 장면 합계"""
    partitions: int
    positions_per_partition: float
    depth_map_bytes: Dict[str, int] = field(default_factory=dict)  # "256x128" → bytes (파티션당)
    direction_feature_bytes: int = 0
    position_feature_bytes: int = 0
    mlp_bytes: int = 0
    raycast_bytes: Optional[int] = None  # 충돌 지오메트리 + BVH

    @property
    def model_bytes(self) -> int:
        """파티션당 모델 크기"""
        return self.direction_feature_bytes + self.position_feature_bytes + self.mlp_bytes

    @property
    def total_model_bytes(self) -> int:
        return self.partitions * self.model_bytes

    def total_depth_map_bytes(self, resolution: str) -> int:
        return self.partitions * self.depth_map_bytes[resolution]

    def to_row(self) -> Dict:
        row = {"partitions": self.partitions, "positions_per_partition": self.positions_per_partition}
        for res, b in self.depth_map_bytes.items():
            row[f"depth_map_{res}_bytes"] = b
        row.update({
            "direction_feature_bytes": self.direction_feature_bytes,
            "position_feature_bytes": self.position_feature_bytes,
            "mlp_bytes": self.mlp_bytes,
            "model_bytes": self.model_bytes,
            "total_model_bytes": self.total_model_bytes,
            "raycast_bytes": self.raycast_bytes,
        })
        return row


def _model_breakdown(model) -> Tuple[int, int, int]:
    sizes = {"pos": 0, "dir": 0, "mlp": 0}
    for name, arr in model.tensors().items():
        sizes[name.split(".", 1)[0]] += int(arr.size)
    return (sizes["dir"] * BYTES_PER_FLOAT, sizes["pos"] * BYTES_PER_FLOAT, sizes["mlp"] * BYTES_PER_FLOAT)


def estimate_memory(atlas=None, resolutions: Sequence[Tuple[int, int]] = DEFAULT_DEPTH_RESOLUTIONS,
                    positions_per_partition: Optional[float] = None, scene=None) -> MemoryReport:
    """깊이 맵 대비 신경 표현 메모리

    Args:
        atlas: OdfAtlas. 없으면 깊이 맵 산술만 채운다
        positions_per_partition: 파티션당 source 수. 없으면 아틀라스 메타데이터의 평균
        scene: 주어지면 레이캐스트 메모리(충돌 지오메트리 + BVH)도 기록
    """
    partitions = len(atlas) if atlas is not None else 1
    if positions_per_partition is None:
        counts = [m.metadata.get("sources") for m in atlas.models.values()] if atlas is not None else []
        counts = [c for c in counts if c]
        positions_per_partition = float(np.mean(counts)) if counts else 0.0

    report = MemoryReport(partitions=partitions, positions_per_partition=positions_per_partition)
    n = int(round(positions_per_partition))
    for w, h in resolutions:
        report.depth_map_bytes[f"{w}x{h}"] = depth_map_bytes(n, w, h)

    if atlas is not None:
        parts = np.array([_model_breakdown(m) for m in atlas.models.values()])
        mean = parts.mean(axis=0).round().astype(int)
        report.direction_feature_bytes, report.position_feature_bytes, report.mlp_bytes = (int(x) for x in mean)
    if scene is not None:
        report.raycast_bytes = scene.memory_bytes()

    logger.debug(f"[estimate_memory] 파티션 {partitions}개, 모델 {format_bytes(report.model_bytes)}/파티션")
    return report
