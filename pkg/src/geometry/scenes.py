"""절차적 장면 생성기

세 가지 장면 유형:
- box-town: 지면 위 축 정렬 박스들 (조밀한 실외)
- sparse-field: 넓은 지면에 흩어진 작은 박스들 (개활지)
- multi-level: 창문/문 구멍이 있는 여러 층 건물 (실내)

(descriptor, seed)가 같으면 항상 같은 메쉬를 만든다.
"""
import logging
from dataclasses import dataclass, asdict
from typing import Dict, List, Optional

import numpy as np

from src.geometry.mesh import TriangleMesh, make_box, make_quad, merge_meshes
from src.geometry.bvh import Scene
from src.sampling.fibonacci import fibonacci_directions
from src.utils.errors import DescriptorError

logger = logging.getLogger("odfsight")

SCENE_KINDS = ("box-town", "sparse-field", "multi-level")


@dataclass
class SceneDescriptor:
    """절차적 장면 디스크립터"""
    kind: str = "box-town"
    seed: int = 7
    extent: float = 64.0  # 지면 한 변 (m)
    # box-town
    boxes: int = 20
    box_footprint: tuple = (2.0, 8.0)
    box_height: tuple = (2.0, 10.0)
    # sparse-field
    density: float = 2.0  # 100 m² 당 박스 수
    small_box_size: tuple = (0.5, 2.0)
    # multi-level
    floors: int = 3
    floor_height: float = 4.0
    rooms: int = 2  # 층당 내부 칸막이 수

    def validate(self):
        if self.kind not in SCENE_KINDS:
            raise DescriptorError(f"알 수 없는 장면 유형: {self.kind!r} (사용 가능: {', '.join(SCENE_KINDS)})")
        if self.extent <= 0:
            raise DescriptorError("extent는 0보다 커야 합니다")
        if self.boxes < 0:
            raise DescriptorError("boxes는 0 이상이어야 합니다")
        if self.density < 0:
            raise DescriptorError("density는 0 이상이어야 합니다")
        if self.floors < 1:
            raise DescriptorError("floors는 1 이상이어야 합니다")
        if self.floor_height <= 0:
            raise DescriptorError("floor_height는 0보다 커야 합니다")
        if self.rooms < 0:
            raise DescriptorError("rooms는 0 이상이어야 합니다")
        for name in ("box_footprint", "box_height", "small_box_size"):
            lo, hi = getattr(self, name)
            if not (0 < lo <= hi):
                raise DescriptorError(f"{name} 범위가 잘못되었습니다: {(lo, hi)}")
        if self.kind == "box-town" and self.box_footprint[1] >= self.extent:
            raise DescriptorError("box_footprint 최댓값이 extent보다 큽니다")
        if self.kind == "sparse-field" and self.small_box_size[1] >= self.extent:
            raise DescriptorError("small_box_size 최댓값이 extent보다 큽니다")

    def walkable_levels(self) -> List[float]:
        """걸을 수 있는 바닥 높이들"""
        if self.kind == "multi-level":
            return [k * self.floor_height for k in range(self.floors)]
        return [0.0]

    def to_dict(self) -> Dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    @classmethod
    def from_dict(cls, data: Dict) -> "SceneDescriptor":
        known = {k: v for k, v in (data or {}).items() if k in cls.__dataclass_fields__}
        for k in ("box_footprint", "box_height", "small_box_size"):
            if k in known:
                known[k] = tuple(known[k])
        return cls(**known)


def _ground(extent: float, z: float = 0.0) -> TriangleMesh:
    h = extent / 2.0
    return make_quad(np.array([[-h, -h, z], [h, -h, z], [h, h, z], [-h, h, z]]))


def _box_town(desc: SceneDescriptor, rng: np.random.Generator) -> TriangleMesh:
    parts = [_ground(desc.extent)]
    h = desc.extent / 2.0
    for _ in range(desc.boxes):
        w, d = rng.uniform(*desc.box_footprint, size=2)
        height = rng.uniform(*desc.box_height)
        cx = rng.uniform(-h + w / 2, h - w / 2)
        cy = rng.uniform(-h + d / 2, h - d / 2)
        parts.append(make_box((cx - w / 2, cy - d / 2, 0.0), (cx + w / 2, cy + d / 2, height)))
    return merge_meshes(parts)


def _sparse_field(desc: SceneDescriptor, rng: np.random.Generator) -> TriangleMesh:
    parts = [_ground(desc.extent)]
    count = int(round(desc.density * desc.extent ** 2 / 100.0))
    h = desc.extent / 2.0
    for _ in range(count):
        w, d, height = rng.uniform(*desc.small_box_size, size=3)
        cx = rng.uniform(-h + w / 2, h - w / 2)
        cy = rng.uniform(-h + d / 2, h - d / 2)
        parts.append(make_box((cx - w / 2, cy - d / 2, 0.0), (cx + w / 2, cy + d / 2, height)))
    return merge_meshes(parts)


def _rect_with_hole(axis_u: np.ndarray, axis_v: np.ndarray, origin: np.ndarray,
                    size_u: float, size_v: float, hole: Optional[tuple]) -> List[TriangleMesh]:
    """평면 사각형(구멍 선택)을 사각형 조각들로 분할

    hole = (u0, v0, u1, v1), 사각형 로컬 좌표
    """
    def quad(u0, v0, u1, v1):
        pts = [origin + axis_u * u + axis_v * v for u, v in ((u0, v0), (u1, v0), (u1, v1), (u0, v1))]
        return make_quad(np.asarray(pts))

    if hole is None:
        return [quad(0.0, 0.0, size_u, size_v)]
    u0, v0, u1, v1 = hole
    pieces = []
    if v0 > 0:
        pieces.append(quad(0.0, 0.0, size_u, v0))
    if v1 < size_v:
        pieces.append(quad(0.0, v1, size_u, size_v))
    if u0 > 0:
        pieces.append(quad(0.0, v0, u0, v1))
    if u1 < size_u:
        pieces.append(quad(u1, v0, size_u, v1))
    return pieces


def _multi_level(desc: SceneDescriptor, rng: np.random.Generator) -> TriangleMesh:
    ex, ey, ez = np.eye(3)
    size = desc.extent
    h = size / 2.0
    fh = desc.floor_height
    parts: List[TriangleMesh] = []

    for k in range(desc.floors + 1):
        z = k * fh
        if k == 0 or k == desc.floors:
            parts += _rect_with_hole(ex, ey, np.array([-h, -h, z]), size, size, None)
            continue
        # 계단 구멍
        sw = min(4.0, size / 4)
        sx = rng.uniform(sw, size - 2 * sw)
        sy = rng.uniform(sw, size - 2 * sw)
        parts += _rect_with_hole(ex, ey, np.array([-h, -h, z]), size, size, (sx, sy, sx + sw, sy + sw))

    door_w, door_h = min(1.2, size / 8), min(2.2, fh * 0.8)
    win_w, win_h = min(2.0, size / 6), min(1.2, fh * 0.4)
    for k in range(desc.floors):
        z = k * fh
        # 외벽 4면, 각각 창문 1개
        walls = [
            (ex, np.array([-h, -h, z])),
            (ex, np.array([-h, h, z])),
            (ey, np.array([-h, -h, z])),
            (ey, np.array([h, -h, z])),
        ]
        for axis_u, origin in walls:
            wu = rng.uniform(win_w, size - 2 * win_w)
            wv = 0.9 + rng.uniform(0.0, max(fh - win_h - 1.0, 0.0))
            wv = min(wv, fh - win_h - 1e-3)
            parts += _rect_with_hole(axis_u, ez, origin, size, fh, (wu, wv, wu + win_w, wv + win_h))
        # 내부 칸막이 (문 1개)
        for r in range(desc.rooms):
            offset = size * (r + 1) / (desc.rooms + 1)
            du = rng.uniform(door_w, size - 2 * door_w)
            if r % 2 == 0:
                origin, axis_u = np.array([-h + offset, -h, z]), ey
            else:
                origin, axis_u = np.array([-h, -h + offset, z]), ex
            parts += _rect_with_hole(axis_u, ez, origin, size, fh, (du, 0.0, du + door_w, door_h))

    return merge_meshes(parts)


_GENERATORS = {
    "box-town": _box_town,
    "sparse-field": _sparse_field,
    "multi-level": _multi_level,
}


def generate_scene(desc: SceneDescriptor) -> TriangleMesh:
    """절차적 디스크립터 → TriangleMesh (결정적)"""
    desc.validate()
    rng = np.random.default_rng(desc.seed)
    mesh = _GENERATORS[desc.kind](desc, rng).drop_degenerate()
    logger.info(f"[generate_scene] {desc.kind} seed={desc.seed}: 삼각형 {mesh.triangle_count}개")
    return mesh


def sample_source_positions(scene: Scene, count: int, seed: int = 0,
                            levels: Optional[List[float]] = None, eye_height: float = 1.7,
                            margin: float = 0.5, max_attempts: int = 50) -> np.ndarray:
    """관심 위치(NPC 목적지 후보) 샘플링

    걸을 수 있는 층 높이 + 눈높이에서 수평 균등 샘플링하고, 고체 내부에
    있는 후보는 버린다.
    """
    if count < 1:
        raise DescriptorError("source 수는 1 이상이어야 합니다")
    rng = np.random.default_rng(seed)
    lo, hi = scene.bounds
    levels = levels if levels else [float(lo[2])]
    probe = fibonacci_directions(6).directions

    accepted: List[np.ndarray] = []
    attempts = 0
    while len(accepted) < count:
        attempts += 1
        if attempts > count * max_attempts:
            raise DescriptorError(f"빈 공간에서 source {count}개를 찾지 못했습니다 ({len(accepted)}개 확보)")
        xy = rng.uniform(lo[:2] + margin, np.maximum(hi[:2] - margin, lo[:2] + margin))
        z = levels[int(rng.integers(len(levels)))] + eye_height
        p = np.array([xy[0], xy[1], z])
        if scene.is_inside_solid(p, probe):
            continue
        accepted.append(p)

    return np.asarray(accepted)
