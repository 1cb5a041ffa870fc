"""장면 파티셔닝: 수평 2D 격자(grid2d) 또는 3D 복셀(voxel3d)

셀 id = ix + nx·(iy + ny·iz). grid2d는 z를 무시한다(iz = 0).
축마다 floor 규칙을 쓰고 셀의 위쪽 경계는 배타적이다. 단, 격자 전체의
최대 경계 위의 점은 마지막 셀(dims−1)에 속한다. 따라서 두 셀이 공유하는
면 위의 점은 그 면을 아래쪽 경계로 갖는 셀(인덱스가 큰 쪽)에 속한다.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from src.utils.errors import InputError, NoCoverageError

logger = logging.getLogger("odfsight")

PARTITION_KINDS = ("grid2d", "voxel3d")
SNAP_TOLERANCE = 1e-9


@dataclass(frozen=True)
class PartitionScheme:
    kind: str
    origin: Tuple[float, float, float]
    cell_size: Tuple[float, float, float]
    dims: Tuple[int, int, int]
    active_cells: Tuple[int, ...]  # 오름차순

    @property
    def partition_count(self) -> int:
        return len(self.active_cells)

    @property
    def upper(self) -> np.ndarray:
        return np.asarray(self.origin) + np.asarray(self.dims) * np.asarray(self.cell_size)

    def cell_ids(self, positions: np.ndarray) -> np.ndarray:
        """(N, 3) → 셀 id, 격자 밖이면 -1 (활성 여부는 보지 않음)"""
        P = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
        origin = np.asarray(self.origin)
        cs = np.asarray(self.cell_size)
        dims = np.asarray(self.dims)

        q = (P - origin) / cs
        # 경계 위 점의 부동소수점 흔들림 보정
        r = np.round(q)
        q = np.where(np.abs(q - r) <= SNAP_TOLERANCE * np.maximum(1.0, np.abs(r)), r, q)
        idx = np.floor(q).astype(np.int64)
        # 전역 최대 경계는 마지막 셀에 포함
        idx = np.where((idx == dims) & (q <= dims), dims - 1, idx)

        axes = 2 if self.kind == "grid2d" else 3
        inside = np.all((idx[:, :axes] >= 0) & (idx[:, :axes] < dims[:axes]), axis=1)
        if self.kind == "grid2d":
            idx[:, 2] = 0
        ids = idx[:, 0] + dims[0] * (idx[:, 1] + dims[1] * idx[:, 2])
        return np.where(inside, ids, -1)

    def cell_index(self, cell_id: int) -> Tuple[int, int, int]:
        nx, ny, _ = self.dims
        return cell_id % nx, (cell_id // nx) % ny, cell_id // (nx * ny)

    def cell_bounds(self, cell_id: int) -> Tuple[np.ndarray, np.ndarray]:
        """셀의 축 정렬 상자 (grid2d의 z 범위는 격자 전체 높이)"""
        ijk = np.asarray(self.cell_index(int(cell_id)), dtype=np.float64)
        cs = np.asarray(self.cell_size)
        lo = np.asarray(self.origin) + ijk * cs
        return lo, lo + cs

    def is_active(self, cell_id: int) -> bool:
        i = np.searchsorted(self.active_cells, cell_id)
        return i < len(self.active_cells) and self.active_cells[i] == cell_id

    def assign(self, positions: np.ndarray) -> np.ndarray:
        """(N, 3) → 활성 셀 id. 하나라도 커버되지 않으면 NoCoverageError"""
        P = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
        ids = self.cell_ids(P)
        active = np.asarray(self.active_cells, dtype=np.int64)
        ok = np.isin(ids, active)
        if not ok.all():
            bad = P[int(np.argmin(ok))]
            raise NoCoverageError(f"활성 파티션 밖의 위치: {bad.tolist()}", point=bad)
        return ids

    def to_dict(self) -> Dict:
        return {
            "kind": self.kind,
            "origin": [float(x) for x in self.origin],
            "cell_size": [float(x) for x in self.cell_size],
            "dims": [int(x) for x in self.dims],
            "active_cells": [int(x) for x in self.active_cells],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "PartitionScheme":
        return cls(
            kind=data["kind"],
            origin=tuple(float(x) for x in data["origin"]),
            cell_size=tuple(float(x) for x in data["cell_size"]),
            dims=tuple(int(x) for x in data["dims"]),
            active_cells=tuple(int(x) for x in data["active_cells"]),
        )


def build_scheme(positions: np.ndarray, kind: str = "grid2d",
                 cells: Optional[Union[int, Sequence[int]]] = None,
                 cell_size: Optional[Union[float, Sequence[float]]] = None) -> PartitionScheme:
    """source 위치들의 경계 상자를 덮는 파티션 격자

    Args:
        cells: 축별 셀 수 (grid2d는 (nx, ny), 스칼라면 모든 축 동일)
        cell_size: 축별 셀 크기 (m). cells와 둘 중 하나만 지정
    """
    if kind not in PARTITION_KINDS:
        raise InputError(f"알 수 없는 파티션 유형: {kind!r} (사용 가능: {', '.join(PARTITION_KINDS)})")
    P = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    if len(P) == 0:
        raise InputError("source 위치가 비어 있습니다")
    if (cells is None) == (cell_size is None):
        raise InputError("cells와 cell_size 중 하나만 지정해야 합니다")

    lo, hi = P.min(axis=0), P.max(axis=0)
    extent = hi - lo

    if cells is not None:
        n = np.atleast_1d(np.asarray(cells, dtype=np.int64))
        if n.size == 1:
            n = np.repeat(n, 3)
        elif n.size == 2:
            n = np.array([n[0], n[1], 1])
        if n.size != 3 or np.any(n < 1):
            raise InputError(f"셀 수는 1 이상이어야 합니다: {cells}")
        dims = np.where(extent > 0, n, 1)
        cs = np.where(extent > 0, extent / np.maximum(dims, 1), 1.0)
    else:
        cs = np.broadcast_to(np.asarray(cell_size, dtype=np.float64), (3,)).copy()
        if np.any(cs <= 0):
            raise InputError(f"셀 크기는 0보다 커야 합니다: {cell_size}")
        dims = np.maximum(1, np.ceil(extent / cs - SNAP_TOLERANCE)).astype(np.int64)

    if kind == "grid2d":
        dims = np.array([dims[0], dims[1], 1])
        cs = np.array([cs[0], cs[1], max(float(extent[2]), 1.0)])

    scheme = PartitionScheme(
        kind=kind,
        origin=tuple(float(x) for x in lo),
        cell_size=tuple(float(x) for x in cs),
        dims=tuple(int(x) for x in dims),
        active_cells=(),
    )
    ids = scheme.cell_ids(P)
    if np.any(ids < 0):
        raise InputError("일부 source 위치가 파티션 격자 밖으로 계산되었습니다")
    active = tuple(int(x) for x in np.unique(ids))
    scheme = PartitionScheme(scheme.kind, scheme.origin, scheme.cell_size, scheme.dims, active)
    logger.info(f"[build_scheme] {kind} dims={scheme.dims}: 활성 파티션 {len(active)}개 / source {len(P)}개")
    return scheme


def partition_of(scheme: PartitionScheme, s) -> int:
    """s가 속한 활성 셀 id. 활성 셀 밖이면 NoCoverageError"""
    p = np.asarray(s, dtype=np.float64).reshape(1, 3)
    cid = int(scheme.cell_ids(p)[0])
    if cid < 0 or not scheme.is_active(cid):
        raise NoCoverageError(f"활성 파티션 밖의 위치: {p[0].tolist()}", point=p[0])
    return cid
