"""BVH 가속 구조와 레이캐스트 오라클

binned SAH(16 bins)로 빌드하고 리프는 삼각형 4개 이하.
탐색은 광선 묶음(packet) 단위로 numpy 벡터화한다: 노드마다 그 노드의
상자를 통과하면서 현재 최근접 거리보다 가까울 수 있는 광선만 남긴다.
빌드 후에는 불변이므로 여러 스레드에서 동시에 읽어도 안전하다.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.geometry.mesh import TriangleMesh
from src.utils.errors import ContractViolation, DegeneratePairError

logger = logging.getLogger("odfsight")

DEFAULT_MAX_DISTANCE = 100.0  # m
CONTACT_EPSILON = 1e-6  # m
UNIT_TOLERANCE = 1e-9
DET_EPSILON = 1e-14
BARY_EPSILON = 1e-10
LEAF_SIZE = 4
SAH_BINS = 16
PACKET_SIZE = 65536
INSIDE_FRACTION = 0.999


@dataclass
class RayHit:
    """단일 레이캐스트 결과"""
    distance: float
    triangle_id: Optional[int]
    hit: bool


@dataclass
class Bvh:
    """평탄화된 BVH

    count > 0 인 노드는 리프이며 order[start:start+count]가 그 삼각형들이다.
    """
    node_lo: np.ndarray  # (N, 3)
    node_hi: np.ndarray  # (N, 3)
    left: np.ndarray  # (N,)
    right: np.ndarray  # (N,)
    start: np.ndarray  # (N,)
    count: np.ndarray  # (N,)
    order: np.ndarray  # (T,) 원래 삼각형 id

    @property
    def node_count(self) -> int:
        return len(self.node_lo)

    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.count > 0)


def _surface_area(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    d = np.maximum(hi - lo, 0.0)
    return 2.0 * (d[..., 0] * d[..., 1] + d[..., 1] * d[..., 2] + d[..., 2] * d[..., 0])


def _binned_sah_split(idx: np.ndarray, tri_lo: np.ndarray, tri_hi: np.ndarray,
                      centroids: np.ndarray, bins: int) -> Optional[np.ndarray]:
    """SAH 최소 분할 → 왼쪽 마스크 (분할 불가면 None)"""
    c = centroids[idx]
    cmin, cmax = c.min(axis=0), c.max(axis=0)
    extent = cmax - cmin
    n = len(idx)
    best_cost, best_mask = np.inf, None

    for axis in range(3):
        if extent[axis] <= 1e-12:
            continue
        b = ((c[:, axis] - cmin[axis]) / extent[axis] * bins).astype(np.int64)
        b = np.clip(b, 0, bins - 1)

        counts = np.bincount(b, minlength=bins)
        blo = np.full((bins, 3), np.inf)
        bhi = np.full((bins, 3), -np.inf)
        np.minimum.at(blo, b, tri_lo[idx])
        np.maximum.at(bhi, b, tri_hi[idx])

        llo = np.minimum.accumulate(blo, axis=0)[:-1]
        lhi = np.maximum.accumulate(bhi, axis=0)[:-1]
        rlo = np.minimum.accumulate(blo[::-1], axis=0)[::-1][1:]
        rhi = np.maximum.accumulate(bhi[::-1], axis=0)[::-1][1:]
        lcount = np.cumsum(counts)[:-1]
        rcount = n - lcount

        valid = (lcount > 0) & (rcount > 0)
        if not valid.any():
            continue
        with np.errstate(invalid="ignore"):
            cost = _surface_area(llo, lhi) * lcount + _surface_area(rlo, rhi) * rcount
        cost = np.where(valid, cost, np.inf)
        k = int(np.argmin(cost))
        if cost[k] < best_cost:
            best_cost = cost[k]
            best_mask = b <= k

    return best_mask


def build_bvh(mesh: TriangleMesh, leaf_size: int = LEAF_SIZE, bins: int = SAH_BINS) -> Bvh:
    """binned SAH BVH 빌드 (단일 스레드)"""
    T = mesh.triangle_count
    if T == 0:
        z = np.zeros((1, 3))
        neg = np.full(1, -1, dtype=np.int64)
        return Bvh(z, z.copy(), neg, neg.copy(), np.zeros(1, dtype=np.int64),
                   np.zeros(1, dtype=np.int64), np.zeros(0, dtype=np.int64))

    v0, v1, v2 = mesh.corners()
    tri_lo = np.minimum(np.minimum(v0, v1), v2)
    tri_hi = np.maximum(np.maximum(v0, v1), v2)
    centroids = (v0 + v1 + v2) / 3.0

    lo_all, hi_all = mesh.bounds
    pad = 1e-9 * max(1.0, float(np.linalg.norm(hi_all - lo_all)))

    order = np.arange(T, dtype=np.int64)
    node_lo, node_hi, left, right, start, count = [], [], [], [], [], []

    def new_node() -> int:
        node_lo.append(None)
        node_hi.append(None)
        left.append(-1)
        right.append(-1)
        start.append(0)
        count.append(0)
        return len(node_lo) - 1

    stack = [(new_node(), 0, T)]
    while stack:
        ni, s, e = stack.pop()
        idx = order[s:e]
        node_lo[ni] = tri_lo[idx].min(axis=0) - pad
        node_hi[ni] = tri_hi[idx].max(axis=0) + pad

        n = e - s
        if n <= leaf_size:
            start[ni], count[ni] = s, n
            continue

        mask = _binned_sah_split(idx, tri_lo, tri_hi, centroids, bins)
        if mask is None:
            # 중심점이 모두 겹침 → 절반으로 강제 분할
            mask = np.zeros(n, dtype=bool)
            mask[: n // 2] = True
        order[s:e] = np.concatenate([idx[mask], idx[~mask]])
        mid = s + int(mask.sum())

        li, ri = new_node(), new_node()
        left[ni], right[ni] = li, ri
        stack.append((ri, mid, e))
        stack.append((li, s, mid))

    bvh = Bvh(
        node_lo=np.asarray(node_lo), node_hi=np.asarray(node_hi),
        left=np.asarray(left, dtype=np.int64), right=np.asarray(right, dtype=np.int64),
        start=np.asarray(start, dtype=np.int64), count=np.asarray(count, dtype=np.int64),
        order=order,
    )
    logger.debug(f"[build_bvh] 삼각형 {T}개 → 노드 {bvh.node_count}개")
    return bvh


# ═══════════════════════════════════════════
# 교차 판정
# ═══════════════════════════════════════════
def _dot(a, b):
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]


def _cross(a, b):
    return np.stack([
        a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1],
        a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2],
        a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0],
    ], axis=-1)


def intersect_triangles(O: np.ndarray, D: np.ndarray, v0: np.ndarray,
                        e1: np.ndarray, e2: np.ndarray) -> np.ndarray:
    """양면 Möller–Trumbore. 브로드캐스팅된 형상의 t (미교차는 inf)"""
    pvec = _cross(D, e2)
    det = _dot(e1, pvec)
    ok = np.abs(det) > DET_EPSILON
    inv = 1.0 / np.where(ok, det, 1.0)
    tvec = O - v0
    u = _dot(tvec, pvec) * inv
    qvec = _cross(tvec, e1)
    v = _dot(D, qvec) * inv
    t = _dot(e2, qvec) * inv
    hit = ok & (u >= -BARY_EPSILON) & (v >= -BARY_EPSILON) & (u + v <= 1.0 + BARY_EPSILON) & (t > 0.0)
    return np.where(hit, t, np.inf)


def _check_unit(directions: np.ndarray):
    norms = np.linalg.norm(directions, axis=-1)
    if np.any(np.abs(norms - 1.0) > UNIT_TOLERANCE):
        raise ContractViolation("방향 벡터는 단위 길이여야 합니다 (|d| = 1 ± 1e-9)")


class Scene:
    """메쉬 + BVH. 생성 후 불변"""

    def __init__(self, mesh: TriangleMesh, leaf_size: int = LEAF_SIZE, bins: int = SAH_BINS):
        self.mesh = mesh
        self.bvh = build_bvh(mesh, leaf_size=leaf_size, bins=bins)
        v0, v1, v2 = mesh.corners()
        self._v0, self._e1, self._e2 = v0, v1 - v0, v2 - v0
        # BVH 순서로 재배치한 사본
        o = self.bvh.order
        self._bv0, self._be1, self._be2 = self._v0[o], self._e1[o], self._e2[o]
        self.normals = mesh.face_normals()
        self.scene_hash = mesh.content_hash()

    @classmethod
    def from_mesh(cls, mesh: TriangleMesh) -> "Scene":
        return cls(mesh)

    @property
    def triangle_count(self) -> int:
        return self.mesh.triangle_count

    @property
    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.mesh.bounds

    def memory_bytes(self) -> int:
        """충돌 지오메트리 메모리 (32-bit 정점/인덱스 + 노드당 상자 6 float + 참조 2 int)"""
        mesh_bytes = self.mesh.vertices.size * 4 + self.mesh.triangles.size * 4
        node_bytes = self.bvh.node_count * (6 * 4 + 2 * 4)
        return int(mesh_bytes + node_bytes + len(self.bvh.order) * 4)

    # ───────────────────────────────────────
    # 레이캐스트
    # ───────────────────────────────────────
    def _traverse(self, O: np.ndarray, D: np.ndarray, tmax: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        best_t = tmax.astype(np.float64).copy()
        best_tri = np.full(len(O), -1, dtype=np.int64)
        if self.triangle_count == 0 or len(O) == 0:
            return best_t, best_tri

        bvh = self.bvh
        inv = 1.0 / np.where(np.abs(D) < 1e-30, 1e-30, D)
        stack = [(0, np.arange(len(O)))]

        while stack:
            node, rays = stack.pop()
            o = O[rays]
            iv = inv[rays]
            t1 = (bvh.node_lo[node] - o) * iv
            t2 = (bvh.node_hi[node] - o) * iv
            tnear = np.minimum(t1, t2).max(axis=1)
            tfar = np.maximum(t1, t2).min(axis=1)
            keep = (tfar >= np.maximum(tnear, 0.0)) & (tnear <= best_t[rays])
            rays = rays[keep]
            if rays.size == 0:
                continue

            n = bvh.count[node]
            if n > 0:
                s = bvh.start[node]
                t = intersect_triangles(O[rays][:, None, :], D[rays][:, None, :],
                                        self._bv0[None, s:s + n], self._be1[None, s:s + n],
                                        self._be2[None, s:s + n])
                for j in range(n):
                    tri_id = bvh.order[s + j]
                    tj = t[:, j]
                    bt = best_t[rays]
                    btri = best_tri[rays]
                    # 동률이면 id가 작은 삼각형 (브루트포스 argmin과 동일)
                    better = (tj < bt) | ((tj == bt) & np.isfinite(tj) & ((btri < 0) | (tri_id < btri)))
                    if better.any():
                        sel = rays[better]
                        best_t[sel] = tj[better]
                        best_tri[sel] = tri_id
            else:
                stack.append((bvh.right[node], rays))
                stack.append((bvh.left[node], rays))

        return best_t, best_tri

    def raycast_batch(self, origins: np.ndarray, directions: np.ndarray,
                      max_distance=DEFAULT_MAX_DISTANCE) -> Tuple[np.ndarray, np.ndarray]:
        """광선 묶음 → (거리, 삼각형 id). 미교차는 거리 = max_distance, id = -1"""
        O = np.asarray(origins, dtype=np.float64).reshape(-1, 3)
        D = np.asarray(directions, dtype=np.float64).reshape(-1, 3)
        _check_unit(D)
        tmax = np.broadcast_to(np.asarray(max_distance, dtype=np.float64), (len(O),)).copy()
        if np.any(tmax <= 0):
            raise ContractViolation("max_distance는 0보다 커야 합니다")

        dist = np.empty(len(O))
        tri = np.empty(len(O), dtype=np.int64)
        for s in range(0, len(O), PACKET_SIZE):
            e = min(s + PACKET_SIZE, len(O))
            dist[s:e], tri[s:e] = self._traverse(O[s:e], D[s:e], tmax[s:e])
        return dist, tri

    def raycast(self, origin, direction, max_distance: float = DEFAULT_MAX_DISTANCE) -> RayHit:
        dist, tri = self.raycast_batch(np.asarray(origin)[None], np.asarray(direction)[None], max_distance)
        hit = bool(tri[0] >= 0)
        return RayHit(distance=float(dist[0]), triangle_id=int(tri[0]) if hit else None, hit=hit)

    def raycast_brute_force(self, origins: np.ndarray, directions: np.ndarray,
                            max_distance=DEFAULT_MAX_DISTANCE) -> Tuple[np.ndarray, np.ndarray]:
        """모든 삼각형과 직접 교차 (검증용 기준 구현)"""
        O = np.asarray(origins, dtype=np.float64).reshape(-1, 3)
        D = np.asarray(directions, dtype=np.float64).reshape(-1, 3)
        _check_unit(D)
        tmax = np.broadcast_to(np.asarray(max_distance, dtype=np.float64), (len(O),))
        dist = tmax.astype(np.float64).copy()
        tri = np.full(len(O), -1, dtype=np.int64)
        T = self.triangle_count
        if T == 0:
            return dist, tri

        chunk = max(1, 2_000_000 // T)
        for s in range(0, len(O), chunk):
            e = min(s + chunk, len(O))
            t = intersect_triangles(O[s:e, None, :], D[s:e, None, :],
                                    self._v0[None], self._e1[None], self._e2[None])
            k = np.argmin(t, axis=1)
            tk = t[np.arange(e - s), k]
            hit = tk <= tmax[s:e]
            dist[s:e] = np.where(hit, tk, tmax[s:e])
            tri[s:e] = np.where(hit, k, -1)
        return dist, tri

    # ───────────────────────────────────────
    # 가시성
    # ───────────────────────────────────────
    def oracle_visibility_batch(self, sources: np.ndarray, targets: np.ndarray) -> np.ndarray:
        """선분 s→t 가 막히지 않았는지 (접촉 1e-6 m 이내는 보임)"""
        S = np.asarray(sources, dtype=np.float64).reshape(-1, 3)
        T = np.asarray(targets, dtype=np.float64).reshape(-1, 3)
        delta = T - S
        length = np.linalg.norm(delta, axis=1)
        if np.any(length == 0.0):
            raise DegeneratePairError("source와 target이 같은 위치입니다")
        dirs = delta / length[:, None]
        dist, tri = self.raycast_batch(S, dirs, length)
        blocked = (tri >= 0) & (dist < length - CONTACT_EPSILON)
        return ~blocked

    def oracle_visibility(self, s, t) -> bool:
        return bool(self.oracle_visibility_batch(np.asarray(s)[None], np.asarray(t)[None])[0])

    def back_face_fraction(self, origin, directions: np.ndarray, max_distance: float = DEFAULT_MAX_DISTANCE) -> float:
        """origin에서 쏜 광선 중 뒷면에 맞은 비율 (고체 내부 판정용)"""
        D = np.asarray(directions, dtype=np.float64).reshape(-1, 3)
        O = np.broadcast_to(np.asarray(origin, dtype=np.float64), D.shape)
        _, tri = self.raycast_batch(O, D, max_distance)
        hit = tri >= 0
        if not hit.any():
            return 0.0
        facing = _dot(self.normals[tri[hit]], D[hit])
        return float((facing > 0).sum() / hit.sum())

    def is_inside_solid(self, origin, directions: np.ndarray) -> bool:
        """모든 적중이 뒷면이면 닫힌 고체 내부로 본다 (얇은 판 장면에서도 오판 없음)"""
        return self.back_face_fraction(origin, directions) >= INSIDE_FRACTION


def raycast(scene: Scene, origin, direction, max_distance: float = DEFAULT_MAX_DISTANCE) -> RayHit:
    return scene.raycast(origin, direction, max_distance)


def oracle_visibility(scene: Scene, s, t) -> bool:
    return scene.oracle_visibility(s, t)
