"""삼각형 메쉬 표현과 OBJ 입출력

OBJ 서브셋만 지원한다: `v x y z`, `f a b c ...` (폴리곤은 팬 삼각분할),
주석(#). vn/vt/o/g/s/usemtl/mtllib 등은 무시한다.
"""
import io
import hashlib
import logging
from dataclasses import dataclass
from typing import Iterable, List, Tuple, Union, TextIO, BinaryIO

import numpy as np

from src.utils.errors import MeshParseError, EmptySceneError

logger = logging.getLogger("odfsight")

DEGENERATE_AREA = 1e-12  # m²
_IGNORED_RECORDS = {"vn", "vt", "vp", "o", "g", "s", "usemtl", "mtllib", "l", "p"}


@dataclass
class TriangleMesh:
    """인덱스 삼각형 메쉬 (단위: m)"""
    vertices: np.ndarray  # (V, 3) float64
    triangles: np.ndarray  # (T, 3) int64
    dropped: int = 0  # 로드 시 제거된 퇴화 삼각형 수

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int64).reshape(-1, 3)

    @classmethod
    def empty(cls) -> "TriangleMesh":
        return cls(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))

    @property
    def triangle_count(self) -> int:
        return len(self.triangles)

    @property
    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        """축 정렬 경계 상자 (lo, hi)"""
        if len(self.vertices) == 0:
            return np.zeros(3), np.zeros(3)
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def corners(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """삼각형별 꼭짓점 (v0, v1, v2), 각각 (T, 3)"""
        tri = self.triangles
        return self.vertices[tri[:, 0]], self.vertices[tri[:, 1]], self.vertices[tri[:, 2]]

    def areas(self) -> np.ndarray:
        v0, v1, v2 = self.corners()
        return 0.5 * np.linalg.norm(np.cross(v1 - v0, v2 - v0), axis=1)

    def face_normals(self) -> np.ndarray:
        """단위 면 법선 (감김 순서 기준)"""
        v0, v1, v2 = self.corners()
        n = np.cross(v1 - v0, v2 - v0)
        length = np.linalg.norm(n, axis=1, keepdims=True)
        return n / np.where(length > 0, length, 1.0)

    def content_hash(self) -> bytes:
        """장면 해시: 정점/인덱스 바이트의 SHA-256 (32 bytes)"""
        h = hashlib.sha256()
        h.update(self.vertices.astype("<f8").tobytes())
        h.update(self.triangles.astype("<i8").tobytes())
        return h.digest()

    def validate(self):
        """불변식 검사"""
        if len(self.triangles):
            if self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices):
                raise ValueError("삼각형 인덱스가 정점 범위를 벗어났습니다")
            if np.any(self.areas() <= DEGENERATE_AREA):
                raise ValueError("퇴화 삼각형이 남아 있습니다")

    def drop_degenerate(self) -> "TriangleMesh":
        """면적 ≤ 1e-12 m² 삼각형 제거"""
        if len(self.triangles) == 0:
            return self
        keep = self.areas() > DEGENERATE_AREA
        dropped = int((~keep).sum())
        return TriangleMesh(self.vertices, self.triangles[keep], dropped=self.dropped + dropped)


def merge_meshes(meshes: Iterable[TriangleMesh]) -> TriangleMesh:
    """여러 메쉬를 하나로 합침 (인덱스 재배치)"""
    verts, tris = [], []
    offset = 0
    for m in meshes:
        verts.append(m.vertices)
        tris.append(m.triangles + offset)
        offset += len(m.vertices)
    if not verts:
        return TriangleMesh.empty()
    return TriangleMesh(np.concatenate(verts), np.concatenate(tris))


def make_quad(corners: np.ndarray) -> TriangleMesh:
    """사각형 4꼭짓점(반시계) → 삼각형 2개"""
    return TriangleMesh(np.asarray(corners, dtype=np.float64), np.array([[0, 1, 2], [0, 2, 3]]))


def make_box(lo, hi) -> TriangleMesh:
    """닫힌 축 정렬 박스, 법선은 바깥 방향 (삼각형 12개)"""
    x0, y0, z0 = lo
    x1, y1, z1 = hi
    v = np.array([
        [x0, y0, z0], [x1, y0, z0], [x1, y1, z0], [x0, y1, z0],
        [x0, y0, z1], [x1, y0, z1], [x1, y1, z1], [x0, y1, z1],
    ], dtype=np.float64)
    t = np.array([
        [0, 2, 1], [0, 3, 2],  # -z
        [4, 5, 6], [4, 6, 7],  # +z
        [0, 1, 5], [0, 5, 4],  # -y
        [3, 7, 6], [3, 6, 2],  # +y
        [0, 4, 7], [0, 7, 3],  # -x
        [1, 2, 6], [1, 6, 5],  # +x
    ])
    return TriangleMesh(v, t)


def make_icosphere(radius: float = 1.0, subdivisions: int = 3, center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """정이십면체 세분 구 (법선 바깥 방향)"""
    phi = (1.0 + 5 ** 0.5) / 2.0
    verts = [
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
    ]
    faces = [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ]
    verts = [list(np.asarray(v, dtype=np.float64) / np.linalg.norm(v)) for v in verts]

    for _ in range(subdivisions):
        midpoint_cache = {}

        def midpoint(a, b):
            key = (min(a, b), max(a, b))
            if key not in midpoint_cache:
                m = (np.asarray(verts[a]) + np.asarray(verts[b])) / 2.0
                verts.append(list(m / np.linalg.norm(m)))
                midpoint_cache[key] = len(verts) - 1
            return midpoint_cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = new_faces

    v = np.asarray(verts) * radius + np.asarray(center, dtype=np.float64)
    return TriangleMesh(v, np.asarray(faces))


# ═══════════════════════════════════════════
# OBJ 입출력
# ═══════════════════════════════════════════
def _resolve_index(token: str, vertex_count: int, line_no: int) -> int:
    head = token.split("/")[0]
    try:
        idx = int(head)
    except ValueError:
        raise MeshParseError(f"면 인덱스 해석 실패: {token!r}", line_no)
    if idx == 0:
        raise MeshParseError("OBJ 인덱스는 1부터 시작합니다", line_no)
    resolved = idx - 1 if idx > 0 else vertex_count + idx
    if resolved < 0 or resolved >= vertex_count:
        raise MeshParseError(f"정점 인덱스 범위 초과: {idx}", line_no)
    return resolved


def load_mesh(source: Union[bytes, str, BinaryIO, TextIO], allow_empty: bool = False) -> TriangleMesh:
    """OBJ 서브셋 스트림 → TriangleMesh

    Args:
        source: 바이트, 문자열, 또는 파일 객체
        allow_empty: True면 삼각형 0개여도 예외 없이 반환

    Raises:
        MeshParseError: 잘못된 레코드 (행 번호 포함)
        EmptySceneError: 유효 삼각형 0개
    """
    if isinstance(source, (bytes, bytearray)):
        text = bytes(source).decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        raw = source.read()
        text = raw.decode("utf-8") if isinstance(raw, (bytes, bytearray)) else raw

    vertices: List[List[float]] = []
    triangles: List[List[int]] = []

    for line_no, line in enumerate(io.StringIO(text), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        parts = stripped.split()
        record = parts[0]

        if record == "v":
            if len(parts) < 4:
                raise MeshParseError("정점 좌표가 3개 미만입니다", line_no)
            try:
                xyz = [float(p) for p in parts[1:4]]
            except ValueError:
                raise MeshParseError(f"정점 좌표 해석 실패: {stripped!r}", line_no)
            if not all(np.isfinite(xyz)):
                raise MeshParseError("정점 좌표가 유한하지 않습니다", line_no)
            vertices.append(xyz)
        elif record == "f":
            if len(parts) < 4:
                raise MeshParseError("면은 정점 3개 이상이어야 합니다", line_no)
            idx = [_resolve_index(tok, len(vertices), line_no) for tok in parts[1:]]
            # 팬 삼각분할
            for k in range(1, len(idx) - 1):
                triangles.append([idx[0], idx[k], idx[k + 1]])
        elif record in _IGNORED_RECORDS:
            continue
        else:
            raise MeshParseError(f"알 수 없는 레코드: {record!r}", line_no)

    mesh = TriangleMesh(np.asarray(vertices, dtype=np.float64).reshape(-1, 3),
                        np.asarray(triangles, dtype=np.int64).reshape(-1, 3)).drop_degenerate()

    if mesh.dropped:
        logger.info(f"[load_mesh] 퇴화 삼각형 {mesh.dropped}개 제거")
    if mesh.triangle_count == 0 and not allow_empty:
        raise EmptySceneError("삼각형이 없는 장면입니다", dropped=mesh.dropped)

    logger.debug(f"[load_mesh] 정점 {len(mesh.vertices)}개, 삼각형 {mesh.triangle_count}개")
    return mesh


def load_mesh_file(path: str, allow_empty: bool = False) -> TriangleMesh:
    with open(path, "rb") as f:
        return load_mesh(f, allow_empty=allow_empty)


def write_obj(mesh: TriangleMesh, header: str = None) -> str:
    """TriangleMesh → OBJ 텍스트 (repr 정밀도라 재로드 시 비트 동일)"""
    lines = []
    if header:
        lines += [f"# {h}" for h in header.splitlines()]
    lines += [f"v {x!r} {y!r} {z!r}" for x, y, z in mesh.vertices.tolist()]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.triangles.tolist()]
    return "\n".join(lines) + "\n"
