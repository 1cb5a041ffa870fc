"""바이너리 파일 포맷 (리틀 엔디언)

ODFD (광선 데이터셋)
    magic "ODFD" | version u16 | axis u8 | reserved u8 | lattice n u32 |
    clamp f32 | scene hash 32B | source count u32                     = 52 B
    레코드: position 3×f32 | distances (2n+1)×f32 (격자 순서)

ODFV (가시성 테스트 세트)
    magic "ODFV" | version u16 | reserved u16 | scene hash 32B | count u32 = 44 B
    레코드 25 B: s 3×f32 | t 3×f32 | label u8

ODFM (모델/아틀라스)
    magic "ODFM" | version u16 | reserved u16 | metadata length u32 |
    metadata (UTF-8 JSON, 키 정렬) | 텐서 f32 (메타데이터 tensors 표 순서)

방향은 저장하지 않는다. 격자 파라미터 n으로 다시 만든다.
"""
import json
import logging
import os
import struct
from dataclasses import dataclass, field
from typing import BinaryIO, Dict, Union

import numpy as np

from src.sampling.fibonacci import AXIS_CONVENTION, FibonacciLattice, fibonacci_directions
from src.utils.errors import (
    DataIntegrityError, MagicMismatchError, TruncatedFileError, VersionMismatchError,
)

logger = logging.getLogger("odfsight")

FORMAT_VERSION = 1
AXIS_CODES = {"z-up": 0}

RAY_MAGIC = b"ODFD"
TEST_MAGIC = b"ODFV"
MODEL_MAGIC = b"ODFM"

_RAY_HEADER = struct.Struct("<4sHBBIf32sI")
_TEST_HEADER = struct.Struct("<4sHH32sI")
_MODEL_HEADER = struct.Struct("<4sHHI")
_TEST_RECORD = np.dtype([("s", "<f4", (3,)), ("t", "<f4", (3,)), ("y", "u1")])

PathOrFile = Union[str, os.PathLike, BinaryIO]


# ═══════════════════════════════════════════
# 데이터 타입
# ═══════════════════════════════════════════
@dataclass
class RayDataset:
    """source별 격자 방향 거리 기록"""
    lattice_n: int
    clamp: float
    scene_hash: bytes
    positions: np.ndarray  # (S, 3) float32
    distances: np.ndarray  # (S, 2n+1) float32
    version: int = FORMAT_VERSION
    axis: str = AXIS_CONVENTION

    def __post_init__(self):
        self.positions = np.ascontiguousarray(self.positions, dtype="<f4").reshape(-1, 3)
        d = np.ascontiguousarray(self.distances, dtype="<f4")
        if d.ndim != 2:
            d = d.reshape(len(self.positions), -1) if len(self.positions) else d.reshape(0, self.direction_count)
        self.distances = d
        self.clamp = float(np.float32(self.clamp))

    @property
    def direction_count(self) -> int:
        return 2 * self.lattice_n + 1

    @property
    def source_count(self) -> int:
        return len(self.positions)

    @property
    def ray_count(self) -> int:
        return self.source_count * self.direction_count

    def lattice(self) -> FibonacciLattice:
        return fibonacci_directions(self.lattice_n)

    def subset(self, rows) -> "RayDataset":
        rows = np.asarray(rows)
        return RayDataset(self.lattice_n, self.clamp, self.scene_hash,
                          self.positions[rows], self.distances[rows], self.version, self.axis)

    def validate(self):
        if len(self.distances) != len(self.positions):
            raise DataIntegrityError(f"위치 {len(self.positions)}개와 거리 레코드 {len(self.distances)}개가 다릅니다")
        if self.distances.shape[1] != self.direction_count:
            raise DataIntegrityError(
                f"레코드당 거리 개수 {self.distances.shape[1]} != 2n+1 = {self.direction_count}")
        if self.distances.size and (np.any(~(self.distances > 0)) or np.any(self.distances > np.float32(self.clamp))):
            raise DataIntegrityError("거리 값이 (0, clamp] 범위를 벗어났습니다")
        if len(self.scene_hash) != 32:
            raise DataIntegrityError("장면 해시는 32바이트여야 합니다")


@dataclass
class VisibilityTestSet:
    """(s, t, label) 가시성 테스트 케이스"""
    scene_hash: bytes
    sources: np.ndarray  # (M, 3) float32
    targets: np.ndarray  # (M, 3) float32
    labels: np.ndarray  # (M,) uint8, 1 = 보임
    version: int = FORMAT_VERSION

    def __post_init__(self):
        self.sources = np.ascontiguousarray(self.sources, dtype="<f4").reshape(-1, 3)
        self.targets = np.ascontiguousarray(self.targets, dtype="<f4").reshape(-1, 3)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.uint8).reshape(-1)

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def visible_fraction(self) -> float:
        return float(self.labels.mean()) if len(self) else 0.0


@dataclass
class ModelFile:
    """ODFM 파일 내용: JSON 메타데이터 + 이름 붙은 f32 텐서"""
    metadata: Dict
    tensors: Dict[str, np.ndarray] = field(default_factory=dict)  # 키: "p{pid}/{name}"
    version: int = FORMAT_VERSION


# ═══════════════════════════════════════════
# 공통 헬퍼
# ═══════════════════════════════════════════
def _read_all(source: PathOrFile) -> bytes:
    if isinstance(source, (bytes, bytearray)):
        return bytes(source)
    if hasattr(source, "read"):
        return source.read()
    with open(source, "rb") as f:
        return f.read()


def _write_all(data: bytes, target: PathOrFile):
    if hasattr(target, "write"):
        target.write(data)
        return
    os.makedirs(os.path.dirname(os.fspath(target)) or ".", exist_ok=True)
    with open(target, "wb") as f:
        f.write(data)


def _check_header(data: bytes, header: struct.Struct, magic: bytes):
    if len(data) < 4:
        raise TruncatedFileError(f"{magic.decode()} 헤더가 잘렸습니다", offset=len(data))
    if data[:4] != magic:
        raise MagicMismatchError(f"매직 불일치: {data[:4]!r} (기대값 {magic!r})")
    if len(data) < header.size:
        raise TruncatedFileError(f"{magic.decode()} 헤더가 잘렸습니다", offset=len(data))
    fields = header.unpack_from(data, 0)
    if fields[1] != FORMAT_VERSION:
        raise VersionMismatchError(f"지원하지 않는 {magic.decode()} 버전: {fields[1]} (지원: {FORMAT_VERSION})")
    return fields


def _check_records(data: bytes, start: int, count: int, record_size: int, magic: bytes):
    available = len(data) - start
    needed = count * record_size
    if available < needed:
        record = available // record_size
        raise TruncatedFileError(f"{magic.decode()} 레코드가 잘렸습니다",
                                 offset=start + record * record_size, record_index=record)
    if available > needed:
        raise DataIntegrityError(f"{magic.decode()} 파일 끝에 {available - needed}바이트가 남습니다")


# ═══════════════════════════════════════════
# ODFD
# ═══════════════════════════════════════════
def encode_ray_dataset(ds: RayDataset) -> bytes:
    ds.validate()
    header = _RAY_HEADER.pack(RAY_MAGIC, ds.version, AXIS_CODES[ds.axis], 0, ds.lattice_n,
                              ds.clamp, ds.scene_hash, ds.source_count)
    body = np.concatenate([ds.positions, ds.distances], axis=1).astype("<f4").tobytes()
    return header + body


def decode_ray_dataset(data: bytes) -> RayDataset:
    magic, version, axis, _, n, clamp, scene_hash, count = _check_header(data, _RAY_HEADER, RAY_MAGIC)
    axis_names = {v: k for k, v in AXIS_CODES.items()}
    if axis not in axis_names:
        raise DataIntegrityError(f"알 수 없는 축 규약 코드: {axis}")
    P = 2 * n + 1
    record_size = 4 * (3 + P)
    _check_records(data, _RAY_HEADER.size, count, record_size, RAY_MAGIC)
    rec = np.frombuffer(data, dtype="<f4", count=count * (3 + P), offset=_RAY_HEADER.size).reshape(count, 3 + P)
    ds = RayDataset(n, clamp, scene_hash, rec[:, :3].copy(), rec[:, 3:].copy(), version, axis_names[axis])
    ds.validate()
    return ds


def write_ray_dataset(ds: RayDataset, target: PathOrFile):
    _write_all(encode_ray_dataset(ds), target)


def read_ray_dataset(source: PathOrFile) -> RayDataset:
    return decode_ray_dataset(_read_all(source))


# ═══════════════════════════════════════════
# ODFV
# ═══════════════════════════════════════════
def encode_test_set(ts: VisibilityTestSet) -> bytes:
    if np.any(ts.labels > 1):
        raise DataIntegrityError("레이블은 0 또는 1이어야 합니다")
    header = _TEST_HEADER.pack(TEST_MAGIC, ts.version, 0, ts.scene_hash, len(ts))
    rec = np.empty(len(ts), dtype=_TEST_RECORD)
    rec["s"], rec["t"], rec["y"] = ts.sources, ts.targets, ts.labels
    return header + rec.tobytes()


def decode_test_set(data: bytes) -> VisibilityTestSet:
    magic, version, _, scene_hash, count = _check_header(data, _TEST_HEADER, TEST_MAGIC)
    _check_records(data, _TEST_HEADER.size, count, _TEST_RECORD.itemsize, TEST_MAGIC)
    rec = np.frombuffer(data, dtype=_TEST_RECORD, count=count, offset=_TEST_HEADER.size)
    if np.any(rec["y"] > 1):
        raise DataIntegrityError("레이블은 0 또는 1이어야 합니다")
    return VisibilityTestSet(scene_hash, rec["s"].copy(), rec["t"].copy(), rec["y"].copy(), version)


def write_test_set(ts: VisibilityTestSet, target: PathOrFile):
    _write_all(encode_test_set(ts), target)


def read_test_set(source: PathOrFile) -> VisibilityTestSet:
    return decode_test_set(_read_all(source))


# ═══════════════════════════════════════════
# ODFM
# ═══════════════════════════════════════════
def encode_model_file(mf: ModelFile) -> bytes:
    table, chunks, offset = [], [], 0
    for key in sorted(mf.tensors):
        arr = np.ascontiguousarray(mf.tensors[key], dtype="<f4")
        table.append({"name": key, "shape": list(arr.shape), "offset": offset})
        chunks.append(arr.tobytes())
        offset += arr.size
    meta = dict(mf.metadata)
    meta["tensors"] = table
    blob = json.dumps(meta, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")
    return _MODEL_HEADER.pack(MODEL_MAGIC, mf.version, 0, len(blob)) + blob + b"".join(chunks)


def decode_model_file(data: bytes) -> ModelFile:
    magic, version, _, meta_len = _check_header(data, _MODEL_HEADER, MODEL_MAGIC)
    start = _MODEL_HEADER.size
    if len(data) < start + meta_len:
        raise TruncatedFileError("ODFM 메타데이터가 잘렸습니다", offset=len(data))
    try:
        meta = json.loads(data[start:start + meta_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise DataIntegrityError(f"ODFM 메타데이터 해석 실패: {e}")

    body = start + meta_len
    tensors = {}
    for index, entry in enumerate(meta.get("tensors", [])):
        size = int(np.prod(entry["shape"], dtype=np.int64))
        begin = body + 4 * int(entry["offset"])
        if len(data) < begin + 4 * size:
            raise TruncatedFileError(f"ODFM 텐서 {entry['name']}가 잘렸습니다",
                                     offset=len(data), record_index=index)
        tensors[entry["name"]] = np.frombuffer(data, dtype="<f4", count=size, offset=begin).reshape(entry["shape"]).copy()
    total = sum(int(np.prod(e["shape"], dtype=np.int64)) for e in meta.get("tensors", []))
    if len(data) != body + 4 * total:
        raise DataIntegrityError(f"ODFM 파일 크기 불일치: {len(data)} != {body + 4 * total}")
    return ModelFile(metadata=meta, tensors=tensors, version=version)


def write_model_file(mf: ModelFile, target: PathOrFile):
    _write_all(encode_model_file(mf), target)


def read_model_file(source: PathOrFile) -> ModelFile:
    return decode_model_file(_read_all(source))


# ═══════════════════════════════════════════
# 헤더 덤프 (inspect)
# ═══════════════════════════════════════════
def inspect_bytes(data: bytes) -> Dict:
    """파일 종류를 매직으로 판별해 헤더 요약 dict 반환"""
    magic = data[:4]
    if magic == RAY_MAGIC:
        ds = decode_ray_dataset(data)
        return {
            "format": "ODFD", "version": ds.version, "axis": ds.axis, "lattice_n": ds.lattice_n,
            "directions": ds.direction_count, "clamp": ds.clamp, "scene_hash": ds.scene_hash.hex(),
            "sources": ds.source_count, "rays": ds.ray_count, "bytes": len(data),
        }
    if magic == TEST_MAGIC:
        ts = decode_test_set(data)
        return {
            "format": "ODFV", "version": ts.version, "scene_hash": ts.scene_hash.hex(),
            "count": len(ts), "visible_fraction": round(ts.visible_fraction, 6), "bytes": len(data),
        }
    if magic == MODEL_MAGIC:
        mf = decode_model_file(data)
        meta = mf.metadata
        partitions = meta.get("partitions", [])
        return {
            "format": "ODFM", "version": mf.version,
            "scene_hash": meta.get("atlas", {}).get("scene_hash"),
            "scheme": meta.get("scheme", {}).get("kind"),
            "partitions": len(partitions),
            "parameters": int(sum(a.size for a in mf.tensors.values())),
            "position_encoder": partitions[0]["position_encoder"]["kind"] if partitions else None,
            "direction_encoder": partitions[0]["direction_encoder"]["kind"] if partitions else None,
            "bytes": len(data),
        }
    raise MagicMismatchError(f"알 수 없는 파일 매직: {magic!r}")


def inspect_file(path: str) -> Dict:
    return {"path": str(path), **inspect_bytes(_read_all(path))}
