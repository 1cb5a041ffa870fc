"""바이너리 포맷 테스트: ODFD / ODFV / ODFM 골든 파일과 손상 처리"""
import os
import struct
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.storage.formats import (
    ModelFile, RayDataset, VisibilityTestSet, decode_model_file, decode_ray_dataset, decode_test_set,
    encode_model_file, encode_ray_dataset, encode_test_set, inspect_bytes, inspect_file,
    read_ray_dataset, read_test_set, write_ray_dataset, write_test_set,
)
from src.utils.errors import (
    DataIntegrityError, MagicMismatchError, TruncatedFileError, VersionMismatchError,
)
from tests.conftest import GOLDEN_DIR

TINY_ODFD = os.path.join(GOLDEN_DIR, "tiny.odfd")
TINY_ODFV = os.path.join(GOLDEN_DIR, "tiny.odfv")
GOLDEN_HASH = b"\xab" * 32


def golden(path: str) -> bytes:
    with open(path, "rb") as f:
        return f.read()


def patched(data: bytes, offset: int, value: bytes) -> bytes:
    return data[:offset] + value + data[offset + len(value):]


class TestRayDatasetFormat:
    """ODFD 광선 데이터셋"""

    def setup_method(self):
        self.data = golden(TINY_ODFD)

    def test_golden_contents(self):
        ds = read_ray_dataset(TINY_ODFD)
        assert len(self.data) == 100
        assert ds.lattice_n == 1 and ds.direction_count == 3
        assert ds.clamp == 100.0
        assert ds.scene_hash == GOLDEN_HASH
        assert ds.axis == "z-up"
        assert ds.positions.tolist() == [[1, 2, 3], [0, 0, 1]]
        assert ds.distances.tolist() == [[10, 100, 0.5], [2, 3, 10]]
        assert ds.ray_count == 6

    def test_reencode_is_bitwise_identical(self):
        assert encode_ray_dataset(decode_ray_dataset(self.data)) == self.data

    def test_truncated_record(self):
        with pytest.raises(TruncatedFileError) as err:
            decode_ray_dataset(self.data[:-1])
        assert err.value.offset == 76
        assert err.value.record_index == 1

    def test_truncated_header(self):
        with pytest.raises(TruncatedFileError) as err:
            decode_ray_dataset(self.data[:20])
        assert err.value.offset == 20

    def test_magic_mismatch(self):
        with pytest.raises(MagicMismatchError):
            decode_ray_dataset(patched(self.data, 0, b"ODFX"))

    def test_version_mismatch(self):
        with pytest.raises(VersionMismatchError):
            decode_ray_dataset(patched(self.data, 4, struct.pack("<H", 2)))

    def test_unknown_axis(self):
        with pytest.raises(DataIntegrityError):
            decode_ray_dataset(patched(self.data, 6, b"\x05"))

    def test_trailing_bytes(self):
        with pytest.raises(DataIntegrityError) as err:
            decode_ray_dataset(self.data + b"\x00")
        assert not isinstance(err.value, TruncatedFileError)

    @pytest.mark.parametrize("value", [0.0, -1.0, 100.5, float("nan")])
    def test_distance_out_of_range(self, value):
        # 레코드 0의 첫 거리: 헤더 52 + 위치 12
        with pytest.raises(DataIntegrityError):
            decode_ray_dataset(patched(self.data, 64, struct.pack("<f", value)))

    def test_write_creates_directories(self, tmp_path):
        ds = read_ray_dataset(TINY_ODFD)
        path = tmp_path / "nested" / "out.odfd"
        write_ray_dataset(ds, str(path))
        assert path.read_bytes() == self.data

    def test_subset(self):
        ds = read_ray_dataset(TINY_ODFD).subset([1])
        assert ds.source_count == 1
        assert ds.distances.tolist() == [[2, 3, 10]]

    def test_record_width_checked(self):
        ds = RayDataset(2, 100.0, GOLDEN_HASH, np.zeros((1, 3)), np.ones((1, 3)))
        with pytest.raises(DataIntegrityError):
            ds.validate()


class TestTestSetFormat:
    """ODFV 가시성 테스트 세트"""

    def setup_method(self):
        self.data = golden(TINY_ODFV)

    def test_golden_contents(self):
        ts = read_test_set(TINY_ODFV)
        assert len(self.data) == 94
        assert ts.scene_hash == GOLDEN_HASH
        assert ts.sources.tolist() == [[0, 0, 1], [1, 2, 3]]
        assert ts.targets.tolist() == [[10, 0, 1], [0, 0, 1]]
        assert ts.labels.tolist() == [1, 0]
        assert ts.visible_fraction == 0.5

    def test_reencode_is_bitwise_identical(self):
        assert encode_test_set(decode_test_set(self.data)) == self.data

    def test_truncated(self):
        with pytest.raises(TruncatedFileError) as err:
            decode_test_set(self.data[:-3])
        assert err.value.record_index == 1
        assert err.value.offset == 44 + 25

    def test_label_out_of_range(self):
        with pytest.raises(DataIntegrityError):
            decode_test_set(patched(self.data, 44 + 24, b"\x02"))
        ts = VisibilityTestSet(GOLDEN_HASH, np.zeros((1, 3)), np.ones((1, 3)), np.array([3]))
        with pytest.raises(DataIntegrityError):
            encode_test_set(ts)

    def test_empty_set(self, tmp_path):
        ts = VisibilityTestSet(GOLDEN_HASH, np.zeros((0, 3)), np.zeros((0, 3)), np.zeros(0))
        path = tmp_path / "empty.odfv"
        write_test_set(ts, str(path))
        assert path.stat().st_size == 44
        assert len(read_test_set(str(path))) == 0


class TestModelFileFormat:
    """ODFM 모델 파일"""

    def setup_method(self):
        self.mf = ModelFile(
            metadata={"atlas": {"scene_hash": "ab" * 32}, "scheme": {"kind": "grid2d"}, "partitions": []},
            tensors={"p0/mlp.W0": np.arange(6, dtype=float).reshape(2, 3), "p0/mlp.b0": np.array([0.5, -0.5])},
        )
        self.data = encode_model_file(self.mf)

    def test_round_trip(self):
        mf = decode_model_file(self.data)
        assert mf.tensors["p0/mlp.W0"].tolist() == [[0, 1, 2], [3, 4, 5]]
        assert mf.tensors["p0/mlp.b0"].dtype == np.float32
        assert [t["name"] for t in mf.metadata["tensors"]] == ["p0/mlp.W0", "p0/mlp.b0"]
        assert encode_model_file(ModelFile(mf.metadata, mf.tensors)) == self.data

    def test_sorted_json_metadata(self):
        meta_len = struct.unpack_from("<I", self.data, 8)[0]
        text = self.data[12:12 + meta_len].decode("utf-8")
        assert text.index('"atlas"') < text.index('"partitions"') < text.index('"scheme"')

    def test_truncated_tensor(self):
        with pytest.raises(TruncatedFileError) as err:
            decode_model_file(self.data[:-4])
        assert err.value.record_index == 1

    def test_truncated_metadata(self):
        with pytest.raises(TruncatedFileError):
            decode_model_file(self.data[:14])

    def test_corrupt_metadata(self):
        meta_len = struct.unpack_from("<I", self.data, 8)[0]
        with pytest.raises(DataIntegrityError):
            decode_model_file(patched(self.data, 12, b"\xff" * min(4, meta_len)))


class TestInspect:
    """헤더 덤프"""

    def test_ray_dataset(self):
        info = inspect_file(TINY_ODFD)
        assert info["format"] == "ODFD"
        assert info["sources"] == 2 and info["rays"] == 6 and info["directions"] == 3
        assert info["scene_hash"] == "ab" * 32
        assert info["path"] == TINY_ODFD

    def test_test_set(self):
        info = inspect_file(TINY_ODFV)
        assert info == {**info, "format": "ODFV", "count": 2, "visible_fraction": 0.5, "bytes": 94}

    def test_model_file(self):
        info = inspect_bytes(encode_model_file(ModelFile({"partitions": []}, {"x": np.zeros(3)})))
        assert info["format"] == "ODFM"
        assert info["parameters"] == 3 and info["partitions"] == 0

    def test_unknown_magic(self):
        with pytest.raises(MagicMismatchError):
            inspect_bytes(b"PK\x03\x04 zip archive")

    def test_corrupt_file_raises_integrity_error(self):
        with pytest.raises(DataIntegrityError):
            inspect_bytes(golden(TINY_ODFD)[:60])
