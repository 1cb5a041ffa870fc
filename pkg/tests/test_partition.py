"""파티셔닝 테스트: grid2d / voxel3d 격자, 경계 규칙"""
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.odf.partition import PartitionScheme, build_scheme, partition_of
from src.utils.errors import InputError, NoCoverageError

CORNERS = np.array([[0, 0, 0], [10, 0, 0], [0, 10, 0], [10, 10, 0]], dtype=float)


class TestGrid2D:
    """수평 격자"""

    def setup_method(self):
        self.scheme = build_scheme(CORNERS, kind="grid2d", cells=(2, 2))

    def test_layout(self):
        assert self.scheme.dims == (2, 2, 1)
        assert self.scheme.cell_size[:2] == (5.0, 5.0)
        assert self.scheme.active_cells == (0, 1, 2, 3)
        assert self.scheme.partition_count == 4

    def test_corners(self):
        assert self.scheme.assign(CORNERS).tolist() == [0, 1, 2, 3]

    def test_shared_face_goes_to_upper_cell(self):
        assert partition_of(self.scheme, (5.0, 0.0, 0.0)) == 1
        assert partition_of(self.scheme, (4.999, 0.0, 0.0)) == 0
        assert partition_of(self.scheme, (0.0, 5.0, 0.0)) == 2

    def test_z_is_ignored(self):
        assert partition_of(self.scheme, (5.0, 5.0, 100.0)) == 3
        assert partition_of(self.scheme, (1.0, 1.0, -40.0)) == 0

    def test_outer_max_edge_included(self):
        assert partition_of(self.scheme, (10.0, 10.0, 0.0)) == 3
        assert partition_of(self.scheme, (10.0, 2.0, 0.0)) == 1

    def test_outside_grid(self):
        with pytest.raises(NoCoverageError) as err:
            partition_of(self.scheme, (10.5, 0.0, 0.0))
        assert np.allclose(err.value.point, [10.5, 0.0, 0.0])
        with pytest.raises(NoCoverageError):
            self.scheme.assign(np.array([[1.0, 1.0, 0.0], [-0.5, 1.0, 0.0]]))

    def test_assign_matches_partition_of(self):
        rng = np.random.default_rng(0)
        P = rng.uniform(0.0, 10.0, size=(500, 3))
        ids = self.scheme.assign(P)
        assert ids.tolist() == [partition_of(self.scheme, p) for p in P]

    def test_every_source_in_exactly_its_cell_bounds(self):
        rng = np.random.default_rng(1)
        P = rng.uniform(0.0, 10.0, size=(200, 3))
        for p, cid in zip(P, self.scheme.assign(P)):
            lo, hi = self.scheme.cell_bounds(cid)
            assert np.all(p[:2] >= lo[:2]) and np.all(p[:2] <= hi[:2])

    def test_inactive_cell_has_no_coverage(self):
        scheme = build_scheme(np.array([[0, 0, 0], [10, 10, 0]], dtype=float), cells=(2, 2))
        assert scheme.active_cells == (0, 3)
        assert not scheme.is_active(1)
        with pytest.raises(NoCoverageError):
            partition_of(scheme, (10.0, 0.0, 0.0))

    def test_cell_size(self):
        scheme = build_scheme(CORNERS, cell_size=4.0)
        assert scheme.dims == (3, 3, 1)
        assert partition_of(scheme, (9.0, 9.0, 0.0)) == 8

    def test_single_position(self):
        scheme = build_scheme(np.array([[3.0, 4.0, 1.7]]), cells=(4, 4))
        assert scheme.dims == (1, 1, 1)
        assert partition_of(scheme, (3.0, 4.0, 1.7)) == 0

    def test_dict_round_trip(self):
        again = PartitionScheme.from_dict(self.scheme.to_dict())
        assert again == self.scheme


class TestVoxel3D:
    """3D 복셀 격자"""

    def setup_method(self):
        cube = np.array([[x, y, z] for z in (0, 10) for y in (0, 10) for x in (0, 10)], dtype=float)
        self.scheme = build_scheme(cube, kind="voxel3d", cells=2)

    def test_layout(self):
        assert self.scheme.dims == (2, 2, 2)
        assert self.scheme.active_cells == tuple(range(8))

    def test_id_order(self):
        assert partition_of(self.scheme, (1.0, 1.0, 1.0)) == 0
        assert partition_of(self.scheme, (6.0, 1.0, 1.0)) == 1
        assert partition_of(self.scheme, (1.0, 6.0, 1.0)) == 2
        assert partition_of(self.scheme, (1.0, 1.0, 6.0)) == 4
        assert partition_of(self.scheme, (5.0, 5.0, 5.0)) == 7

    def test_z_matters(self):
        with pytest.raises(NoCoverageError):
            partition_of(self.scheme, (5.0, 5.0, 100.0))


class TestBuildSchemeErrors:
    """잘못된 파티션 요청"""

    def test_empty_positions(self):
        with pytest.raises(InputError):
            build_scheme(np.zeros((0, 3)), cells=(2, 2))

    @pytest.mark.parametrize("kwargs", [{}, {"cells": 2, "cell_size": 5.0}])
    def test_cells_xor_cell_size(self, kwargs):
        with pytest.raises(InputError):
            build_scheme(CORNERS, **kwargs)

    @pytest.mark.parametrize("kwargs", [{"cells": 0}, {"cell_size": -1.0}, {"cell_size": 0.0}])
    def test_non_positive(self, kwargs):
        with pytest.raises(InputError):
            build_scheme(CORNERS, **kwargs)

    def test_unknown_kind(self):
        with pytest.raises(InputError):
            build_scheme(CORNERS, kind="octree", cells=2)
