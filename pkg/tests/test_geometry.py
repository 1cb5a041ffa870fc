"""장면 지오메트리 테스트: OBJ 로드, 절차적 장면, BVH 레이캐스트, 가시성 오라클"""
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.geometry.bvh import DEFAULT_MAX_DISTANCE, Scene, oracle_visibility, raycast
from src.geometry.mesh import TriangleMesh, load_mesh, make_box, make_icosphere, write_obj
from src.geometry.scenes import SCENE_KINDS, SceneDescriptor, generate_scene, sample_source_positions
from src.utils.errors import (
    ContractViolation, DegeneratePairError, DescriptorError, EmptySceneError, MeshParseError,
)

QUAD_OBJ = """# unit quad
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
vn 0 0 1
f 1 2 3 4
"""


def random_rays(scene: Scene, count: int, seed: int):
    rng = np.random.default_rng(seed)
    lo, hi = scene.bounds
    pad = 0.1 * (hi - lo) + 1.0
    O = rng.uniform(lo - pad, hi + pad, size=(count, 3))
    D = rng.normal(size=(count, 3))
    D /= np.linalg.norm(D, axis=1, keepdims=True)
    return O, D


class TestLoadMesh:
    """OBJ 서브셋 로더"""

    def test_polygon_is_fan_triangulated(self):
        mesh = load_mesh(QUAD_OBJ)
        assert mesh.triangle_count == 2
        assert mesh.triangles.tolist() == [[0, 1, 2], [0, 2, 3]]
        lo, hi = mesh.bounds
        assert lo.tolist() == [0, 0, 0] and hi.tolist() == [1, 1, 0]

    def test_slash_tokens_and_negative_indices(self):
        text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1/1 2/2/2 3//3\nv 0 0 1\nf -4 -3 -1\n"
        mesh = load_mesh(text)
        assert mesh.triangles.tolist() == [[0, 1, 2], [0, 1, 3]]

    def test_bytes_and_file_objects(self):
        import io
        assert load_mesh(QUAD_OBJ.encode()).triangle_count == 2
        assert load_mesh(io.BytesIO(QUAD_OBJ.encode())).triangle_count == 2

    def test_degenerate_triangles_are_dropped_and_counted(self):
        text = "v 0 0 0\nv 1 0 0\nv 2 0 0\nv 0 1 0\nf 1 2 3\nf 1 2 4\n"
        mesh = load_mesh(text)
        assert mesh.triangle_count == 1
        assert mesh.dropped == 1

    def test_only_degenerate_faces_is_empty_scene(self):
        with pytest.raises(EmptySceneError) as err:
            load_mesh("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 2\n")
        assert err.value.dropped == 1

    def test_allow_empty(self):
        mesh = load_mesh("# nothing here\n", allow_empty=True)
        assert mesh.triangle_count == 0

    @pytest.mark.parametrize("text, line", [
        ("v 0 0\n", 1),
        ("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n", 4),
        ("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2\n", 4),
        ("v 0 0 0\nv a 0 0\n", 2),
        ("v 0 0 0\nbogus 1 2 3\n", 2),
        ("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n", 4),
    ])
    def test_malformed_records_report_line(self, text, line):
        with pytest.raises(MeshParseError) as err:
            load_mesh(text)
        assert err.value.line == line

    def test_write_obj_reloads_identically(self):
        mesh = generate_scene(SceneDescriptor(kind="box-town", seed=3, boxes=4))
        text = write_obj(mesh, header="test scene")
        assert text.startswith("# test scene\n")
        again = load_mesh(text)
        assert np.array_equal(again.vertices, mesh.vertices)
        assert np.array_equal(again.triangles, mesh.triangles)
        assert again.content_hash() == mesh.content_hash()


class TestProceduralScenes:
    """절차적 장면 생성"""

    @pytest.mark.parametrize("kind", SCENE_KINDS)
    def test_deterministic(self, kind):
        a = generate_scene(SceneDescriptor(kind=kind, seed=11))
        b = generate_scene(SceneDescriptor(kind=kind, seed=11))
        assert a.content_hash() == b.content_hash()
        assert a.triangle_count > 0
        a.validate()

    def test_seed_changes_scene(self):
        a = generate_scene(SceneDescriptor(kind="box-town", seed=1))
        b = generate_scene(SceneDescriptor(kind="box-town", seed=2))
        assert a.content_hash() != b.content_hash()

    def test_box_town_triangle_count(self):
        mesh = generate_scene(SceneDescriptor(kind="box-town", boxes=5))
        assert mesh.triangle_count == 2 + 5 * 12

    def test_sparse_field_zero_density_is_ground_only(self):
        mesh = generate_scene(SceneDescriptor(kind="sparse-field", density=0.0))
        assert mesh.triangle_count == 2

    def test_multi_level_height(self):
        desc = SceneDescriptor(kind="multi-level", floors=3, floor_height=4.0)
        lo, hi = generate_scene(desc).bounds
        assert hi[2] - lo[2] == pytest.approx(12.0)
        assert desc.walkable_levels() == [0.0, 4.0, 8.0]

    @pytest.mark.parametrize("overrides", [
        {"kind": "castle"},
        {"extent": 0.0},
        {"boxes": -1},
        {"density": -1.0},
        {"floors": 0},
        {"box_footprint": (3.0, 1.0)},
    ])
    def test_invalid_descriptor(self, overrides):
        with pytest.raises(DescriptorError):
            generate_scene(SceneDescriptor(**overrides))

    def test_descriptor_dict_round_trip(self):
        desc = SceneDescriptor(kind="multi-level", seed=5, floors=2)
        assert SceneDescriptor.from_dict(desc.to_dict()) == desc

    def test_sources_are_outside_solids(self, box_town):
        sources = sample_source_positions(box_town, 50, seed=1, eye_height=1.7)
        assert sources.shape == (50, 3)
        assert np.allclose(sources[:, 2], 1.7)
        probe = np.eye(3)
        probe = np.concatenate([probe, -probe])
        for p in sources:
            assert not box_town.is_inside_solid(p, probe)


class TestRaycast:
    """BVH 레이캐스트"""

    def test_hit_wall(self, wall_scene):
        hit = raycast(wall_scene, (0.0, 0.0, 1.0), (1.0, 0.0, 0.0))
        assert hit.hit
        assert hit.distance == pytest.approx(5.0, abs=1e-12)
        assert hit.triangle_id is not None

    def test_hit_ground(self, wall_scene):
        hit = raycast(wall_scene, (0.0, 0.0, 1.0), (0.0, 0.0, -1.0))
        assert hit.distance == pytest.approx(1.0, abs=1e-12)

    def test_miss_records_max_distance(self, wall_scene):
        hit = raycast(wall_scene, (0.0, 0.0, 1.0), (0.0, 0.0, 1.0))
        assert not hit.hit
        assert hit.triangle_id is None
        assert hit.distance == DEFAULT_MAX_DISTANCE

    def test_hit_beyond_max_is_miss(self, wall_scene):
        hit = raycast(wall_scene, (0.0, 0.0, 1.0), (1.0, 0.0, 0.0), max_distance=4.0)
        assert not hit.hit
        assert hit.distance == 4.0

    def test_non_unit_direction(self, wall_scene):
        with pytest.raises(ContractViolation):
            raycast(wall_scene, (0.0, 0.0, 1.0), (2.0, 0.0, 0.0))

    def test_sphere_from_center(self):
        scene = Scene(make_icosphere(radius=3.0, subdivisions=4))
        _, D = random_rays(scene, 500, seed=0)
        dist, tri = scene.raycast_batch(np.zeros((500, 3)), D)
        assert np.all(tri >= 0)
        assert np.allclose(dist, 3.0, atol=5e-3 * 3.0)
        assert scene.is_inside_solid(np.zeros(3), D)

    def test_bvh_leaves_partition_triangles(self, box_town):
        bvh = box_town.bvh
        leaves = bvh.leaves()
        assert np.all(bvh.count[leaves] <= 4)
        members = np.concatenate([bvh.order[bvh.start[n]:bvh.start[n] + bvh.count[n]] for n in leaves])
        assert np.array_equal(np.sort(members), np.arange(box_town.triangle_count))
        v0, v1, v2 = box_town.mesh.corners()
        for n in leaves:
            ids = bvh.order[bvh.start[n]:bvh.start[n] + bvh.count[n]]
            pts = np.concatenate([v0[ids], v1[ids], v2[ids]])
            assert np.all(pts >= bvh.node_lo[n]) and np.all(pts <= bvh.node_hi[n])

    @pytest.mark.parametrize("kind", SCENE_KINDS)
    def test_bvh_matches_brute_force(self, kind):
        scene = Scene(generate_scene(SceneDescriptor(kind=kind, seed=7)))
        assert scene.triangle_count <= 5000
        O, D = random_rays(scene, 10_000, seed=42)
        dist, tri = scene.raycast_batch(O, D, 100.0)
        ref_dist, ref_tri = scene.raycast_brute_force(O, D, 100.0)
        assert np.array_equal(tri >= 0, ref_tri >= 0)
        assert np.allclose(dist, ref_dist, rtol=1e-9, atol=0.0)

    def test_memory_bytes_grows_with_scene(self):
        small = Scene(generate_scene(SceneDescriptor(kind="box-town", boxes=2)))
        large = Scene(generate_scene(SceneDescriptor(kind="box-town", boxes=40)))
        assert 0 < small.memory_bytes() < large.memory_bytes()

    def test_scene_hash_is_sha256(self, wall_scene):
        assert len(wall_scene.scene_hash) == 32


class TestOracleVisibility:
    """선분 가시성 오라클"""

    def test_blocked_and_clear(self, wall_scene):
        assert oracle_visibility(wall_scene, (0, 0, 1), (4, 0, 1))
        assert not oracle_visibility(wall_scene, (0, 0, 1), (10, 0, 1))
        # 벽 위로 넘어가는 선분
        assert oracle_visibility(wall_scene, (0, 0, 6), (10, 0, 6))

    def test_contact_counts_as_visible(self, wall_scene):
        assert oracle_visibility(wall_scene, (0, 0, 1), (5, 0, 1))

    def test_degenerate_pair(self, wall_scene):
        with pytest.raises(DegeneratePairError):
            oracle_visibility(wall_scene, (1, 1, 1), (1, 1, 1))

    def test_symmetric(self, box_town):
        rng = np.random.default_rng(3)
        lo, hi = box_town.bounds
        S = rng.uniform(lo, hi + np.array([0, 0, 2.0]), size=(2000, 3))
        T = rng.uniform(lo, hi + np.array([0, 0, 2.0]), size=(2000, 3))
        forward = box_town.oracle_visibility_batch(S, T)
        backward = box_town.oracle_visibility_batch(T, S)
        assert np.array_equal(forward, backward)
        assert 0 < forward.sum() < len(forward)

    def test_empty_scene_everything_visible(self):
        scene = Scene(TriangleMesh.empty())
        assert oracle_visibility(scene, (0, 0, 0), (1, 2, 3))
        assert scene.raycast((0, 0, 0), (1, 0, 0)).distance == DEFAULT_MAX_DISTANCE

    def test_closed_box_blocks_from_inside(self):
        scene = Scene(make_box((-1, -1, -1), (1, 1, 1)))
        assert not oracle_visibility(scene, (0, 0, 0), (3, 0, 0))
