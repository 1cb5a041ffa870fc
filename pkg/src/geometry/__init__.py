from .mesh import (
    TriangleMesh, load_mesh, load_mesh_file, write_obj,
    make_box, make_icosphere, make_quad, merge_meshes,
)
from .bvh import Scene, Bvh, RayHit, build_bvh, raycast, oracle_visibility, DEFAULT_MAX_DISTANCE
from .scenes import SceneDescriptor, generate_scene, sample_source_positions, SCENE_KINDS
