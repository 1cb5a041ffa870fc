"""공용 픽스처: 작은 장면과 데이터셋"""
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.geometry.bvh import Scene
from src.geometry.mesh import make_box, make_quad, merge_meshes
from src.geometry.scenes import SceneDescriptor, generate_scene

GOLDEN_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "golden")


def ground_and_wall() -> Scene:
    """20×20 m 지면 + x=5 위치의 벽 (높이 4 m)"""
    ground = make_quad(np.array([[-10, -10, 0], [10, -10, 0], [10, 10, 0], [-10, 10, 0]], dtype=float))
    wall = make_box((5.0, -10.0, 0.0), (6.0, 10.0, 4.0))
    return Scene(merge_meshes([ground, wall]))


@pytest.fixture
def wall_scene() -> Scene:
    return ground_and_wall()


@pytest.fixture(scope="session")
def box_town() -> Scene:
    return Scene(generate_scene(SceneDescriptor(kind="box-town", seed=7)))
