from src.sampling.fibonacci import FibonacciLattice, fibonacci_directions, lattice_uniformity
from src.sampling.projection import SphericalUV, dir_to_uv, uv_to_dir, dirs_to_uv, uvs_to_dirs

__all__ = [
    "FibonacciLattice", "fibonacci_directions", "lattice_uniformity",
    "SphericalUV", "dir_to_uv", "uv_to_dir", "dirs_to_uv", "uvs_to_dirs",
]
