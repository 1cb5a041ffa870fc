"""방향 ↔ UV 평면 투영

- long-lat (등장방형): u = (lon+π)/2π, v = (lat+π/2)/π
- mercator: u 동일, v = ln(tan(π/4 + lat_c/2)) 를 [0,1]로 정규화,
  lat_c = clamp(lat, ±85.05113°)

u는 [0,1)에서 감기고(wrap) v는 [0,1]로 잘린다(clamp).
"""
from dataclasses import dataclass

import numpy as np

from src.utils.errors import ContractViolation

PROJECTIONS = ("long-lat", "mercator")
MERCATOR_LAT_LIMIT = np.deg2rad(85.05113)
MERCATOR_Y_LIMIT = float(np.log(np.tan(np.pi / 4 + MERCATOR_LAT_LIMIT / 2)))
UNIT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SphericalUV:
    u: float
    v: float
    projection: str = "long-lat"


def check_projection(projection: str):
    if projection not in PROJECTIONS:
        raise ContractViolation(f"알 수 없는 투영: {projection!r} (사용 가능: {', '.join(PROJECTIONS)})")


def check_unit(directions: np.ndarray):
    norms = np.linalg.norm(directions, axis=-1)
    if np.any(np.abs(norms - 1.0) > UNIT_TOLERANCE):
        raise ContractViolation("방향 벡터는 단위 길이여야 합니다 (|d| = 1 ± 1e-9)")


def _wrap_u(u: np.ndarray) -> np.ndarray:
    u = np.mod(u, 1.0)
    return np.where(u >= 1.0, 0.0, u)


def dirs_to_uv(directions: np.ndarray, projection: str = "long-lat", check: bool = True) -> np.ndarray:
    """(N, 3) 단위 방향 → (N, 2) uv"""
    check_projection(projection)
    D = np.asarray(directions, dtype=np.float64).reshape(-1, 3)
    if check:
        check_unit(D)
    x, y, z = D[:, 0], D[:, 1], D[:, 2]
    lon = np.arctan2(y, x)
    lat = np.arctan2(z, np.hypot(x, y))
    u = _wrap_u((lon + np.pi) / (2.0 * np.pi))

    if projection == "long-lat":
        v = (lat + np.pi / 2.0) / np.pi
    else:
        lat_c = np.clip(lat, -MERCATOR_LAT_LIMIT, MERCATOR_LAT_LIMIT)
        my = np.log(np.tan(np.pi / 4.0 + lat_c / 2.0))
        v = (my + MERCATOR_Y_LIMIT) / (2.0 * MERCATOR_Y_LIMIT)
    return np.stack([u, np.clip(v, 0.0, 1.0)], axis=1)


def uvs_to_dirs(uv: np.ndarray, projection: str = "long-lat") -> np.ndarray:
    """(N, 2) uv → (N, 3) 단위 방향"""
    check_projection(projection)
    UV = np.asarray(uv, dtype=np.float64).reshape(-1, 2)
    lon = UV[:, 0] * 2.0 * np.pi - np.pi
    v = np.clip(UV[:, 1], 0.0, 1.0)
    if projection == "long-lat":
        lat = v * np.pi - np.pi / 2.0
    else:
        my = v * 2.0 * MERCATOR_Y_LIMIT - MERCATOR_Y_LIMIT
        lat = 2.0 * np.arctan(np.exp(my)) - np.pi / 2.0
    cl = np.cos(lat)
    D = np.stack([cl * np.cos(lon), cl * np.sin(lon), np.sin(lat)], axis=1)
    return D / np.linalg.norm(D, axis=1, keepdims=True)


def dir_to_uv(d, projection: str = "long-lat") -> SphericalUV:
    u, v = dirs_to_uv(np.asarray(d, dtype=np.float64)[None], projection)[0]
    return SphericalUV(u=float(u), v=float(v), projection=projection)


def uv_to_dir(uv: SphericalUV) -> np.ndarray:
    return uvs_to_dirs(np.array([[uv.u, uv.v]]), uv.projection)[0]
