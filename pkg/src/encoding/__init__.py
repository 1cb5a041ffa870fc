"""입력 인코더 패키지와 설정 기반 팩토리"""
from typing import Dict

from src.encoding.base import Encoder, FixedContext, Footprint
from src.encoding.positional import (
    PeConfig, FfmConfig, pe_encode, ffm_encode,
    PositionalEncoder, FourierFeatureEncoder, IdentityEncoder,
)
from src.encoding.spherical_harmonics import ShConfig, sh_encode, sh_basis, SphericalHarmonicsEncoder
from src.encoding.grid2d import MultiResGrid2D, Grid2DEncoder, grid2d_encode, grid_memory_bytes, level_resolutions
from src.encoding.hash3d import HashGrid3D, HashGrid3DEncoder, hash3d_encode, HASH_PRIMES
from src.utils.errors import InputError

ENCODERS = {
    "none": IdentityEncoder,
    "pe": PositionalEncoder,
    "ffm": FourierFeatureEncoder,
    "sh": SphericalHarmonicsEncoder,
    "grid2d": Grid2DEncoder,
    "hash3d": HashGrid3DEncoder,
}

# to_config()에는 있지만 생성자 인자가 아닌 기록용 키
_DERIVED_KEYS = {"kind", "resolutions", "primes"}


def build_encoder(config: Dict) -> Encoder:
    """{"kind": ..., 파라미터...} → 인코더"""
    config = dict(config or {"kind": "none"})
    kind = config.get("kind", "none")
    if kind not in ENCODERS:
        raise InputError(f"알 수 없는 인코더: {kind!r} (사용 가능: {', '.join(ENCODERS)})")
    kwargs = {k: v for k, v in config.items() if k not in _DERIVED_KEYS}
    return ENCODERS[kind](**kwargs)


__all__ = [
    "Encoder", "FixedContext", "Footprint", "build_encoder", "ENCODERS",
    "PeConfig", "FfmConfig", "ShConfig", "pe_encode", "ffm_encode", "sh_encode", "sh_basis",
    "PositionalEncoder", "FourierFeatureEncoder", "IdentityEncoder", "SphericalHarmonicsEncoder",
    "MultiResGrid2D", "Grid2DEncoder", "grid2d_encode", "grid_memory_bytes", "level_resolutions",
    "HashGrid3D", "HashGrid3DEncoder", "hash3d_encode", "HASH_PRIMES",
]
