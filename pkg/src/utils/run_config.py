"""실행 설정 (config.yaml + CLI 플래그 → 해석된 설정)

모든 명령은 출력 옆에 run_config.yaml로 해석된 설정을 남긴다.
"""
import copy
import os
from dataclasses import dataclass, field, asdict
from typing import Any, Dict, List, Optional

from src.utils.helpers import save_yaml

RUN_CONFIG_FILE = "run_config.yaml"


def _scene_defaults() -> Dict[str, Any]:
    return {"path": None, "kind": "box-town", "seed": 7}


def _training_defaults() -> Dict[str, Any]:
    return {
        "position_encoder": {"kind": "pe", "n_freq": 6},
        "direction_encoder": {"kind": "grid2d", "levels": 16, "features": 2, "projection": "long-lat"},
        "width": 128, "depth": 4, "epochs": 30, "batch_size": 4096,
        "lr": 1e-3, "beta1": 0.9, "beta2": 0.999, "eps": 1e-8, "weight_decay": 1e-5, "seed": 0,
    }


def _merge(base: Dict, override: Optional[Dict]) -> Dict:
    """중첩 dict 병합. 인코더 설정(*_encoder)은 통째로 교체한다"""
    out = copy.deepcopy(base)
    for k, v in (override or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and not k.endswith("_encoder"):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class RunConfig:
    """해석된 실행 설정"""
    command: str = ""
    scene: Dict[str, Any] = field(default_factory=_scene_defaults)  # path(OBJ) 또는 절차적 디스크립터
    lattice_n: int = 2000
    clamp: float = 100.0
    sources: Dict[str, Any] = field(default_factory=lambda: {"count": 200, "seed": 0, "eye_height": 1.7})
    partitioning: Dict[str, Any] = field(default_factory=lambda: {"kind": "grid2d", "cells": [8, 8], "cell_size": None})
    training: Dict[str, Any] = field(default_factory=_training_defaults)
    evaluation: Dict[str, Any] = field(default_factory=lambda: {
        "targets_per_source": 100, "seed": 0, "bias": 0.0, "timing_samples": 200,
    })
    bench: Dict[str, Any] = field(default_factory=lambda: {
        "scenes": ["box-town", "sparse-field", "multi-level"],
        "mlp_sizes": [[128, 4], [128, 2], [64, 2], [32, 2]],
        "batch_sizes": [1, 4, 16, 64, 256, 1024, 4096],
        "reps": 1000, "queries": 256, "cell_size": 16.0,
        "depth_map_resolutions": [[256, 128], [512, 256]],
    })
    outputs: Dict[str, Optional[str]] = field(default_factory=lambda: {
        "dir": "runs/latest", "dataset": None, "test_set": None, "model": None,
    })
    workers: Optional[int] = None

    # ───────────────────────────────────────
    # 직렬화
    # ───────────────────────────────────────
    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> "RunConfig":
        """YAML 섹션 dict → RunConfig. 알 수 없는 키는 무시하고 중첩 dict는 기본값 위에 병합"""
        data = data or {}
        base = cls()
        values = {}
        for name in cls.__dataclass_fields__:
            if name not in data:
                continue
            default = getattr(base, name)
            if isinstance(default, dict):
                if data[name] is not None:
                    values[name] = _merge(default, data[name])
            else:
                values[name] = data[name]
        sampling = data.get("sampling") or {}
        if "lattice_n" in sampling:
            values.setdefault("lattice_n", sampling["lattice_n"])
        if "clamp" in sampling:
            values.setdefault("clamp", sampling["clamp"])
        return cls(**values)

    @classmethod
    def from_yaml_config(cls, config: Dict[str, Any]) -> "RunConfig":
        """config.yaml 전체 (database/logging 섹션 포함)에서 실행 관련 섹션만 취한다"""
        return cls.from_dict({k: v for k, v in (config or {}).items() if k not in ("database", "logging")})

    def override(self, **flags) -> "RunConfig":
        """CLI 플래그 덮어쓰기. 값이 None인 플래그는 무시. 점 표기('training.epochs') 지원"""
        data = self.to_dict()
        for key, value in flags.items():
            if value is None:
                continue
            node = data
            parts = key.split(".")
            for p in parts[:-1]:
                node = node.setdefault(p, {})
            node[parts[-1]] = value
        return RunConfig.from_dict(data)

    def output_dir(self) -> str:
        return self.outputs.get("dir") or "."

    def output_path(self, key: str, default_name: str) -> str:
        return self.outputs.get(key) or os.path.join(self.output_dir(), default_name)

    def save(self, directory: Optional[str] = None) -> str:
        """해석된 설정을 directory/run_config.yaml로 저장"""
        path = os.path.join(directory or self.output_dir(), RUN_CONFIG_FILE)
        save_yaml(self.to_dict(), path)
        return path

    @property
    def mlp_sizes(self) -> List[tuple]:
        return [tuple(int(x) for x in s) for s in self.bench.get("mlp_sizes", [])]
