"""유틸리티 함수"""
import os
import yaml
import logging
import multiprocessing
from typing import Dict, Any, List, Optional

import psutil


def load_config(config_path: str = "config/config.yaml") -> Dict[str, Any]:
    with open(config_path, "r", encoding="utf-8") as f:
        return yaml.safe_load(f) or {}


def save_yaml(data: Dict[str, Any], path: str):
    """dict를 YAML로 저장 (키 순서 유지)"""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(data, f, sort_keys=False, allow_unicode=True)


def setup_logger(name: str = "odfsight", level: str = "INFO", log_file: str = None) -> logging.Logger:
    logger = logging.getLogger(name)
    logger.setLevel(getattr(logging, level.upper(), logging.INFO))
    if logger.handlers:
        return logger

    fmt = logging.Formatter("[%(asctime)s] %(levelname)s %(name)s: %(message)s", datefmt="%Y-%m-%d %H:%M:%S")

    ch = logging.StreamHandler()
    ch.setFormatter(fmt)
    logger.addHandler(ch)

    if log_file:
        os.makedirs(os.path.dirname(log_file) or ".", exist_ok=True)
        fh = logging.FileHandler(log_file, encoding="utf-8")
        fh.setFormatter(fmt)
        logger.addHandler(fh)

    return logger


def resolve_workers(requested: Optional[int] = None) -> int:
    """워커 수 결정: 인자 > ODF_WORKERS 환경변수 > 물리 코어 수"""
    if requested:
        return max(1, int(requested))
    env = os.getenv("ODF_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            logging.getLogger("odfsight").warning(f"ODF_WORKERS 값 무시: {env!r}")
    # 물리 코어 수를 모르는 플랫폼이면 논리 코어 수
    physical = psutil.cpu_count(logical=False)
    return max(1, physical or multiprocessing.cpu_count())


def chunk_ranges(total: int, chunk_size: int) -> List[range]:
    """[0, total)을 chunk_size 단위 구간으로 분할"""
    return [range(i, min(i + chunk_size, total)) for i in range(0, total, chunk_size)]
