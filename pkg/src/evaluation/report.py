"""리포트 출력 (CSV: pandas, SVG: matplotlib)

CSV 열 순서는 종류별로 고정이고, 정의되지 않은 값은 "n/a"로 쓴다.
같은 입력이면 CSV와 SVG 모두 바이트 단위로 같은 파일이 나온다.
"""
import logging
import os
from typing import Dict, List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from src.evaluation.metrics import METRICS_COLUMNS, UNDEFINED  # noqa: E402
from src.utils.errors import InputError  # noqa: E402

logger = logging.getLogger("odfsight")

REPORT_KINDS = ("metrics", "latency", "throughput", "memory", "table")
LATENCY_COLUMNS = [
    "label", "scene", "cold_median_us", "cold_std_us", "cold_samples",
    "warm_median_us", "warm_std_us", "warm_samples", "timer_resolution_ns", "coarse_timer", "protocol",
]
THROUGHPUT_COLUMNS = ["label", "batch_size", "k_tests_per_s"]
MEMORY_COLUMNS = [
    "scene", "partitions", "positions_per_partition", "direction_feature_bytes", "position_feature_bytes",
    "mlp_bytes", "model_bytes", "total_model_bytes", "raycast_bytes",
]
FLOAT_FORMAT = "%.6g"
SVG_SALT = "odfsight"


def _rows(reports: Sequence, kind: str) -> List[Dict]:
    if kind == "throughput":
        return [
            {"label": r.label, "batch_size": b, "k_tests_per_s": r.throughput[b]}
            for r in reports for b in sorted(r.throughput)
        ]
    return [r.to_row() if hasattr(r, "to_row") else dict(r) for r in reports]


def _columns(rows: List[Dict], kind: str) -> List[str]:
    base = {
        "metrics": METRICS_COLUMNS,
        "latency": LATENCY_COLUMNS,
        "throughput": THROUGHPUT_COLUMNS,
        "memory": MEMORY_COLUMNS,
        "table": [],
    }[kind]
    cols = list(base)
    for row in rows:
        for c in row:
            if c not in cols:
                cols.append(c)
    return cols


def to_frame(reports: Sequence, kind: str = "metrics") -> pd.DataFrame:
    if kind not in REPORT_KINDS:
        raise InputError(f"알 수 없는 리포트 종류: {kind!r}")
    rows = _rows(reports, kind)
    return pd.DataFrame(rows, columns=_columns(rows, kind))


def _write_csv(df: pd.DataFrame, path: str):
    df.to_csv(path, index=False, na_rep=UNDEFINED, float_format=FLOAT_FORMAT, lineterminator="\n")


def _write_svg(reports: Sequence, kind: str, path: str, title: Optional[str]):
    plt.rcParams["svg.hashsalt"] = SVG_SALT
    plt.rcParams["svg.fonttype"] = "none"
    fig, ax = plt.subplots(figsize=(7, 4.5))
    try:
        if kind == "throughput":
            for r in reports:
                sizes = sorted(r.throughput)
                (line,) = ax.plot(sizes, [r.throughput[b] for b in sizes], marker="o", label=r.label)
                line.set_gid(f"series-{r.label}")
            ax.set_xscale("log", base=2)
            ax.set_xlabel("batch size")
            ax.set_ylabel("k tests / s")
        elif kind == "metrics":
            labels = [r.label for r in reports]
            x = range(len(labels))
            width = 0.4
            acc = [r.accuracy or 0.0 for r in reports]
            f1 = [r.f1 or 0.0 for r in reports]
            ax.bar([i - width / 2 for i in x], acc, width, label="accuracy", gid="series-accuracy")
            ax.bar([i + width / 2 for i in x], f1, width, label="F1", gid="series-f1")
            ax.set_xticks(list(x))
            ax.set_xticklabels(labels, rotation=30, ha="right")
            ax.set_ylim(0.0, 1.0)
        elif kind == "latency":
            labels = [f"{r.label} {r.scene}".strip() for r in reports]
            x = range(len(labels))
            width = 0.4
            ax.bar([i - width / 2 for i in x], [r.cold_median for r in reports], width,
                   label="cold", gid="series-cold")
            ax.bar([i + width / 2 for i in x], [r.warm_median for r in reports], width,
                   label="warm", gid="series-warm")
            ax.set_xticks(list(x))
            ax.set_xticklabels(labels, rotation=30, ha="right")
            ax.set_ylabel("µs")
        else:
            raise InputError(f"SVG로 그릴 수 없는 리포트 종류: {kind!r}")
        if title:
            ax.set_title(title)
        if reports:
            ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)


def emit_report(reports: Sequence, path: str, fmt: str = "csv", kind: str = "metrics",
                title: Optional[str] = None) -> str:
    """리포트 목록 → CSV 또는 SVG 파일

    빈 목록이면 CSV는 헤더만 쓴다.
    """
    if fmt not in ("csv", "svg"):
        raise InputError(f"지원하지 않는 리포트 형식: {fmt!r}")
    if kind not in REPORT_KINDS:
        raise InputError(f"알 수 없는 리포트 종류: {kind!r}")
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)

    if fmt == "csv":
        _write_csv(to_frame(reports, kind), path)
    else:
        _write_svg(list(reports), kind, path, title)
    logger.info(f"[emit_report] {kind} {len(reports)}건 → {path}")
    return path
