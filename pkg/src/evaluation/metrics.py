"""분류 지표 (양성 클래스 = 보임)

정밀도/재현율의 분모가 0이면 0이 아니라 None(정의되지 않음)으로 남기고,
CSV에는 "n/a"로 쓴다.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from src.utils.errors import ContractViolation, InputError

logger = logging.getLogger("odfsight")

UNDEFINED = "n/a"

# 지표 CSV 열 순서 (고정)
METRICS_COLUMNS = [
    "label", "accuracy", "precision", "recall", "f1",
    "tp", "fp", "fn", "tn", "parameters", "time_mean_us", "time_std_us",
]


def _ratio(num: int, den: int) -> Optional[float]:
    return num / den if den else None


@dataclass
class MetricsReport:
    """정확도/정밀도/재현율/F1 + 혼동 행렬 + 모델 크기와 단일 질의 시간"""
    label: str
    tp: Optional[int]
    fp: Optional[int]
    fn: Optional[int]
    tn: Optional[int]
    accuracy: Optional[float]
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]
    parameters: Optional[int] = None
    time_mean_us: Optional[float] = None
    time_std_us: Optional[float] = None

    @property
    def has_counts(self) -> bool:
        return None not in (self.tp, self.fp, self.fn, self.tn)

    @property
    def total(self) -> int:
        return int(self.tp + self.fp + self.fn + self.tn) if self.has_counts else 0

    def f1_from_counts(self) -> Optional[float]:
        """2TP / (2TP + FP + FN)"""
        if not self.has_counts:
            return None
        return _ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn)

    def f1_from_rates(self) -> Optional[float]:
        """정밀도와 재현율의 조화 평균"""
        if self.precision is None or self.recall is None:
            return None
        s = self.precision + self.recall
        return 2 * self.precision * self.recall / s if s > 0 else 0.0

    def to_row(self) -> Dict:
        return {c: getattr(self, c) for c in METRICS_COLUMNS}


def classify_metrics(predictions, labels, label: str = "", parameters: Optional[int] = None) -> MetricsReport:
    """예측/정답 불리언 배열 → MetricsReport"""
    p = np.asarray(predictions).astype(bool).reshape(-1)
    y = np.asarray(labels).astype(bool).reshape(-1)
    if len(p) != len(y):
        raise ContractViolation(f"예측/정답 길이 불일치: {len(p)} != {len(y)}")
    if len(p) == 0:
        raise InputError("평가할 테스트 케이스가 없습니다")

    tp = int(np.sum(p & y))
    fp = int(np.sum(p & ~y))
    fn = int(np.sum(~p & y))
    tn = int(np.sum(~p & ~y))
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    report = MetricsReport(
        label=label, tp=tp, fp=fp, fn=fn, tn=tn,
        accuracy=(tp + tn) / len(p), precision=precision, recall=recall, f1=None,
        parameters=parameters,
    )
    if precision is not None and recall is not None:
        report.f1 = report.f1_from_counts()
    return report


def _optional(value, cast):
    if value is None or (isinstance(value, float) and np.isnan(value)):
        return None
    if isinstance(value, str) and value.strip() in ("", UNDEFINED):
        return None
    return cast(value)


def read_metrics_csv(path) -> List[MetricsReport]:
    """emit_report가 쓴 지표 CSV (또는 같은 열의 참고 표)를 다시 읽는다"""
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    missing = [c for c in ("label", "accuracy", "precision", "recall", "f1") if c not in df.columns]
    if missing:
        raise InputError(f"지표 CSV에 필요한 열이 없습니다: {missing}")

    reports = []
    for row in df.to_dict(orient="records"):
        get = lambda c: row.get(c, "")
        reports.append(MetricsReport(
            label=get("label"),
            tp=_optional(get("tp"), int), fp=_optional(get("fp"), int),
            fn=_optional(get("fn"), int), tn=_optional(get("tn"), int),
            accuracy=_optional(get("accuracy"), float), precision=_optional(get("precision"), float),
            recall=_optional(get("recall"), float), f1=_optional(get("f1"), float),
            parameters=_optional(get("parameters"), int),
            time_mean_us=_optional(get("time_mean_us"), float),
            time_std_us=_optional(get("time_std_us"), float),
        ))
    logger.debug(f"[read_metrics_csv] {path}: {len(reports)}행")
    return reports
