"""단일 스레드 지연 시간 / 배치 처리량 측정

cold: 매 반복 전에 64 MiB 버퍼를 스트리밍으로 써서 마지막 레벨 캐시를
밀어낸 뒤 첫 호출 시간. warm: 같은 작업을 연달아 호출한 시간의 중앙값.
cold 절차는 측정 관례가 따로 없어 정한 대체 절차이고, 리포트에
protocol 문자열로 남긴다.
"""
import logging
import statistics
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from src.odf.model import predict_visibility_batch
from src.utils.errors import InputError

logger = logging.getLogger("odfsight")

EVICTION_BYTES = 64 * 1024 * 1024
COARSE_TIMER_NS = 1000
COLD_PROTOCOL = "cold = first call after a 64 MiB streaming write (eviction stand-in)"
WARM_PROTOCOL = "warm = median of back-to-back calls"

_eviction_buffer: Optional[np.ndarray] = None
_eviction_round = 0


def evict_caches(nbytes: int = EVICTION_BYTES):
    """캐시 밀어내기: 큰 버퍼 전체를 한 번 쓴다"""
    global _eviction_buffer, _eviction_round
    if _eviction_buffer is None or _eviction_buffer.nbytes != nbytes:
        _eviction_buffer = np.empty(nbytes, dtype=np.uint8)
    _eviction_round = (_eviction_round + 1) & 0xFF
    _eviction_buffer.fill(_eviction_round)


def timer_resolution_ns() -> float:
    """perf_counter_ns 해상도 (선언값과 관측 최소 간격 중 큰 값)"""
    declared = time.get_clock_info("perf_counter").resolution * 1e9
    observed = float("inf")
    for _ in range(200):
        t0 = time.perf_counter_ns()
        t1 = time.perf_counter_ns()
        while t1 == t0:
            t1 = time.perf_counter_ns()
        observed = min(observed, t1 - t0)
    return float(max(declared, observed))


@dataclass
class TimingReport:
    """지연 시간 표본 (µs)과 처리량 표"""
    label: str
    scene: str = ""
    cold_us: List[float] = field(default_factory=list)
    warm_us: List[float] = field(default_factory=list)
    throughput: Dict[int, float] = field(default_factory=dict)  # batch → k tests/s
    resolution_ns: float = 0.0
    protocol: str = f"{COLD_PROTOCOL}; {WARM_PROTOCOL}"

    @property
    def coarse_timer(self) -> bool:
        """타이머 해상도가 1 µs보다 거칠면 True (결과에 경고 표시)"""
        return self.resolution_ns > COARSE_TIMER_NS

    @property
    def cold_median(self) -> float:
        return statistics.median(self.cold_us) if self.cold_us else float("nan")

    @property
    def warm_median(self) -> float:
        return statistics.median(self.warm_us) if self.warm_us else float("nan")

    @staticmethod
    def _spread(samples: List[float]) -> float:
        return statistics.pstdev(samples) if len(samples) > 1 else 0.0

    @property
    def cold_std(self) -> float:
        return self._spread(self.cold_us)

    @property
    def warm_std(self) -> float:
        return self._spread(self.warm_us)

    def merge(self, other: "TimingReport") -> "TimingReport":
        self.cold_us.extend(other.cold_us)
        self.warm_us.extend(other.warm_us)
        self.throughput.update(other.throughput)
        self.resolution_ns = max(self.resolution_ns, other.resolution_ns)
        return self

    def to_row(self) -> Dict:
        return {
            "label": self.label, "scene": self.scene,
            "cold_median_us": self.cold_median, "cold_std_us": self.cold_std, "cold_samples": len(self.cold_us),
            "warm_median_us": self.warm_median, "warm_std_us": self.warm_std, "warm_samples": len(self.warm_us),
            "timer_resolution_ns": self.resolution_ns, "coarse_timer": self.coarse_timer,
            "protocol": self.protocol,
        }


def bench_latency(workload: Callable[[], object], mode: str = "warm", reps: int = 200,
                  label: str = "", scene: str = "", evict_bytes: int = EVICTION_BYTES) -> TimingReport:
    """작업 한 번 호출의 지연 시간 표본 수집

    Args:
        workload: 부작용 없고 결정적인 질의 클로저
        mode: "cold" | "warm" | "both"
    """
    if mode not in ("cold", "warm", "both"):
        raise InputError(f"알 수 없는 측정 모드: {mode!r}")
    if reps < 1:
        raise InputError("반복 횟수는 1 이상이어야 합니다")

    report = TimingReport(label=label, scene=scene, resolution_ns=timer_resolution_ns())
    if report.coarse_timer:
        logger.warning(f"[bench_latency] 타이머 해상도 {report.resolution_ns:.0f} ns > 1 µs: 결과 신뢰도 낮음")

    clock = time.perf_counter_ns
    if mode in ("cold", "both"):
        for _ in range(reps):
            evict_caches(evict_bytes)
            t0 = clock()
            workload()
            report.cold_us.append((clock() - t0) / 1000.0)

    if mode in ("warm", "both"):
        workload()
        for _ in range(reps):
            t0 = clock()
            workload()
            report.warm_us.append((clock() - t0) / 1000.0)

    logger.debug(f"[bench_latency] {label or 'workload'}: cold {report.cold_median:.2f} µs / "
                 f"warm {report.warm_median:.2f} µs ({reps}회)")
    return report


def bench_throughput(atlas, batch_sizes: Sequence[int], sources: np.ndarray, targets: np.ndarray,
                     min_seconds: float = 0.2, min_calls: int = 5, label: str = "",
                     bias: float = 0.0) -> TimingReport:
    """배치 크기별 처리량 (k tests/s). 벡터화 배치 추론, 단일 스레드

    Args:
        atlas: 측정할 OdfAtlas
        batch_sizes: 오름차순 배치 크기
        sources, targets: 질의 풀. 배치가 풀보다 크면 순환해서 채운다
    """
    sizes = [int(b) for b in batch_sizes]
    if not sizes or any(b < 1 for b in sizes):
        raise InputError("배치 크기는 1 이상이어야 합니다")
    if sizes != sorted(sizes):
        raise InputError(f"배치 크기는 오름차순이어야 합니다: {sizes}")

    batch_query = atlas_batch_query(atlas, sources, targets, bias)
    report = TimingReport(label=label, resolution_ns=timer_resolution_ns())
    clock = time.perf_counter_ns
    for b in sizes:
        batch_query(b)
        per_call = []
        started = clock()
        while len(per_call) < min_calls or (clock() - started) < min_seconds * 1e9:
            t0 = clock()
            batch_query(b)
            per_call.append(clock() - t0)
        seconds = statistics.median(per_call) / 1e9
        report.throughput[b] = b / seconds / 1000.0 if seconds > 0 else float("inf")
        logger.debug(f"[bench_throughput] {label} batch {b}: {report.throughput[b]:.1f} k tests/s")
    return report


def atlas_batch_query(atlas, sources: np.ndarray, targets: np.ndarray, bias: float = 0.0) -> Callable[[int], object]:
    """아틀라스 배치 질의 클로저 (질의 풀을 순환해 b개를 채운다)"""
    S = np.asarray(sources, dtype=np.float64).reshape(-1, 3)
    T = np.asarray(targets, dtype=np.float64).reshape(-1, 3)
    if len(S) == 0:
        raise InputError("처리량 측정용 질의가 없습니다")
    cache: Dict[int, tuple] = {}

    def run(b: int):
        if b not in cache:
            idx = np.arange(b) % len(S)
            cache[b] = (S[idx], T[idx])
        s, t = cache[b]
        return predict_visibility_batch(atlas, s, t, bias)

    return run
