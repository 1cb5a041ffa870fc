from src.evaluation.metrics import MetricsReport, classify_metrics, read_metrics_csv, METRICS_COLUMNS
from src.evaluation.timing import TimingReport, bench_latency, bench_throughput, evict_caches, timer_resolution_ns
from src.evaluation.memory import MemoryReport, estimate_memory, depth_map_bytes, format_bytes
from src.evaluation.report import emit_report, to_frame, REPORT_KINDS
from src.evaluation.predictors import VisibilityPredictor, OraclePredictor, AtlasPredictor, evaluate_predictor

__all__ = [
    "MetricsReport", "classify_metrics", "read_metrics_csv", "METRICS_COLUMNS",
    "TimingReport", "bench_latency", "bench_throughput", "evict_caches", "timer_resolution_ns",
    "MemoryReport", "estimate_memory", "depth_map_bytes", "format_bytes",
    "emit_report", "to_frame", "REPORT_KINDS",
    "VisibilityPredictor", "OraclePredictor", "AtlasPredictor", "evaluate_predictor",
]
