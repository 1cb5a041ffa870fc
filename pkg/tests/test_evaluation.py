"""평가 테스트: 분류 지표, 리포트 출력, 메모리 산정, 시간 측정"""
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.evaluation import (
    AtlasPredictor, MetricsReport, OraclePredictor, TimingReport, bench_latency, bench_throughput,
    classify_metrics, depth_map_bytes, emit_report, estimate_memory, evaluate_predictor,
    format_bytes, read_metrics_csv, to_frame,
)
from src.evaluation.experiments import (
    ENCODER_ROWS, build_untrained_atlas, config_from_atlas, holdout_mask, latency_ratio,
    memory_comparison, model_bytes_for,
)
from src.encoding import grid_memory_bytes
from src.odf.partition import build_scheme
from src.odf.trainer import TrainingConfig
from src.storage.formats import VisibilityTestSet
from src.utils.errors import ContractViolation, InputError

REFERENCE_CSV = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
                             "data", "reference_metrics.csv")
SOURCES = np.array([[0, 0, 1.7], [10, 0, 1.7], [0, 10, 1.7], [10, 10, 1.7]], dtype=float)
SMALL = TrainingConfig(position_encoder={"kind": "pe", "n_freq": 2},
                       direction_encoder={"kind": "sh", "degree": 2}, width=16, depth=2)


class TestClassifyMetrics:
    """분류 지표"""

    def test_counts(self):
        pred = [1, 1, 0, 0, 1, 0]
        y = [1, 0, 1, 0, 1, 0]
        r = classify_metrics(pred, y, label="x", parameters=10)
        assert (r.tp, r.fp, r.fn, r.tn) == (2, 1, 1, 2)
        assert r.accuracy == pytest.approx(4 / 6)
        assert r.precision == pytest.approx(2 / 3)
        assert r.recall == pytest.approx(2 / 3)
        assert r.f1 == pytest.approx(2 / 3)
        assert r.f1 == pytest.approx(r.f1_from_rates())
        assert r.total == 6 and r.parameters == 10

    def test_no_positive_predictions(self):
        r = classify_metrics([0, 0, 0], [1, 0, 0])
        assert r.precision is None
        assert r.recall == 0.0
        assert r.f1 is None
        assert r.accuracy == pytest.approx(2 / 3)

    def test_no_positive_labels(self):
        r = classify_metrics([1, 0], [0, 0])
        assert r.recall is None and r.precision == 0.0

    def test_invalid_inputs(self):
        with pytest.raises(ContractViolation):
            classify_metrics([1, 0], [1])
        with pytest.raises(InputError):
            classify_metrics([], [])


class TestReferenceTable:
    """참고 지표 표 읽기"""

    def setup_method(self):
        self.reports = read_metrics_csv(REFERENCE_CSV)

    def test_nine_rows_in_order(self):
        assert len(self.reports) == 9
        assert [r.label for r in self.reports] == [row[0] for row in ENCODER_ROWS]

    def test_counts_are_undefined(self):
        assert all(not r.has_counts for r in self.reports)
        assert all(r.f1_from_counts() is None for r in self.reports)

    def test_f1_consistent_with_rates(self):
        row = next(r for r in self.reports if r.label == "UV grid (PE, Long-Lat)")
        assert (row.accuracy, row.precision, row.recall, row.f1) == (0.9034, 0.9167, 0.7996, 0.8542)
        assert abs(row.f1 - row.f1_from_rates()) < 5e-4

    def test_units(self):
        row = next(r for r in self.reports if r.label == "No mapping")
        assert row.parameters == 50_000
        assert row.time_mean_us == 270.0

    def test_missing_columns(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("label,accuracy\nx,0.5\n")
        with pytest.raises(InputError):
            read_metrics_csv(path)


class TestEmitReport:
    """CSV / SVG 출력"""

    def setup_method(self):
        self.reports = [
            classify_metrics([1, 0, 1, 0], [1, 0, 0, 0], label="a", parameters=100),
            classify_metrics([0, 0], [1, 0], label="b"),
        ]

    def test_csv_columns_and_undefined(self, tmp_path):
        path = tmp_path / "metrics.csv"
        emit_report(self.reports, str(path), "csv", "metrics")
        lines = path.read_text().splitlines()
        assert lines[0] == "label,accuracy,precision,recall,f1,tp,fp,fn,tn,parameters,time_mean_us,time_std_us"
        assert lines[2].startswith("b,0.5,n/a,0,n/a,0,0,1,1,")

    def test_csv_round_trip(self, tmp_path):
        path = tmp_path / "metrics.csv"
        emit_report(self.reports, str(path))
        again = read_metrics_csv(path)
        assert again[0].tp == 1 and again[0].fp == 1
        assert again[1].precision is None and again[1].f1 is None

    def test_deterministic_output(self, tmp_path):
        for fmt in ("csv", "svg"):
            a, b = tmp_path / f"a.{fmt}", tmp_path / f"b.{fmt}"
            emit_report(self.reports, str(a), fmt, "metrics", title="encoders")
            emit_report(self.reports, str(b), fmt, "metrics", title="encoders")
            assert a.read_bytes() == b.read_bytes()

    def test_svg_series_ids(self, tmp_path):
        path = tmp_path / "metrics.svg"
        emit_report(self.reports, str(path), "svg", "metrics")
        text = path.read_text()
        assert 'id="series-accuracy"' in text and 'id="series-f1"' in text

    def test_empty_csv_is_header_only(self, tmp_path):
        path = tmp_path / "empty.csv"
        emit_report([], str(path), "csv", "throughput")
        assert path.read_text() == "label,batch_size,k_tests_per_s\n"

    def test_throughput_rows(self):
        r = TimingReport(label="odf", throughput={1024: 50.0, 1: 2.0})
        df = to_frame([r], "throughput")
        assert df["batch_size"].tolist() == [1, 1024]

    def test_latency_and_memory_frames(self, tmp_path):
        t = TimingReport(label="odf", scene="box-town", warm_us=[1.0, 2.0, 3.0])
        emit_report([t], str(tmp_path / "latency.csv"), "csv", "latency")
        emit_report([t], str(tmp_path / "latency.svg"), "svg", "latency")
        header = (tmp_path / "latency.csv").read_text().splitlines()[0]
        assert header.startswith("label,scene,cold_median_us")
        row = {"scene": "s", "partitions": 2}
        assert list(to_frame([row], "memory").columns)[:2] == ["scene", "partitions"]

    @pytest.mark.parametrize("fmt, kind", [("pdf", "metrics"), ("csv", "scatter"), ("svg", "table")])
    def test_invalid_requests(self, tmp_path, fmt, kind):
        with pytest.raises(InputError):
            emit_report(self.reports, str(tmp_path / "x"), fmt, kind)


class TestMemory:
    """메모리 산정"""

    def test_depth_maps(self):
        assert depth_map_bytes(100, 256, 128) == 13_107_200
        assert format_bytes(13_107_200) == "13.1 MB"
        assert depth_map_bytes(100, 512, 256) == 52_428_800
        assert format_bytes(52_428_800) == "52.4 MB"
        assert format_bytes(512) == "512 B"
        assert format_bytes(2_500) == "2.5 KB"

    def test_depth_only_estimate(self):
        report = estimate_memory(None, positions_per_partition=100)
        assert report.depth_map_bytes == {"256x128": 13_107_200, "512x256": 52_428_800}
        assert report.model_bytes == 0

    def test_atlas_breakdown(self, wall_scene):
        config = TrainingConfig(position_encoder={"kind": "pe", "n_freq": 6},
                                direction_encoder={"kind": "grid2d", "levels": 16, "features": 2},
                                width=128, depth=4)
        atlas = build_untrained_atlas(build_scheme(SOURCES, cells=(2, 2)), config)
        report = estimate_memory(atlas, positions_per_partition=100, scene=wall_scene)
        assert report.partitions == 4
        assert report.direction_feature_bytes == grid_memory_bytes(16, 2)
        assert report.position_feature_bytes == 0
        mlp = atlas.models[0].mlp.parameter_count() * 4
        assert report.mlp_bytes == mlp
        assert report.model_bytes == atlas.models[0].memory_bytes()
        assert report.total_model_bytes == atlas.memory_bytes()
        assert report.raycast_bytes == wall_scene.memory_bytes()
        assert report.model_bytes < report.depth_map_bytes["256x128"]

    def test_mlp_sizes_shrink(self):
        sizes = [(128, 4), (128, 2), (64, 2), (32, 2)]
        bytes_ = [model_bytes_for(SMALL, w, d) for w, d in sizes]
        assert all(a > b for a, b in zip(bytes_, bytes_[1:]))

    def test_memory_comparison(self, wall_scene):
        scheme = build_scheme(SOURCES, cells=(2, 2))
        rows = memory_comparison({"wall": (wall_scene, scheme)}, SMALL, sizes=[(16, 2)])
        assert rows[0]["partitions"] == 4
        assert rows[0]["odf_16x2_bytes"] == 4 * model_bytes_for(SMALL, 16, 2)


class TestTiming:
    """지연 시간 / 처리량"""

    def test_bench_latency_modes(self):
        calls = []
        report = bench_latency(lambda: calls.append(1), mode="both", reps=5, evict_bytes=1 << 16)
        assert len(report.cold_us) == 5 and len(report.warm_us) == 5
        assert len(calls) == 11  # 워밍업 한 번 포함
        assert report.warm_median >= 0.0
        assert "cold" in report.protocol
        assert report.to_row()["warm_samples"] == 5

    def test_bench_latency_rejects_bad_args(self):
        with pytest.raises(InputError):
            bench_latency(lambda: None, mode="hot")
        with pytest.raises(InputError):
            bench_latency(lambda: None, reps=0)

    def test_bench_throughput(self):
        atlas = build_untrained_atlas(build_scheme(SOURCES, cells=(2, 2)), SMALL)
        T = SOURCES + [0.5, 0.5, 0.0]
        report = bench_throughput(atlas, [1, 16], SOURCES, T, min_seconds=0.0, min_calls=2, label="odf")
        assert sorted(report.throughput) == [1, 16]
        assert all(v > 0 for v in report.throughput.values())

    def test_bench_throughput_rejects_bad_sizes(self):
        atlas = build_untrained_atlas(build_scheme(SOURCES, cells=(2, 2)), SMALL)
        for sizes in ([], [0, 4], [16, 4]):
            with pytest.raises(InputError):
                bench_throughput(atlas, sizes, SOURCES, SOURCES + 1.0)

    def test_latency_ratio(self):
        assert latency_ratio([2.0, 3.0]) == pytest.approx(1.5)
        assert latency_ratio([0.0, 1.0]) == float("inf")


class TestPredictors:
    """예측기 평가"""

    def test_oracle_is_perfect(self, wall_scene):
        rng = np.random.default_rng(0)
        S = rng.uniform([-8, -8, 0.5], [4, 8, 3], size=(200, 3)).astype(np.float32)
        T = rng.uniform([-8, -8, 0.5], [9, 8, 3], size=(200, 3)).astype(np.float32)
        labels = wall_scene.oracle_visibility_batch(S.astype(float), T.astype(float))
        ts = VisibilityTestSet(wall_scene.scene_hash, S, T, labels)
        report = evaluate_predictor(OraclePredictor(wall_scene), ts, timing_samples=20)
        assert report.accuracy == 1.0
        assert report.fp == 0 and report.fn == 0
        assert report.label == "raycast"
        assert report.time_mean_us > 0

    def test_atlas_predictor(self):
        atlas = build_untrained_atlas(build_scheme(SOURCES, cells=(2, 2)), SMALL)
        ts = VisibilityTestSet(b"\x00" * 32, SOURCES, SOURCES + [1.0, 0.0, 0.0], [1, 1, 0, 0])
        report = evaluate_predictor(AtlasPredictor(atlas), ts, label="odf 16x2", timing_samples=4)
        assert report.total == 4
        assert report.parameters == atlas.parameter_count()

    def test_empty_test_set(self, wall_scene):
        ts = VisibilityTestSet(wall_scene.scene_hash, np.zeros((0, 3)), np.zeros((0, 3)), np.zeros(0))
        with pytest.raises(InputError):
            evaluate_predictor(OraclePredictor(wall_scene), ts)


class TestExperimentHelpers:
    """실험 구성 헬퍼"""

    def test_holdout_mask(self):
        mask = holdout_mask(3, 201, fraction=0.1, seed=0)
        assert mask.shape == (3, 201)
        assert np.all((~mask).sum(axis=1) == 20)
        with pytest.raises(InputError):
            holdout_mask(1, 10, fraction=1.0)

    def test_config_from_atlas(self):
        atlas = build_untrained_atlas(build_scheme(SOURCES, cells=(2, 2)), SMALL)
        config = config_from_atlas(atlas)
        assert (config.width, config.depth) == (16, 2)
        assert config.direction_encoder["kind"] == "sh"

    def test_encoder_rows(self):
        assert len(ENCODER_ROWS) == 9
        assert ENCODER_ROWS[0][0] == "No mapping"
