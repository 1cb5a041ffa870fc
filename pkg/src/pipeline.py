#!/usr/bin/env python3
"""
ODFSight - 신경 ODF 가시성 파이프라인

장면 생성 → 광선/테스트셋 수집 → 파티션별 학습 → 평가 → 벤치마크.

Usage:
  python -m src.pipeline gen-scene --kind box-town --seed 7 --out data/box-town.obj
  python -m src.pipeline collect --kind box-town --sources 200 --lattice-n 2000 --out runs/box-town
  python -m src.pipeline train --dataset runs/box-town/dataset.odfd --out runs/box-town/atlas.odfm
  python -m src.pipeline eval --model runs/box-town/atlas.odfm --test-set runs/box-town/test_set.odfv
  python -m src.pipeline bench --model runs/box-town/atlas.odfm --memory
  python -m src.pipeline inspect runs/box-town/dataset.odfd

종료 코드: 0 성공, 2 입력 오류, 3 데이터 무결성 오류, 4 실행 오류.
워커 수는 --workers > ODF_WORKERS 환경변수 > 물리 코어 수 순으로 정한다.
"""
import argparse
import json
import logging
import os
import sys
from contextlib import contextmanager
from datetime import datetime
from typing import Dict, List, Optional, Tuple

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from dotenv import load_dotenv
load_dotenv()

import numpy as np

from src.collectors.ray_collector import RayCollector, audit_ray_aliasing
from src.collectors.visibility_collector import VisibilityCollector, build_test_set
from src.evaluation.experiments import (
    build_untrained_atlas, config_from_atlas, constant_time_table, memory_comparison,
    mlp_label, run_mlp_sweep,
)
from src.evaluation.memory import estimate_memory, format_bytes
from src.evaluation.predictors import AtlasPredictor, OraclePredictor, evaluate_predictor
from src.evaluation.report import emit_report
from src.evaluation.timing import bench_throughput
from src.geometry.bvh import Scene
from src.geometry.mesh import load_mesh_file, write_obj
from src.geometry.scenes import SCENE_KINDS, SceneDescriptor, generate_scene, sample_source_positions
from src.odf.model import load_atlas, save_atlas
from src.odf.partition import build_scheme
from src.odf.trainer import TrainingConfig, train_atlas
from src.storage.database import Database, init_db
from src.storage.formats import (
    inspect_file, read_ray_dataset, read_test_set, write_ray_dataset, write_test_set,
)
from src.storage.models import EvaluationRecord, PartitionTrainingLog, PipelineRun
from src.utils.errors import InputError, OdfError, SceneHashMismatchError, exit_code_for
from src.utils.helpers import load_config, setup_logger
from src.utils.run_config import RunConfig

logger = logging.getLogger("odfsight")

DEFAULT_CONFIG = "config/config.yaml"


# ═══════════════════════════════════════════
# 공통
# ═══════════════════════════════════════════
@contextmanager
def tracked_command(db: Optional[Database], name: str, rc: RunConfig):
    """명령 실행 기록 (PipelineRun). 실패도 기록하고 예외는 다시 던진다"""
    if db is None:
        yield None
        return
    with db.get_session() as session:
        run = PipelineRun(pipeline_name=name, status="running", started_at=datetime.utcnow(),
                          config=rc.to_dict())
        session.add(run)
        session.flush()
        try:
            yield run
        except Exception as e:
            run.status = "failed"
            run.error_message = str(e)
            run.finished_at = datetime.utcnow()
            session.commit()
            raise
        run.status = "success"
        run.finished_at = datetime.utcnow()


def load_scene(rc: RunConfig) -> Tuple[Scene, Optional[SceneDescriptor]]:
    """OBJ 경로가 있으면 파일, 없으면 절차적 디스크립터로 장면 구성"""
    path = rc.scene.get("path")
    if path:
        if not os.path.exists(path):
            raise InputError(f"장면 파일이 없습니다: {path}")
        return Scene(load_mesh_file(path)), None
    desc = SceneDescriptor.from_dict({k: v for k, v in rc.scene.items() if k != "path"})
    return Scene(generate_scene(desc)), desc


def scene_from_name(name: str, seed: int = 7) -> Tuple[str, Scene, Optional[SceneDescriptor]]:
    """벤치마크 장면 지정: 절차적 유형 이름 또는 OBJ 경로"""
    if name in SCENE_KINDS:
        desc = SceneDescriptor(kind=name, seed=seed)
        return name, Scene(generate_scene(desc)), desc
    if not os.path.exists(name):
        raise InputError(f"장면 파일이 없습니다: {name}")
    return os.path.splitext(os.path.basename(name))[0], Scene(load_mesh_file(name)), None


def sample_sources(scene: Scene, desc: Optional[SceneDescriptor], rc: RunConfig, count: Optional[int] = None) -> np.ndarray:
    src = rc.sources
    levels = desc.walkable_levels() if desc is not None else None
    return sample_source_positions(scene, int(count or src.get("count", 200)), seed=int(src.get("seed", 0)),
                                   levels=levels, eye_height=float(src.get("eye_height", 1.7)))


def check_scene_hash(expected: bytes, actual: bytes, what: str):
    if expected != actual:
        raise SceneHashMismatchError(
            f"{what}의 장면 해시({expected.hex()[:12]}…)가 현재 장면({actual.hex()[:12]}…)과 다릅니다")


def _print_header(title: str):
    print(f"\n{'=' * 50}")
    print(f"📦 [{title}]")
    print(f"{'=' * 50}")


# ═══════════════════════════════════════════
# 명령
# ═══════════════════════════════════════════
def cmd_gen_scene(rc: RunConfig, db: Optional[Database], out: Optional[str] = None) -> str:
    """절차적 장면 → OBJ"""
    desc = SceneDescriptor.from_dict({k: v for k, v in rc.scene.items() if k != "path"})
    with tracked_command(db, "gen-scene", rc) as run:
        mesh = generate_scene(desc)
        path = out or rc.output_path("scene", f"{desc.kind}-{desc.seed}.obj")
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            f.write(write_obj(mesh, header=f"odfsight {desc.kind} seed={desc.seed}"))
        if run is not None:
            run.records_collected = mesh.triangle_count
            run.scene_hash = mesh.content_hash().hex()
    rc.save(os.path.dirname(path) or ".")
    print(f"✅ {desc.kind} (seed={desc.seed}): 삼각형 {mesh.triangle_count:,}개 → {path}")
    return path


def cmd_collect(rc: RunConfig, db: Optional[Database], audit: bool = False) -> Dict[str, str]:
    """광선 데이터셋 + 가시성 테스트셋 수집"""
    _print_header("COLLECT")
    scene, desc = load_scene(rc)
    sources = sample_sources(scene, desc, rc)
    print(f"   장면: 삼각형 {scene.triangle_count:,}개, source {len(sources)}개")

    cfg = rc.to_dict()
    ds, ray_report = RayCollector(cfg, db).collect(scene, sources, lattice_n=rc.lattice_n, clamp=rc.clamp,
                                                   workers=rc.workers)
    ev = rc.evaluation
    ts, ts_report = VisibilityCollector(cfg, db).collect(
        scene, ds.positions, targets_per_source=int(ev.get("targets_per_source", 100)),
        seed=int(ev.get("seed", 0)), clamp=rc.clamp,
    )

    paths = {
        "dataset": rc.output_path("dataset", "dataset.odfd"),
        "test_set": rc.output_path("test_set", "test_set.odfv"),
    }
    write_ray_dataset(ds, paths["dataset"])
    write_test_set(ts, paths["test_set"])
    rc.save(os.path.dirname(paths["dataset"]) or ".")

    print(f"   광선: source {ds.source_count} × 방향 {ds.direction_count} = {ds.ray_count:,}개 "
          f"(미교차 {ray_report.miss_fraction:.1%})")
    if ray_report.inside_solid:
        print(f"   ⚠️ 고체 내부로 보이는 source {len(ray_report.inside_solid)}개")
    print(f"   테스트: {len(ts):,}건, 보임 {ts_report.visible_fraction:.1%} / 가림 {1 - ts_report.visible_fraction:.1%}")
    if audit:
        result = audit_ray_aliasing(scene, ds)
        mark = "✅" if result.passed else "❌"
        print(f"   {mark} 광선 별칭 검사: {result.checked}건, 최대 오차 {result.max_error:.2e} m")
    print(f"✅ {paths['dataset']}, {paths['test_set']}")
    return paths


def cmd_train(rc: RunConfig, db: Optional[Database], dataset_path: str, verify_scene: bool = False) -> str:
    """데이터셋 분할 → 파티션별 학습 → 아틀라스 저장

    verify_scene이면 지정한 장면의 해시가 데이터셋 헤더와 같아야 한다.
    """
    _print_header("TRAIN")
    ds = read_ray_dataset(dataset_path)
    ds.validate()
    if verify_scene:
        scene, _ = load_scene(rc)
        check_scene_hash(ds.scene_hash, scene.scene_hash, f"데이터셋 {dataset_path}")

    part = rc.partitioning
    scheme = build_scheme(ds.positions.astype(np.float64), part.get("kind", "grid2d"),
                          cells=part.get("cells") if part.get("cell_size") is None else None,
                          cell_size=part.get("cell_size"))
    config = TrainingConfig.from_dict(rc.training)
    print(f"   파티션 {len(scheme.active_cells)}개 ({scheme.kind}, dims={scheme.dims}), "
          f"MLP {mlp_label(config.width, config.depth)}, epoch {config.epochs}")

    with tracked_command(db, "train", rc) as run:
        atlas, reports = train_atlas(ds, scheme, config, workers=rc.workers)
        path = rc.output_path("model", "atlas.odfm")
        save_atlas(atlas, path)
        if run is not None:
            run.scene_hash = ds.scene_hash.hex()
            run.records_collected = len(reports)
            for r in reports:
                run.training_logs.append(PartitionTrainingLog(
                    partition_id=r.partition_id, sources=r.sources, rays=r.rays, epochs=r.epochs,
                    initial_loss=r.initial_loss, final_mse=r.final_mse, seconds=r.seconds,
                ))

    rows = [{"partition_id": r.partition_id, "sources": r.sources, "rays": r.rays, "epochs": r.epochs,
             "initial_loss": r.initial_loss, "final_mse": r.final_mse, "seconds": r.seconds} for r in reports]
    out_dir = os.path.dirname(path) or "."
    emit_report(rows, os.path.join(out_dir, "training_log.csv"), "csv", kind="table")
    rc.save(out_dir)
    for r in reports:
        print(f"   p{r.partition_id}: source {r.sources}, MSE {r.initial_loss:.3e} → {r.final_mse:.3e}")
    print(f"✅ 파라미터 {atlas.parameter_count():,}개 ({format_bytes(atlas.memory_bytes())}) → {path}")
    return path


def cmd_eval(rc: RunConfig, db: Optional[Database], model_path: str, test_set_path: str,
             with_oracle: bool = False) -> str:
    """테스트셋 분류 지표 → metrics.csv / metrics.svg"""
    _print_header("EVAL")
    atlas = load_atlas(model_path)
    ts = read_test_set(test_set_path)
    if len(ts) == 0:
        raise InputError(f"테스트셋이 비어 있습니다: {test_set_path}")
    atlas_hash = atlas.metadata.get("scene_hash")
    if atlas_hash:
        check_scene_hash(bytes.fromhex(atlas_hash), ts.scene_hash, f"모델 {model_path}")

    ev = rc.evaluation
    samples = int(ev.get("timing_samples", 200))
    with tracked_command(db, "eval", rc) as run:
        reports = [evaluate_predictor(AtlasPredictor(atlas, float(ev.get("bias", 0.0))), ts,
                                      label=f"odf {mlp_label(*_mlp_shape(atlas))}", timing_samples=samples)]
        if with_oracle:
            scene, _ = load_scene(rc)
            check_scene_hash(ts.scene_hash, scene.scene_hash, f"테스트셋 {test_set_path}")
            reports.append(evaluate_predictor(OraclePredictor(scene), ts, label="raycast", timing_samples=samples))
        if run is not None:
            run.scene_hash = ts.scene_hash.hex()
            run.records_collected = len(ts)
            for r in reports:
                run.evaluations.append(EvaluationRecord(
                    label=r.label, accuracy=r.accuracy, precision=r.precision, recall=r.recall, f1=r.f1,
                    parameters=r.parameters, time_mean_us=r.time_mean_us, time_std_us=r.time_std_us,
                ))

    out_dir = rc.output_dir()
    path = emit_report(reports, os.path.join(out_dir, "metrics.csv"), "csv", kind="metrics")
    emit_report(reports, os.path.join(out_dir, "metrics.svg"), "svg", kind="metrics", title="visibility metrics")
    rc.save(out_dir)
    for r in reports:
        f1 = f"{r.f1:.4f}" if r.f1 is not None else "n/a"
        print(f"   {r.label}: acc {r.accuracy:.4f}, F1 {f1}, 파라미터 {r.parameters:,}, "
              f"{r.time_mean_us:.1f} ± {r.time_std_us:.1f} µs")
    print(f"✅ {path}")
    return path


def _mlp_shape(atlas) -> Tuple[int, int]:
    hidden = next(iter(atlas.models.values())).mlp.layer_sizes[1:-1]
    return (hidden[0] if hidden else 0), len(hidden)


def _bench_queries(scene: Scene, desc: Optional[SceneDescriptor], rc: RunConfig) -> Tuple[np.ndarray, np.ndarray]:
    count = max(1, int(rc.bench.get("queries", 256)) // 4)
    sources = sample_sources(scene, desc, rc, count=count)
    ts = build_test_set(scene, sources, targets_per_source=4, seed=int(rc.evaluation.get("seed", 0)), clamp=rc.clamp)
    return ts.sources.astype(np.float64), ts.targets.astype(np.float64)


def cmd_bench(rc: RunConfig, db: Optional[Database], model_path: str, scenes: Optional[List[str]] = None,
              mlp_sweep: bool = True, memory: bool = False, throughput: bool = True) -> Dict[str, str]:
    """지연 시간(장면별 고정 시간 표, MLP 크기), 처리량, 메모리"""
    _print_header("BENCH")
    atlas = load_atlas(model_path)
    config = config_from_atlas(atlas)
    bench = rc.bench
    reps = int(bench.get("reps", 1000))
    cell_size = float(bench.get("cell_size", 16.0))
    out_dir = rc.output_dir()
    paths = {}

    with tracked_command(db, "bench", rc):
        loaded = {}
        for name in (scenes or bench.get("scenes", list(SCENE_KINDS))):
            label, scene, desc = scene_from_name(name, seed=int(rc.scene.get("seed", 7)))
            S, T = _bench_queries(scene, desc, rc)
            loaded[label] = (scene, S, T)
            print(f"   {label}: 삼각형 {scene.triangle_count:,}개, 질의 {len(S)}건")

        rows, timings = constant_time_table(loaded, config, cell_size=cell_size, reps=reps, clamp=atlas.clamp)
        paths["constant_time"] = emit_report(rows, os.path.join(out_dir, "constant_time.csv"), "csv", kind="table")
        paths["latency"] = emit_report(timings, os.path.join(out_dir, "latency.csv"), "csv", kind="latency")
        emit_report(timings, os.path.join(out_dir, "latency.svg"), "svg", kind="latency", title="single query latency")
        for row in rows:
            print(f"   {row['scene']}: raycast {row['raycast_warm_us']:.2f} µs / odf {row['odf_warm_us']:.2f} µs "
                  f"(×{row['speedup_warm']:.2f})")

        first_scene, S, T = next(iter(loaded.values()))
        scheme = build_scheme(S, "voxel3d", cell_size=cell_size)
        sizes = rc.mlp_sizes or [(config.width, config.depth)]
        if mlp_sweep:
            sweep = run_mlp_sweep(scheme, S, T, config, sizes=sizes, reps=reps, clamp=atlas.clamp)
            paths["mlp_sweep"] = emit_report(sweep, os.path.join(out_dir, "latency_mlp.csv"), "csv", kind="latency")
            for r in sweep:
                print(f"   MLP {r.label}: warm {r.warm_median:.2f} µs, cold {r.cold_median:.2f} µs")

        if throughput:
            batches = [int(b) for b in bench.get("batch_sizes", [1, 16, 256, 1024])]
            curves = []
            for w, d in sizes:
                timing_atlas = build_untrained_atlas(scheme, _with_mlp(config, w, d), atlas.clamp)
                curves.append(bench_throughput(timing_atlas, batches, S, T, label=mlp_label(w, d)))
            paths["throughput"] = emit_report(curves, os.path.join(out_dir, "throughput.csv"), "csv", kind="throughput")
            emit_report(curves, os.path.join(out_dir, "throughput.svg"), "svg", kind="throughput",
                        title="CPU batched throughput")

        if memory:
            resolutions = [tuple(r) for r in bench.get("depth_map_resolutions", [[256, 128], [512, 256]])]
            mem = estimate_memory(atlas, resolutions, bench.get("positions_per_partition"))
            paths["memory"] = emit_report([mem], os.path.join(out_dir, "memory.csv"), "csv", kind="memory")
            schemes = {name: (scene, build_scheme(S_, "voxel3d", cell_size=cell_size))
                       for name, (scene, S_, _) in loaded.items()}
            paths["memory_scenes"] = emit_report(memory_comparison(schemes, config, sizes),
                                                 os.path.join(out_dir, "memory_scenes.csv"), "csv", kind="table")
            depth = ", ".join(f"{k} {format_bytes(v)}" for k, v in mem.depth_map_bytes.items())
            print(f"   메모리/파티션: 깊이 맵 {depth} / 모델 {format_bytes(mem.model_bytes)}")

    rc.save(out_dir)
    print(f"✅ 벤치마크 결과 → {out_dir}")
    return paths


def _with_mlp(config: TrainingConfig, width: int, depth: int) -> TrainingConfig:
    data = config.to_dict()
    data.update(width=width, depth=depth)
    return TrainingConfig.from_dict(data)


def cmd_inspect(paths: List[str]) -> List[Dict]:
    """바이너리 파일 헤더 덤프"""
    results = []
    for path in paths:
        if not os.path.exists(path):
            raise InputError(f"파일이 없습니다: {path}")
        info = inspect_file(path)
        results.append(info)
        print(json.dumps(info, ensure_ascii=False, indent=2))
    return results


# ═══════════════════════════════════════════
# 인자 처리
# ═══════════════════════════════════════════
def _add_scene_args(p: argparse.ArgumentParser):
    p.add_argument("--scene", dest="scene_path", help="OBJ 장면 파일 (없으면 절차적 장면)")
    p.add_argument("--kind", choices=SCENE_KINDS, help="절차적 장면 유형")
    p.add_argument("--seed", type=int, help="절차적 장면 시드")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="ODFSight: neural ODF visibility pipeline")
    parser.add_argument("--config", default=DEFAULT_CONFIG, help="YAML 설정 파일")
    parser.add_argument("--workers", type=int, help="워커 수 (기본: ODF_WORKERS 또는 물리 코어 수)")
    parser.add_argument("--no-db", action="store_true", help="실행 기록 저장 안 함")
    parser.add_argument("--log-level", help="로그 레벨 (DEBUG, INFO, ...)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-scene", help="절차적 장면 → OBJ")
    _add_scene_args(p)
    p.add_argument("--out", help="OBJ 출력 경로")

    p = sub.add_parser("collect", help="광선 데이터셋 + 테스트셋 수집")
    _add_scene_args(p)
    p.add_argument("--sources", type=int, help="source 위치 수")
    p.add_argument("--source-seed", type=int, help="source 샘플링 시드")
    p.add_argument("--lattice-n", type=int, help="격자 파라미터 n (방향 2n+1개)")
    p.add_argument("--clamp", type=float, help="최대 광선 거리 (m)")
    p.add_argument("--targets-per-source", type=int, help="source당 테스트 target 수")
    p.add_argument("--test-seed", type=int, help="테스트셋 시드")
    p.add_argument("--audit", action="store_true", help="광선 별칭 검사 실행")
    p.add_argument("--out", help="출력 디렉토리")

    p = sub.add_parser("train", help="파티션별 ODF 학습")
    _add_scene_args(p)
    p.add_argument("--dataset", required=True, help="ODFD 데이터셋 경로")
    p.add_argument("--partition-kind", choices=["grid2d", "voxel3d"])
    p.add_argument("--cells", type=int, nargs="+", help="축별 셀 수 (예: 8 8)")
    p.add_argument("--cell-size", type=float, help="셀 크기 (m)")
    p.add_argument("--epochs", type=int)
    p.add_argument("--width", type=int, help="MLP 은닉 폭")
    p.add_argument("--depth", type=int, help="MLP 은닉층 수")
    p.add_argument("--lr", type=float)
    p.add_argument("--train-seed", type=int)
    p.add_argument("--out", help="ODFM 출력 경로")

    p = sub.add_parser("eval", help="테스트셋 분류 지표")
    _add_scene_args(p)
    p.add_argument("--model", required=True, help="ODFM 모델 경로")
    p.add_argument("--test-set", required=True, help="ODFV 테스트셋 경로")
    p.add_argument("--bias", type=float, help="판정 편향 (m)")
    p.add_argument("--oracle", action="store_true", help="레이캐스트 기준선도 평가")
    p.add_argument("--out", help="출력 디렉토리")

    p = sub.add_parser("bench", help="지연 시간 / 처리량 / 메모리")
    p.add_argument("--model", required=True, help="ODFM 모델 경로")
    p.add_argument("--scenes", nargs="+", help="장면 유형 이름 또는 OBJ 경로")
    p.add_argument("--reps", type=int, help="지연 시간 반복 횟수")
    p.add_argument("--no-mlp-sweep", action="store_true")
    p.add_argument("--no-throughput", action="store_true")
    p.add_argument("--memory", action="store_true", help="메모리 표 출력")
    p.add_argument("--out", help="출력 디렉토리")

    p = sub.add_parser("inspect", help="바이너리 파일 헤더 덤프")
    p.add_argument("paths", nargs="+")
    return parser


def resolve_run_config(args: argparse.Namespace, config: Dict) -> RunConfig:
    """YAML 설정 위에 CLI 플래그를 덮어쓴다"""
    rc = RunConfig.from_yaml_config(config)
    flags = {
        "command": args.command,
        "workers": args.workers,
        "scene.path": getattr(args, "scene_path", None),
        "scene.kind": getattr(args, "kind", None),
        "scene.seed": getattr(args, "seed", None),
        "sources.count": getattr(args, "sources", None),
        "sources.seed": getattr(args, "source_seed", None),
        "lattice_n": getattr(args, "lattice_n", None),
        "clamp": getattr(args, "clamp", None),
        "evaluation.targets_per_source": getattr(args, "targets_per_source", None),
        "evaluation.seed": getattr(args, "test_seed", None),
        "evaluation.bias": getattr(args, "bias", None),
        "partitioning.kind": getattr(args, "partition_kind", None),
        "partitioning.cells": getattr(args, "cells", None),
        "partitioning.cell_size": getattr(args, "cell_size", None),
        "training.epochs": getattr(args, "epochs", None),
        "training.width": getattr(args, "width", None),
        "training.depth": getattr(args, "depth", None),
        "training.lr": getattr(args, "lr", None),
        "training.seed": getattr(args, "train_seed", None),
        "bench.reps": getattr(args, "reps", None),
    }
    if getattr(args, "scene_path", None) is None and getattr(args, "kind", None) is not None:
        flags["scene.path"] = ""
    out = getattr(args, "out", None)
    if out:
        if args.command == "train":
            flags["outputs.model"] = out
            flags["outputs.dir"] = os.path.dirname(out) or "."
        elif args.command == "gen-scene":
            flags["outputs.scene"] = out
        else:
            flags["outputs.dir"] = out
    return rc.override(**flags)


def run(args: argparse.Namespace, rc: RunConfig, db: Optional[Database]):
    if args.command == "gen-scene":
        return cmd_gen_scene(rc, db, getattr(args, "out", None))
    if args.command == "collect":
        return cmd_collect(rc, db, audit=args.audit)
    if args.command == "train":
        verify = args.scene_path is not None or args.kind is not None
        return cmd_train(rc, db, args.dataset, verify_scene=verify)
    if args.command == "eval":
        return cmd_eval(rc, db, args.model, args.test_set, with_oracle=args.oracle)
    if args.command == "bench":
        return cmd_bench(rc, db, args.model, args.scenes, mlp_sweep=not args.no_mlp_sweep,
                         memory=args.memory, throughput=not args.no_throughput)
    if args.command == "inspect":
        return cmd_inspect(args.paths)
    raise InputError(f"알 수 없는 명령: {args.command}")


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config) if os.path.exists(args.config) else {}
        log_cfg = config.get("logging", {}) or {}
        setup_logger(level=args.log_level or log_cfg.get("level", "INFO"), log_file=log_cfg.get("file"))
        if args.command == "inspect":
            cmd_inspect(args.paths)
            return 0

        rc = resolve_run_config(args, config)
        if args.no_db:
            config = {**config, "database": {**(config.get("database") or {}), "enabled": False}}
        db = init_db(config)
        run(args, rc, db)
        return 0
    except (OdfError, OSError) as e:
        code = exit_code_for(e)
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        logger.debug("실패 상세", exc_info=True)
        return code
    except Exception as e:
        print(f"❌ 실행 오류: {type(e).__name__}: {e}", file=sys.stderr)
        logger.exception("처리되지 않은 오류")
        return exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())
