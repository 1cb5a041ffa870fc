"""SQLAlchemy 모델 - ODFSight 실행 기록

1. PipelineRun: CLI 명령/수집기 실행 한 번
2. PartitionTrainingLog: 파티션별 학습 결과
3. EvaluationRecord: 평가/벤치마크 결과 행
"""
from datetime import datetime
from sqlalchemy import Column, Integer, String, Float, Text, DateTime, ForeignKey, Index, JSON
from sqlalchemy.orm import declarative_base, relationship

Base = declarative_base()


class PipelineRun(Base):
    """파이프라인 실행 기록"""
    __tablename__ = "pipeline_runs"

    id = Column(Integer, primary_key=True)
    pipeline_name = Column(String(100), nullable=False, index=True)  # RayCollector, cmd_train ...
    status = Column(String(20), default="running")  # running, success, failed
    started_at = Column(DateTime, default=datetime.utcnow)
    finished_at = Column(DateTime)
    records_collected = Column(Integer, default=0)
    error_message = Column(Text)
    config = Column(JSON)  # 해석된 실행 설정
    scene_hash = Column(String(64))

    training_logs = relationship("PartitionTrainingLog", back_populates="run")
    evaluations = relationship("EvaluationRecord", back_populates="run")


class PartitionTrainingLog(Base):
    """파티션 학습 결과"""
    __tablename__ = "partition_training_logs"
    __table_args__ = (
        Index("ix_training_run_partition", "run_id", "partition_id"),
    )

    id = Column(Integer, primary_key=True)
    run_id = Column(Integer, ForeignKey("pipeline_runs.id"), nullable=False)
    partition_id = Column(Integer, nullable=False)
    sources = Column(Integer)
    rays = Column(Integer)
    epochs = Column(Integer)
    initial_loss = Column(Float)
    final_mse = Column(Float)
    seconds = Column(Float)
    created_at = Column(DateTime, default=datetime.utcnow)

    run = relationship("PipelineRun", back_populates="training_logs")


class EvaluationRecord(Base):
    """평가 지표 한 행 (metrics 리포트와 같은 열)"""
    __tablename__ = "evaluation_records"

    id = Column(Integer, primary_key=True)
    run_id = Column(Integer, ForeignKey("pipeline_runs.id"), nullable=False, index=True)
    label = Column(String(100), nullable=False)
    accuracy = Column(Float)
    precision = Column(Float)  # 정의되지 않으면 NULL
    recall = Column(Float)
    f1 = Column(Float)
    parameters = Column(Integer)
    time_mean_us = Column(Float)
    time_std_us = Column(Float)
    created_at = Column(DateTime, default=datetime.utcnow)

    run = relationship("PipelineRun", back_populates="evaluations")
