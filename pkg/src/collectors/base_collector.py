"""데이터 수집기 기본 클래스"""
import logging
from abc import ABC, abstractmethod
from contextlib import contextmanager
from datetime import datetime
from typing import Dict, Any, Optional

from src.storage.database import Database
from src.storage.models import PipelineRun

logger = logging.getLogger("odfsight")


class BaseCollector(ABC):
    """모든 데이터 수집기의 기본 클래스

    db가 None이면 실행 기록을 남기지 않는다.
    """

    def __init__(self, config: Optional[Dict[str, Any]] = None, db: Optional[Database] = None):
        self.config = config or {}
        self.db = db
        self.pipeline_name = self.__class__.__name__

    @abstractmethod
    def collect(self, scene, sources, **kwargs):
        """데이터 수집 실행"""
        pass

    def _start_run(self, session) -> PipelineRun:
        """파이프라인 실행 기록 시작"""
        run = PipelineRun(
            pipeline_name=self.pipeline_name,
            status="running",
            started_at=datetime.utcnow(),
            config=self.config or None,
        )
        session.add(run)
        session.flush()
        logger.info(f"[{self.pipeline_name}] 파이프라인 시작 (run_id={run.id})")
        return run

    def _finish_run(self, run: PipelineRun, records: int = 0, error: str = None):
        """파이프라인 실행 기록 완료"""
        run.finished_at = datetime.utcnow()
        run.records_collected = records
        if error:
            run.status = "failed"
            run.error_message = error
            logger.error(f"[{self.pipeline_name}] 실패: {error}")
        else:
            run.status = "success"
            logger.info(f"[{self.pipeline_name}] 완료: {records:,}건 수집")

    @contextmanager
    def _tracked_run(self):
        """실행 기록 컨텍스트. 예외가 나면 failed로 남기고 다시 던진다"""
        if self.db is None:
            yield None
            return
        with self.db.get_session() as session:
            run = self._start_run(session)
            try:
                yield run
            except Exception as e:
                self._finish_run(run, run.records_collected or 0, str(e))
                session.commit()
                raise
