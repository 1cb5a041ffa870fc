"""데이터베이스 연결 및 세션 관리 (실행 기록 저장소)"""
import os
import logging
from contextlib import contextmanager
from typing import Optional

from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker, Session
from .models import Base

logger = logging.getLogger("odfsight")

DEFAULT_DB_URL = "sqlite:///runs/odfsight.db"


class Database:
    """SQLAlchemy 데이터베이스 관리"""

    def __init__(self, db_url: str = None, echo: bool = False):
        self.db_url = db_url or os.getenv("DATABASE_URL", DEFAULT_DB_URL)

        # SQLite 파일이면 디렉토리 생성
        if self.db_url.startswith("sqlite:///") and ":memory:" not in self.db_url:
            db_path = self.db_url.replace("sqlite:///", "")
            os.makedirs(os.path.dirname(db_path) or ".", exist_ok=True)

        self.engine = create_engine(self.db_url, echo=echo)
        self.SessionLocal = sessionmaker(bind=self.engine, expire_on_commit=False)

    def create_tables(self):
        """모든 테이블 생성"""
        Base.metadata.create_all(self.engine)
        logger.debug("실행 기록 테이블 준비 완료")

    @contextmanager
    def get_session(self) -> Session:
        """세션 컨텍스트 매니저"""
        session = self.SessionLocal()
        try:
            yield session
            session.commit()
        except Exception:
            session.rollback()
            raise
        finally:
            session.close()


def init_db(config: dict = None) -> Optional[Database]:
    """설정 기반 DB 초기화. database.enabled가 false면 None"""
    db_cfg = (config or {}).get("database", {}) or {}
    if not db_cfg.get("enabled", True):
        logger.debug("실행 기록 저장소 비활성화")
        return None

    db = Database(db_url=db_cfg.get("url"), echo=db_cfg.get("echo", False))
    db.create_tables()
    return db
