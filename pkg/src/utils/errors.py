"""ODFSight 예외 계층

모든 예외는 OdfError를 상속하고 CLI 종료 코드(exit_code)를 가진다.
- 2: 입력 오류 (잘못된 파일, 파라미터)
- 3: 데이터 무결성 오류 (포맷, 해시 불일치)
- 4: 실행 오류 (계약 위반, 커버리지 없음)
"""
from typing import Optional

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DATA_INTEGRITY = 3
EXIT_RUNTIME = 4


class OdfError(Exception):
    """ODFSight 기본 예외"""
    exit_code = EXIT_RUNTIME


# ═══════════════════════════════════════════
# 입력 오류
# ═══════════════════════════════════════════
class InputError(OdfError, ValueError):
    """사용자 입력 오류"""
    exit_code = EXIT_INPUT


class MeshParseError(InputError):
    """OBJ 파싱 실패"""

    def __init__(self, message: str, line: int):
        super().__init__(f"{line}행: {message}")
        self.line = line


class EmptySceneError(InputError):
    """삼각형이 하나도 없는 장면"""

    def __init__(self, message: str, dropped: int = 0):
        super().__init__(message)
        self.dropped = dropped


class DescriptorError(InputError):
    """절차적 장면 디스크립터 파라미터 오류"""


# ═══════════════════════════════════════════
# 계약 위반 (호출자 버그)
# ═══════════════════════════════════════════
class ContractViolation(OdfError, ValueError):
    """사전조건 위반"""


class DegeneratePairError(ContractViolation):
    """s == t 인 가시성 쿼리"""


class ShapeError(ContractViolation):
    """텐서 형상 불일치"""


class StaleCacheError(ContractViolation):
    """forward 캐시가 현재 파라미터와 맞지 않음"""


class UnsupportedDegreeError(ContractViolation):
    """지원하지 않는 SH 차수"""


class NoCoverageError(OdfError, LookupError):
    """활성 파티션 밖의 위치"""

    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = point


# ═══════════════════════════════════════════
# 데이터 무결성
# ═══════════════════════════════════════════
class DataIntegrityError(OdfError):
    """저장 데이터 무결성 오류"""
    exit_code = EXIT_DATA_INTEGRITY


class MagicMismatchError(DataIntegrityError):
    """파일 매직 불일치"""


class VersionMismatchError(DataIntegrityError):
    """지원하지 않는 포맷 버전"""


class TruncatedFileError(DataIntegrityError):
    """파일이 중간에 잘림"""

    def __init__(self, message: str, offset: int, record_index: Optional[int] = None):
        where = f"offset={offset}"
        if record_index is not None:
            where += f", record={record_index}"
        super().__init__(f"{message} ({where})")
        self.offset = offset
        self.record_index = record_index


class SceneHashMismatchError(DataIntegrityError):
    """데이터셋/모델과 장면 해시 불일치"""


def exit_code_for(error: BaseException) -> int:
    """예외 → CLI 종료 코드"""
    if isinstance(error, OdfError):
        return error.exit_code
    if isinstance(error, (FileNotFoundError, IsADirectoryError, PermissionError)):
        return EXIT_INPUT
    return EXIT_RUNTIME
