"""Error types shared by every stage of the toolchain."""

from __future__ import annotations


class BfoError(Exception):
    """Base class. `code` is the short tag printed in diagnostics."""

    code = "Error"

    def __init__(self, message: str, pos: tuple[int, int] | None = None, code: str | None = None):
        super().__init__(message)
        self.message = message
        self.pos = pos
        if code is not None:
            self.code = code

    def render(self, filename: str = "<input>") -> str:
        line, col = self.pos if self.pos else (0, 0)
        return f"{filename}:{line}:{col}: error[{self.code}]: {self.message}"


class ParseError(BfoError):
    code = "ParseError"


class AddError(BfoError):
    """Two ownership types cannot be combined, or a type cannot be split."""

    code = "SplitUnderivable"


class LftError(BfoError):
    code = "LifetimeError"


class TypeCheckError(BfoError):
    """Raised by the checker. `code` is one of the typing error variants."""

    code = "TypeError"


class StuckError(BfoError):
    code = "StuckError"


class FuelExhausted(BfoError):
    code = "FuelExhausted"


class AuditViolation(BfoError):
    code = "AuditViolation"

    def __init__(self, message: str, kind: str, address=None, details=None, pos=None):
        super().__init__(message, pos)
        self.kind = kind
        self.address = address
        self.details = details or {}


class OracleMismatch(BfoError):
    code = "OracleMismatch"

    def __init__(self, message: str, step: int | None = None, pos=None):
        super().__init__(message, pos)
        self.step = step


class ProjectionError(BfoError):
    code = "ProjectionError"
