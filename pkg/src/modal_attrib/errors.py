"""Exception hierarchy shared by every module and surfaced by the CLI."""

from __future__ import annotations


class ModalAttribError(Exception):
    """Base class; ``kind`` is what the CLI reports in its error JSON."""

    @property
    def kind(self) -> str:
        return type(self).__name__

    def to_dict(self) -> dict:
        return {"kind": self.kind, "message": str(self)}


class SchemaError(ModalAttribError):
    def __init__(self, message: str, column: str | None = None):
        super().__init__(message)
        self.column = column

    def to_dict(self) -> dict:
        out = super().to_dict()
        if self.column is not None:
            out["column"] = self.column
        return out


class ParseError(ModalAttribError):
    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        super().__init__(message)
        self.row = row
        self.column = column

    def to_dict(self) -> dict:
        out = super().to_dict()
        if self.row is not None:
            out["row"] = self.row
        if self.column is not None:
            out["column"] = self.column
        return out


class DuplicateIdError(ModalAttribError):
    pass


class ConfigError(ModalAttribError):
    pass


class AnnotationError(ModalAttribError):
    def __init__(self, field: str, message: str | None = None):
        super().__init__(message or field)
        self.field = field


class JoinError(ModalAttribError):
    pass


class StaleArtifactError(ModalAttribError):
    pass
