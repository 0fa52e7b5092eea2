"""Exception hierarchy shared across the toolkit."""


class MeasQCError(Exception):
    """Base class for all toolkit errors."""


class TsvFormatError(MeasQCError):
    """A malformed row in a delimited input file."""

    def __init__(self, message: str, line: int | None = None, column: str | None = None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if column is not None:
            loc.append(f"column {column!r}")
        super().__init__(f"{message} ({', '.join(loc)})" if loc else message)
        self.line = line
        self.column = column


class ValidationError(MeasQCError):
    """An annotation or corpus that violates a structural invariant."""

    def __init__(self, message: str, annot_ids: list[str] | None = None):
        if annot_ids:
            message = f"{message}: {', '.join(annot_ids)}"
        super().__init__(message)
        self.annot_ids = annot_ids or []


class GroupError(ValidationError):
    """Measurement-group assembly failed (e.g. two quantities in one set)."""


class NumberError(MeasQCError):
    """A token that cannot be read as a numeric value."""


class ConfigError(MeasQCError):
    """A reward or run configuration with unknown or invalid entries."""


class TemplateError(MeasQCError):
    """A prompt template with unbound or unknown placeholders."""


class ClientError(MeasQCError):
    """A generation-service call that failed."""
