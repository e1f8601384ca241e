"""Exception types shared across the package."""

from __future__ import annotations


class TrajlabError(Exception):
    """Base class for all errors raised by trajlab."""


class ValidationError(TrajlabError):
    """A domain object or parameter violates its invariants."""


class ParseError(TrajlabError):
    """An input file does not conform to its format contract."""

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}:"
            if line is not None:
                prefix += f"{line}:"
            prefix += " "
        elif line is not None:
            prefix = f"line {line}: "
        super().__init__(prefix + message)


class PipelineError(TrajlabError):
    """A pipeline stage failed; carries the stage name for CLI reporting."""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")
