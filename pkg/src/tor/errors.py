"""Exception hierarchy shared across the package."""

from __future__ import annotations


class TorError(Exception):
    """Base class for every error raised by this package."""


class ParseError(TorError):
    """Model text could not be read as an evidence tree.

    ``kind`` is one of ``"NoTitle"``, ``"NoDiagnoses"`` or ``"MalformedEntry"``;
    ``line`` is the 1-based line number of the offending input line (0 when the
    input has no usable lines at all).
    """

    def __init__(self, kind: str, line: int, detail: str = ""):
        self.kind = kind
        self.line = line
        self.detail = detail
        msg = f"{kind} at line {line}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class ValidationError(TorError):
    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations) or "invalid tree")


class SchemaError(TorError):
    def __init__(self, record_index: int, field: str, reason: str):
        self.record_index = record_index
        self.field = field
        self.reason = reason
        super().__init__(f"record {record_index}: field {field!r}: {reason}")


class InvalidConfig(TorError):
    pass


class PoolTooSmall(TorError):
    def __init__(self, department: str, needed: int, available: int):
        self.department = department
        self.needed = needed
        self.available = available
        super().__init__(
            f"department {department!r} needs {needed} distractors, {available} available"
        )


class EmptyCorpus(TorError):
    pass


class TemplateError(TorError):
    pass


class BackendError(TorError):
    """A chat completion could not be obtained.

    ``kind`` is ``"Timeout"``, ``"Http"``, ``"Exhausted"`` or ``"Unmatched"``
    (scripted backend with no entry for the request).
    """

    def __init__(self, kind: str, message: str = "", status: int | None = None,
                 tag: str | None = None):
        self.kind = kind
        self.status = status
        self.tag = tag
        super().__init__(f"{kind}: {message}" if message else kind)


class AgentError(TorError):
    def __init__(self, role, reason: str, cause: Exception | None = None):
        self.role = role
        self.reason = reason
        self.cause = cause
        super().__init__(f"{role}: {reason}" + (f" ({cause})" if cause else ""))


class FinalDecisionError(TorError):
    def __init__(self, kind: str, detail: str = ""):
        self.kind = kind
        self.detail = detail
        super().__init__(f"{kind}: {detail}" if detail else kind)


class RunError(TorError):
    """Unrecoverable failure of a single case run; carries the partial trace."""

    def __init__(self, case_id: str, cause: Exception, trace=None):
        self.case_id = case_id
        self.cause = cause
        self.trace = trace
        super().__init__(f"case {case_id}: {cause}")


class EmptyBatch(TorError):
    pass
