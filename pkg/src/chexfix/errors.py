"""Exception hierarchy shared by all chexfix modules."""


class ChexfixError(Exception):
    """Base class for all errors raised by this package."""


class InvalidGeometry(ChexfixError):
    """Non-finite or degenerate geometric inputs (zero dims, bad spacing)."""


class ExtractionError(ChexfixError):
    """A measurement phrase matched a pattern but could not be parsed."""


class UnsupportedQuery(ChexfixError):
    """Query kind outside the compilable vocabulary."""


class PlanError(ChexfixError):
    """Malformed plan: forward or type-incompatible step references."""


class IngestError(ChexfixError):
    """Malformed input file (manifest, fixture, corpus, lexicon)."""

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        loc = ""
        if path is not None:
            loc = f"{path}:" if line is None else f"{path}:{line}:"
        elif line is not None:
            loc = f"line {line}: "
        super().__init__(f"{loc} {message}".strip() if loc else message)


class BackendError(ChexfixError):
    """Base class for detection-backend failures."""


class BackendUnavailable(BackendError):
    """Transport failure, timeout, or HTTP error from a tool server."""


class ProtocolViolation(BackendError):
    """A backend response that does not conform to the wire protocol."""


class ConsistencyError(ChexfixError):
    """A measurement result references an object absent from the report."""


class AnnotationError(ChexfixError):
    """Annotation file lacks entries required for ground-truth injection."""


class AlignmentError(ChexfixError):
    """Corpora passed to evaluation do not share the same study ids."""

    def __init__(self, message: str, offenders: list[str] | None = None):
        self.offenders = offenders or []
        if self.offenders:
            message = f"{message}: {', '.join(sorted(self.offenders))}"
        super().__init__(message)


class CompositeUndefined(ChexfixError):
    """Composite score requested with a zero F1 denominator."""


class ImprovementUndefined(ChexfixError):
    """Improvement percentage requested with a non-positive baseline."""


class ConfigError(ChexfixError):
    """Invalid or missing pipeline configuration."""
