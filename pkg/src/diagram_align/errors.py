"""Exception hierarchy shared across the package."""
from __future__ import annotations


class DiagramAlignError(Exception):
    """Base class for all package errors."""


class GraphFormatError(DiagramAlignError):
    """A graph document could not be decoded."""


class MalformedGraphError(GraphFormatError):
    """The document is not valid JSON or does not follow the graph schema."""


class DuplicateNodeError(GraphFormatError):
    def __init__(self, node_id: str) -> None:
        super().__init__(f"duplicate node id {node_id!r}")
        self.node_id = node_id


class DanglingEdgeError(GraphFormatError):
    def __init__(self, node_id: str) -> None:
        super().__init__(f"edge endpoint {node_id!r} does not resolve to a node")
        self.node_id = node_id


class UnknownNodeError(DiagramAlignError, KeyError):
    def __init__(self, node_id: str) -> None:
        super().__init__(f"unknown node id {node_id!r}")
        self.node_id = node_id

    def __str__(self) -> str:
        return self.args[0]


class SVGError(DiagramAlignError):
    """Base class for SVG input problems."""


class MalformedSVGError(SVGError):
    def __init__(self, message: str, offset: int | None) -> None:
        where = f" at byte offset {offset}" if offset is not None else ""
        super().__init__(f"malformed SVG{where}: {message}")
        self.offset = offset


class NotSVGError(SVGError):
    """The XML root element is not <svg>."""


class DeltaValidationError(DiagramAlignError):
    """A refinement delta references ids that do not fit the draft."""


class ModelError(DiagramAlignError):
    """Base class for model endpoint failures."""


class TransportError(ModelError):
    """The endpoint could not be reached or returned an error status."""


class MockFixtureMissing(ModelError):
    def __init__(self, key: str, path: str) -> None:
        super().__init__(f"no recorded reply for prompt hash {key} (looked for {path})")
        self.key = key
        self.path = path


class ProtocolError(ModelError):
    """The model reply could not be parsed or validated after all retries."""

    def __init__(self, message: str, raw_reply: str | None = None, attempts: int = 1) -> None:
        super().__init__(message)
        self.raw_reply = raw_reply
        self.attempts = attempts


class GenerationError(ProtocolError):
    """No SVG block could be located in a generation reply."""


class RenderError(DiagramAlignError):
    """The external SVG renderer failed or is not installed."""


class StageError(DiagramAlignError):
    """An item-level pipeline failure labeled with the stage that failed."""

    def __init__(self, stage: str, message: str) -> None:
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.message = message


class ConfigError(DiagramAlignError):
    """Invalid configuration file or option value."""


class ManifestError(DiagramAlignError):
    def __init__(self, line: int, field: str | None, message: str) -> None:
        loc = f"line {line}" + (f", field {field!r}" if field else "")
        super().__init__(f"manifest {loc}: {message}")
        self.line = line
        self.field = field


class BatchAbortedError(DiagramAlignError):
    """Too many items failed; the batch was aborted."""

    def __init__(self, failed: int, total: int, threshold: float) -> None:
        super().__init__(
            f"{failed} of {total} items failed, above the failure-rate threshold {threshold:.0%}"
        )
        self.failed = failed
        self.total = total
        self.threshold = threshold


class StatsError(DiagramAlignError):
    """Not enough data for the requested statistic."""
