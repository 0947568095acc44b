"""Exception types shared across the toolkit.

Every error raised by hlpkit's parsers, propagation kernels and metrics
derives from :class:`HlpError`, so callers (notably the CLI) can catch one
type and map it to a data-error exit code.
"""

from __future__ import annotations


class HlpError(Exception):
    """Base class for all hlpkit errors."""


# --- ontology -------------------------------------------------------------

class MalformedJson(HlpError):
    """Ontology input is not valid UTF-8 JSON of the expected shape."""


class DuplicateMid(HlpError):
    def __init__(self, mid: str, context: str = ""):
        self.mid = mid
        suffix = f" in {context}" if context else ""
        super().__init__(f"duplicate mid {mid!r}{suffix}")


class UnknownChild(HlpError):
    def __init__(self, parent_mid: str, child_mid: str):
        self.parent_mid = parent_mid
        self.child_mid = child_mid
        super().__init__(
            f"node {parent_mid!r} lists unknown child {child_mid!r}"
        )


class CycleDetected(HlpError):
    def __init__(self, cycle: list[str]):
        self.cycle = list(cycle)
        super().__init__("ontology contains a cycle: " + " -> ".join(self.cycle))


class UnknownVocabMid(HlpError):
    def __init__(self, mid: str):
        self.mid = mid
        super().__init__(f"vocabulary mid {mid!r} not present in ontology")


# --- labelset -------------------------------------------------------------

class MissingHeader(HlpError):
    """CSV input does not start with the expected header line."""


class NonContiguousIndices(HlpError):
    """Class-index rows are not numbered 0..n-1 in order."""


class MalformedRow(HlpError):
    def __init__(self, line_no: int, detail: str = ""):
        self.line_no = line_no
        suffix = f": {detail}" if detail else ""
        super().__init__(f"malformed row at line {line_no}{suffix}")


class UnknownMid(HlpError):
    def __init__(self, mid: str, clip_id: str | None = None):
        self.mid = mid
        self.clip_id = clip_id
        where = f" (clip {clip_id!r})" if clip_id is not None else ""
        super().__init__(f"unknown mid {mid!r}{where}")


class BadMagic(HlpError):
    """Binary score payload does not start with the HLPS magic bytes."""


class DimensionMismatch(HlpError):
    """Declared and actual matrix dimensions disagree."""


class NonFiniteValue(HlpError):
    def __init__(self, clip: str | int | None = None, cls: str | int | None = None):
        self.clip = clip
        self.cls = cls
        where = ""
        if clip is not None or cls is not None:
            where = f" at clip={clip!r}, class={cls!r}"
        super().__init__(f"non-finite score value{where}")


# --- metrics / stats ------------------------------------------------------

class LengthMismatch(HlpError):
    """Score and label vectors have different lengths."""


class ClipMismatch(HlpError):
    """Two matrices do not agree on clip ids or clip order."""


class VocabMismatch(HlpError):
    """Two matrices do not share an identical class vocabulary."""


class EmptySubset(HlpError):
    """A class subset for evaluation resolved to zero classes."""
