"""Error codes shared across the pipeline.

Every failure mode that callers are expected to handle carries a stable
string code, so the CLI can emit machine-readable errors and tests can
assert on codes rather than messages.
"""

from __future__ import annotations


class GroomlensError(Exception):
    """Base class; `code` is a stable machine-readable identifier."""

    code = "ERROR"

    def __init__(self, detail: str = ""):
        self.detail = detail
        super().__init__(f"{self.code}: {detail}" if detail else self.code)


class MalformedRecord(GroomlensError):
    code = "MALFORMED_RECORD"


class DanglingLabel(GroomlensError):
    code = "DANGLING_LABEL"


class IncompleteLabels(GroomlensError):
    code = "INCOMPLETE_LABELS"


class DuplicateIndex(GroomlensError):
    code = "DUPLICATE_INDEX"


class CorpusTooSmall(GroomlensError):
    code = "CORPUS_TOO_SMALL"


class InsufficientPositives(GroomlensError):
    code = "INSUFFICIENT_POSITIVES"


class DegenerateTraining(GroomlensError):
    code = "DEGENERATE_TRAINING"


class VocabularyMismatch(GroomlensError):
    code = "VOCABULARY_MISMATCH"


class UnknownBehavior(GroomlensError):
    code = "UNKNOWN_BEHAVIOR"


class BackendUnavailable(GroomlensError):
    code = "BACKEND_UNAVAILABLE"


class UntrainableBackend(GroomlensError):
    code = "UNTRAINABLE_BACKEND"


class EmptyTrainingSet(GroomlensError):
    code = "EMPTY_TRAINING_SET"


class LengthMismatch(GroomlensError):
    code = "LENGTH_MISMATCH"


class RefMismatch(GroomlensError):
    code = "REF_MISMATCH"


class KeyMismatch(GroomlensError):
    code = "KEY_MISMATCH"


class IncompleteRun(GroomlensError):
    code = "INCOMPLETE_RUN"


class EmptyInput(GroomlensError):
    code = "EMPTY_INPUT"


class NoOverlap(GroomlensError):
    code = "NO_OVERLAP"


class RunNotFound(GroomlensError):
    code = "RUN_NOT_FOUND"


class FractionOutOfRange(GroomlensError):
    code = "FRACTION_OUT_OF_RANGE"


class SessionNotFound(GroomlensError):
    code = "SESSION_NOT_FOUND"


class SessionExhausted(GroomlensError):
    code = "SESSION_EXHAUSTED"


class InvalidScore(GroomlensError):
    code = "INVALID_SCORE"


class ItemNotInSession(GroomlensError):
    code = "ITEM_NOT_IN_SESSION"


class NoRatings(GroomlensError):
    code = "NO_RATINGS"
