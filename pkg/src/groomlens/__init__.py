"""Corpus-to-report pipeline for detecting predatory conversational behaviors
in chat logs, plus a human-in-the-loop validation service."""

from .agreement import (
    AgreementMatrix,
    RatingEvent,
    UncertainPolicy,
    agreement_matrix,
    cohen_kappa,
    derive_rater_labels,
)
from .corpus import (
    BehaviorLabelVector,
    Corpus,
    Message,
    Speaker,
    coverage,
    load_corpus,
    serialize_corpus,
)
from .evaluation import ConfusionCounts, MetricsSummary, aggregate, metrics, score
from .sampling import (
    FULL,
    Region,
    ShotLadder,
    SplitPlan,
    WindowedExample,
    build_windows,
    resample,
    sample_shots,
    stratified_split,
)
from .taxonomy import BEHAVIOR_IDS, BehaviorTaxonomy, default_taxonomy

__version__ = "0.1.0"

__all__ = [
    "AgreementMatrix",
    "BEHAVIOR_IDS",
    "BehaviorLabelVector",
    "BehaviorTaxonomy",
    "ConfusionCounts",
    "Corpus",
    "FULL",
    "Message",
    "MetricsSummary",
    "RatingEvent",
    "Region",
    "ShotLadder",
    "Speaker",
    "SplitPlan",
    "UncertainPolicy",
    "WindowedExample",
    "agreement_matrix",
    "aggregate",
    "build_windows",
    "cohen_kappa",
    "coverage",
    "default_taxonomy",
    "derive_rater_labels",
    "load_corpus",
    "metrics",
    "resample",
    "sample_shots",
    "score",
    "serialize_corpus",
    "stratified_split",
]
