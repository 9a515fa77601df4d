"""Cohen's kappa and rater-agreement matrices.

Human validation ratings arrive as 1-3 agreement scores against a model
prediction; they are converted to boolean rater labels, then compared
pairwise (gold annotator, human validator, model) with Cohen's kappa.
Uncertain (score 2) ratings are either excluded or counted as agreement,
controlled by an explicit policy.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .errors import EmptyInput, LengthMismatch, NoOverlap
from .taxonomy import BEHAVIOR_IDS, default_taxonomy

MessageRef = tuple[str, int]

RATER1 = "RATER1"  # original gold labels
RATER2 = "RATER2"  # human validation ratings
MODEL = "MODEL"    # model predictions

PAIRS = ((RATER1, RATER2), (RATER1, MODEL), (RATER2, MODEL))


class UncertainPolicy(str, Enum):
    EXCLUDE_UNCERTAIN = "exclude"
    UNCERTAIN_AS_AGREE = "agree"


@dataclass(frozen=True)
class RatingEvent:
    session_id: str
    message_ref: MessageRef
    behavior_id: str
    model_prediction: bool
    score: int  # 1 disagree, 2 uncertain, 3 agree
    rated_at: str = ""

    def __post_init__(self):
        if self.score not in (1, 2, 3):
            raise ValueError(f"score must be 1, 2, or 3, got {self.score}")

    def as_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "chat_id": self.message_ref[0],
            "index": self.message_ref[1],
            "behavior_id": self.behavior_id,
            "model_prediction": self.model_prediction,
            "score": self.score,
            "rated_at": self.rated_at,
        }

    @staticmethod
    def from_dict(raw: dict) -> "RatingEvent":
        return RatingEvent(
            session_id=raw.get("session_id", ""),
            message_ref=(raw["chat_id"], raw["index"]),
            behavior_id=raw["behavior_id"],
            model_prediction=bool(raw["model_prediction"]),
            score=int(raw["score"]),
            rated_at=raw.get("rated_at", ""),
        )


def cohen_kappa(labels_a: Sequence[bool], labels_b: Sequence[bool]) -> float:
    """Chance-corrected agreement between two aligned boolean labelings.

    kappa = (p_o - p_e) / (1 - p_e) with marginal-product chance agreement.
    Identical labelings where p_e = 1 (both constant and equal) return 1.0;
    one-constant-one-varying cases compute normally.
    """
    if len(labels_a) != len(labels_b):
        raise LengthMismatch(f"{len(labels_a)} vs {len(labels_b)} labels")
    n = len(labels_a)
    if n == 0:
        raise EmptyInput("cannot compute kappa over zero items")
    both_yes = both_no = a_yes = b_yes = agree = 0
    for a, b in zip(labels_a, labels_b):
        a_yes += a
        b_yes += b
        agree += a == b
        both_yes += a and b
        both_no += (not a) and (not b)
    p_o = agree / n
    p_e = (a_yes / n) * (b_yes / n) + ((n - a_yes) / n) * ((n - b_yes) / n)
    if p_e == 1.0:
        return 1.0 if agree == n else -1.0
    return (p_o - p_e) / (1 - p_e)


def dedupe_events(events: Iterable[RatingEvent]) -> list[RatingEvent]:
    """Last-write-wins per (session, message_ref, behavior_id), input order."""
    latest: dict[tuple, RatingEvent] = {}
    for ev in events:
        latest[(ev.session_id, ev.message_ref, ev.behavior_id)] = ev
    return list(latest.values())


def derive_rater_labels(
    events: Sequence[RatingEvent],
    policy: UncertainPolicy = UncertainPolicy.EXCLUDE_UNCERTAIN,
) -> tuple[dict[tuple[MessageRef, str], bool], set[tuple[MessageRef, str]]]:
    """Boolean rater labels per (message_ref, behavior_id) plus the set of
    items excluded under EXCLUDE_UNCERTAIN.

    score 3 agrees with the prediction, score 1 negates it; score 2 is
    excluded or counted as agreement depending on policy.
    """
    labels: dict[tuple[MessageRef, str], bool] = {}
    excluded: set[tuple[MessageRef, str]] = set()
    for ev in events:
        key = (ev.message_ref, ev.behavior_id)
        if ev.score == 3:
            labels[key] = ev.model_prediction
        elif ev.score == 1:
            labels[key] = not ev.model_prediction
        elif policy is UncertainPolicy.UNCERTAIN_AS_AGREE:
            labels[key] = ev.model_prediction
        else:
            excluded.add(key)
    return labels, excluded


@dataclass(frozen=True)
class AgreementMatrix:
    raters: tuple[str, ...]
    per_behavior: dict[str, dict[tuple[str, str], float]]
    per_behavior_overall: dict[str, float]
    total: dict[tuple[str, str], float]          # pooled items across behaviors
    total_mean_of_behaviors: dict[tuple[str, str], float]
    overall: float                               # mean of pooled pairwise values
    policy: UncertainPolicy
    uncertain_count: int = 0

    def cell(self, behavior_id: str, a: str, b: str) -> float:
        pair = (a, b) if (a, b) in PAIRS else (b, a)
        return self.per_behavior[behavior_id][pair]


def _pair_kappa(
    items: Sequence[tuple[MessageRef, str]],
    source_a: dict,
    source_b: dict,
) -> float | None:
    keys = [k for k in items if k in source_a and k in source_b]
    if not keys:
        return None
    return cohen_kappa([source_a[k] for k in keys], [source_b[k] for k in keys])


def agreement_matrix(
    gold: dict[tuple[MessageRef, str], bool],
    model: dict[tuple[MessageRef, str], bool],
    events: Sequence[RatingEvent],
    policy: UncertainPolicy = UncertainPolicy.EXCLUDE_UNCERTAIN,
) -> AgreementMatrix:
    """Pairwise kappa between gold labels, derived rater labels, and model
    predictions, per behavior plus pooled totals.

    Items excluded by the uncertain policy drop out of the two pairs that
    involve the human validator only; the gold/model pair keeps all items.
    """
    events = dedupe_events(events)
    rater2, _ = derive_rater_labels(events, policy)
    uncertain = sum(1 for ev in events if ev.score == 2)

    common = sorted(set(gold) & set(model))
    if not common:
        raise NoOverlap("gold and model predictions share no items")

    sources = {RATER1: gold, RATER2: rater2, MODEL: model}

    per_behavior: dict[str, dict[tuple[str, str], float]] = {}
    per_behavior_overall: dict[str, float] = {}
    behaviors = [b for b in BEHAVIOR_IDS if any(k[1] == b for k in common)]
    for b in behaviors:
        items = [k for k in common if k[1] == b]
        cells = {}
        for pair in PAIRS:
            value = _pair_kappa(items, sources[pair[0]], sources[pair[1]])
            if value is not None:
                cells[pair] = value
        per_behavior[b] = cells
        if cells:
            per_behavior_overall[b] = sum(cells.values()) / len(cells)

    total = {}
    for pair in PAIRS:
        value = _pair_kappa(common, sources[pair[0]], sources[pair[1]])
        if value is not None:
            total[pair] = value
    total_mean = {}
    for pair in PAIRS:
        values = [cells[pair] for cells in per_behavior.values() if pair in cells]
        if values:
            total_mean[pair] = sum(values) / len(values)
    overall = sum(total.values()) / len(total) if total else 0.0

    return AgreementMatrix(
        raters=(RATER1, RATER2, MODEL),
        per_behavior=per_behavior,
        per_behavior_overall=per_behavior_overall,
        total=total,
        total_mean_of_behaviors=total_mean,
        overall=overall,
        policy=policy,
        uncertain_count=uncertain,
    )


def matrix_as_dict(matrix: AgreementMatrix) -> dict:
    def cells_to_json(cells: dict[tuple[str, str], float]) -> dict[str, float]:
        return {f"{a}/{b}": v for (a, b), v in cells.items()}

    return {
        "raters": list(matrix.raters),
        "policy": matrix.policy.value,
        "uncertain_count": matrix.uncertain_count,
        "per_behavior": {b: cells_to_json(c) for b, c in matrix.per_behavior.items()},
        "per_behavior_overall": matrix.per_behavior_overall,
        "total": cells_to_json(matrix.total),
        "total_mean_of_behaviors": cells_to_json(matrix.total_mean_of_behaviors),
        "overall": matrix.overall,
    }


def emit_agreement_report(
    gold: dict[tuple[MessageRef, str], bool],
    model: dict[tuple[MessageRef, str], bool],
    events: Sequence[RatingEvent],
    path: str | Path,
    primary_policy: UncertainPolicy = UncertainPolicy.EXCLUDE_UNCERTAIN,
) -> dict:
    """agreement_report.json: one row per behavior plus a pooled Total row.

    Each value for a pair involving the human validator carries the
    alternate-policy value in a parallel `*_alt` field (the parenthesized
    presentation); the gold/model pair is policy-independent.
    """
    alt_policy = (
        UncertainPolicy.UNCERTAIN_AS_AGREE
        if primary_policy is UncertainPolicy.EXCLUDE_UNCERTAIN
        else UncertainPolicy.EXCLUDE_UNCERTAIN
    )
    primary = agreement_matrix(gold, model, events, primary_policy)
    alternate = agreement_matrix(gold, model, events, alt_policy)
    taxonomy = default_taxonomy()

    def row(behavior_id: str | None) -> dict:
        if behavior_id is None:
            p_cells, a_cells = primary.total, alternate.total
            name = "Total"
        else:
            p_cells = primary.per_behavior.get(behavior_id, {})
            a_cells = alternate.per_behavior.get(behavior_id, {})
            name = taxonomy.get(behavior_id).display_name
        out: dict = {"behavior": name}
        for pair, key in zip(PAIRS, ("rater1_rater2", "rater1_model", "rater2_model")):
            if pair in p_cells:
                out[key] = p_cells[pair]
                if RATER2 in pair:
                    out[key + "_alt"] = a_cells.get(pair)
        present = [out[k] for k in ("rater1_rater2", "rater1_model", "rater2_model") if k in out]
        if present:
            out["overall"] = sum(present) / len(present)
            alt_present = [
                out.get(k + "_alt", out.get(k))
                for k in ("rater1_rater2", "rater1_model", "rater2_model")
                if k in out
            ]
            out["overall_alt"] = sum(alt_present) / len(alt_present)
        return out

    behaviors = [b for b in BEHAVIOR_IDS if b in primary.per_behavior]
    report = {
        "policy": primary_policy.value,
        "alternate_policy": alt_policy.value,
        "uncertain_count": primary.uncertain_count,
        "rows": [row(b) for b in behaviors],
        "total": row(None),
        "total_mean_of_behaviors": {
            f"{a}/{b}": v for (a, b), v in primary.total_mean_of_behaviors.items()
        },
    }
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report
