"""Classification metrics, mean±SD aggregation over resamples, and
report emission (per-behavior model tables, a best-model summary,
and learning-curve data files).

Reports are pure functions of the persisted run artifacts: regenerating a
report from the same artifacts is byte-identical.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .errors import IncompleteRun, KeyMismatch, LengthMismatch, RefMismatch
from .taxonomy import BEHAVIOR_IDS, default_taxonomy


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def score(
    predictions: Sequence[bool],
    gold: Sequence[bool],
    pred_refs: Sequence[tuple] | None = None,
    gold_refs: Sequence[tuple] | None = None,
) -> ConfusionCounts:
    """Confusion counts over aligned prediction/gold vectors. When refs are
    given, alignment is checked element-wise."""
    if len(predictions) != len(gold):
        raise LengthMismatch(f"{len(predictions)} predictions vs {len(gold)} gold labels")
    if pred_refs is not None and gold_refs is not None:
        if list(pred_refs) != list(gold_refs):
            raise RefMismatch("prediction and gold refs are not aligned")
    tp = fp = fn = tn = 0
    for p, g in zip(predictions, gold):
        if p and g:
            tp += 1
        elif p and not g:
            fp += 1
        elif not p and g:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp, fp, fn, tn)


def metrics(counts: ConfusionCounts) -> tuple[float, float, float, float]:
    """(precision, recall, f1, accuracy) with the zero-denominator convention:
    undefined ratios are reported as 0."""
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 0.0
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    accuracy = (counts.tp + counts.tn) / counts.n if counts.n else 0.0
    return precision, recall, f1, accuracy


METRIC_NAMES = ("precision", "recall", "f1", "accuracy")


@dataclass(frozen=True)
class ResampleMetrics:
    precision: float
    recall: float
    f1: float
    accuracy: float

    @staticmethod
    def from_counts(counts: ConfusionCounts) -> "ResampleMetrics":
        return ResampleMetrics(*metrics(counts))

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_NAMES}


@dataclass(frozen=True)
class MetricsSummary:
    behavior_id: str
    model_id: str
    window_size: int
    rung: str
    resamples: tuple[ResampleMetrics, ...]
    mean: dict[str, float] = field(default_factory=dict)
    sd: dict[str, float] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "behavior": self.behavior_id,
            "model": self.model_id,
            "window": self.window_size,
            "rung": self.rung,
            "resamples": [r.as_dict() for r in self.resamples],
            "mean": self.mean,
            "sd": self.sd,
        }


def _sample_sd(values: Sequence[float]) -> float:
    if len(values) < 2:
        return 0.0
    mu = sum(values) / len(values)
    return math.sqrt(sum((v - mu) ** 2 for v in values) / (len(values) - 1))


def aggregate(
    behavior_id: str,
    model_id: str,
    window_size: int,
    rung: str,
    resamples: Sequence[ResampleMetrics],
) -> MetricsSummary:
    """Mean and sample SD (n-1 denominator, 0 when n=1) per metric."""
    if not resamples:
        raise KeyMismatch("need at least one resample")
    mean = {name: sum(getattr(r, name) for r in resamples) / len(resamples) for name in METRIC_NAMES}
    sd = {name: _sample_sd([getattr(r, name) for r in resamples]) for name in METRIC_NAMES}
    return MetricsSummary(behavior_id, model_id, window_size, rung, tuple(resamples), mean, sd)


def merge_summaries(summaries: Sequence[MetricsSummary]) -> MetricsSummary:
    """Pool per-resample metrics from summaries that share a key."""
    keys = {(s.behavior_id, s.model_id, s.window_size, s.rung) for s in summaries}
    if len(keys) != 1:
        raise KeyMismatch(f"summaries span {len(keys)} distinct keys")
    behavior, model, window, rung = next(iter(keys))
    pooled = [r for s in summaries for r in s.resamples]
    return aggregate(behavior, model, window, rung, pooled)


def save_summary(summary: MetricsSummary, path: str | Path) -> None:
    Path(path).write_text(json.dumps(summary.as_dict(), indent=2, sort_keys=True) + "\n")


def load_summary(path: str | Path) -> MetricsSummary:
    raw = json.loads(Path(path).read_text())
    resamples = tuple(ResampleMetrics(**r) for r in raw["resamples"])
    return MetricsSummary(
        raw["behavior"], raw["model"], raw["window"], str(raw["rung"]), resamples,
        raw["mean"], raw["sd"],
    )


# Tie-break order for best-model selection: fewer effective parameters first.
_COMPLEXITY_RANK = [
    "Naive Bayes",
    "Logistic Regression",
    "Support Vector Machine",
    "Random Forest",
    "NLI (1)",
    "NLI (3)",
    "NLI (5)",
]


def _complexity(model_id: str) -> int:
    try:
        return _COMPLEXITY_RANK.index(model_id)
    except ValueError:
        return len(_COMPLEXITY_RANK)


def _pct(value: float) -> str:
    return f"{value * 100:.1f}"


def collect_run_summaries(run_dir: str | Path) -> list[MetricsSummary]:
    """All metrics.json files under runs/<id>/<behavior>/<window>/<rung>/."""
    run_dir = Path(run_dir)
    out = []
    for path in sorted(run_dir.glob("*/*/*/metrics.json")):
        out.append(load_summary(path))
    return out


def emit_report(run_dir: str | Path, formats: Sequence[str] = ("md", "csv")) -> list[Path]:
    """Write per-behavior model tables, the best-model summary, and
    learning-curve files under runs/<id>/report/. Returns written paths."""
    run_dir = Path(run_dir)
    summaries = collect_run_summaries(run_dir)
    if not summaries:
        raise IncompleteRun(f"no metrics.json artifacts under {run_dir}")
    coverage_path = run_dir / "coverage.json"
    cov = json.loads(coverage_path.read_text()) if coverage_path.exists() else {}

    taxonomy = default_taxonomy()
    by_behavior: dict[str, list[MetricsSummary]] = {b: [] for b in BEHAVIOR_IDS}
    for s in summaries:
        by_behavior.setdefault(s.behavior_id, []).append(s)

    missing = [b for b in BEHAVIOR_IDS if not by_behavior[b]]
    if missing:
        raise IncompleteRun("missing artifacts for behaviors: " + ", ".join(missing))

    report_dir = run_dir / "report"
    report_dir.mkdir(parents=True, exist_ok=True)
    (report_dir / "curves").mkdir(exist_ok=True)
    written: list[Path] = []

    def emit(stem: str, header: list[str], rows: list[list[str]], footnote: str = "") -> None:
        if "csv" in formats:
            path = report_dir / f"{stem}.csv"
            lines = [",".join(header)] + [",".join(r) for r in rows]
            path.write_text("\n".join(lines) + "\n")
            written.append(path)
        if "md" in formats:
            path = report_dir / f"{stem}.md"
            lines = [
                "| " + " | ".join(header) + " |",
                "| " + " | ".join("---" for _ in header) + " |",
            ] + ["| " + " | ".join(r) + " |" for r in rows]
            if footnote:
                lines += ["", footnote]
            path.write_text("\n".join(lines) + "\n")
            written.append(path)

    zero_denominator_seen = False

    # Best-model summary: one row per behavior, full-training-set entries only
    # compete (few-shot rungs are diagnostic, not contenders).
    summary_rows = []
    for entry in taxonomy.entries:
        candidates = [s for s in by_behavior[entry.behavior_id] if s.rung == "full"]
        if not candidates:
            candidates = by_behavior[entry.behavior_id]
        best = max(candidates, key=lambda s: (s.mean["f1"], -_complexity(s.model_id)))
        if any(r.f1 == 0.0 and (r.precision == 0.0 or r.recall == 0.0) for r in best.resamples):
            zero_denominator_seen = True
        summary_rows.append(
            [
                entry.display_name,
                _pct(cov.get(entry.behavior_id, 0.0)),
                best.model_id,
                _pct(best.mean["precision"]),
                _pct(best.mean["recall"]),
                _pct(best.mean["f1"]),
            ]
        )
    footnote = (
        "Zero-valued metrics may reflect the zero-denominator convention "
        "(undefined precision/recall reported as 0)."
        if zero_denominator_seen
        else ""
    )
    emit("summary", ["Category", "Coverage (%)", "Model", "Precision", "Recall", "F1"],
         summary_rows, footnote)

    # Per-behavior model tables: every (model, window, rung) row, mean (±SD).
    for entry in taxonomy.entries:
        rows = []
        for s in sorted(by_behavior[entry.behavior_id],
                        key=lambda s: (_complexity(s.model_id), s.window_size, _rung_order(s.rung))):
            label = s.model_id if s.rung == "full" else f"{s.model_id} [{s.rung}-shot]"
            rows.append(
                [label]
                + [f"{_pct(s.mean[m])} (±{_pct(s.sd[m])})" for m in ("accuracy", "precision", "recall", "f1")]
            )
        emit(f"{entry.behavior_id}_models", ["Model", "Accuracy", "Precision", "Recall", "F1"], rows)

    # Learning-curve data: one file per (behavior, model, window) that has
    # more than one rung; one row per non-skipped rung.
    curve_groups: dict[tuple[str, str, int], list[MetricsSummary]] = {}
    for s in summaries:
        curve_groups.setdefault((s.behavior_id, s.model_id, s.window_size), []).append(s)
    for (behavior, model, window), group in sorted(curve_groups.items()):
        if len(group) < 2:
            continue
        group.sort(key=lambda s: _rung_order(s.rung))
        path = report_dir / "curves" / f"{behavior}_w{window}.csv"
        lines = ["rung,mean_f1,sd_f1"]
        for s in group:
            lines.append(f"{s.rung},{s.mean['f1']:.6f},{s.sd['f1']:.6f}")
        path.write_text("\n".join(lines) + "\n")
        written.append(path)

    return written


def _rung_order(rung: str) -> tuple[int, int]:
    if rung == "full":
        return (1, 0)
    try:
        return (0, int(rung))
    except ValueError:
        return (2, 0)
