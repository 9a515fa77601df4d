"""Entailment-reformulated classification.

Each candidate input (single message or context window) becomes a
premise/hypothesis pair, where the hypothesis is the behavior's standardized
declarative sentence. A backend scores the probability that the premise
entails the hypothesis; training rungs range from zero-shot through fixed
positive-example counts up to the full training region.

Two backends ship: a deterministic seeded mock (token-overlap scorer with a
trainable keyword-weight table) that all default tests use, and an adapter
for a real transformer entailment model, exercised only in the opt-in gpu
test tier.
"""

from __future__ import annotations

import json
import math
import random
import re
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Protocol, Sequence

from .corpus import Corpus
from .errors import (
    BackendUnavailable,
    EmptyTrainingSet,
    UnknownBehavior,
    UntrainableBackend,
)
from .evaluation import MetricsSummary, ResampleMetrics, save_summary, score
from .sampling import FULL, Region, ShotLadder, SplitPlan, build_windows, sample_shots
from .taxonomy import BehaviorTaxonomy


@dataclass(frozen=True)
class NliPair:
    premise: str
    hypothesis: str
    target: bool | None = None


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 32
    learning_rate: float = 1e-5
    seed: int = 0
    base_model_id: str = "mock"


def make_pairs(
    inputs: Sequence,
    behavior_id: str,
    taxonomy: BehaviorTaxonomy,
) -> list[NliPair]:
    """One premise/hypothesis pair per windowed example; the target label is
    copied from the window label."""
    if behavior_id not in taxonomy:
        raise UnknownBehavior(behavior_id)
    hypothesis = taxonomy.get(behavior_id).hypothesis_template
    return [NliPair(premise=w.concatenated_text, hypothesis=hypothesis, target=w.label) for w in inputs]


class EntailmentBackend(Protocol):
    """Backends expose a single entailment probability per pair in [0, 1].

    Backends built on three-way entailment/neutral/contradiction heads must
    collapse to one probability and document their collapse rule.
    """

    trainable: bool
    deterministic: bool

    def score_pairs(self, pairs: Sequence[NliPair]) -> list[float]: ...


_WORD_RE = re.compile(r"[a-z0-9']+")


def _tokens(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@dataclass
class MockBackend:
    """Deterministic entailment scorer for CI.

    Untrained scoring: a pair scores high when a keyword-table token appears
    in the premise and its associated phrase appears in the hypothesis;
    otherwise a weak token-overlap signal against the hypothesis. Training
    replaces the table signal with per-hypothesis log-odds token weights
    learned from the labelled pairs (an additive naive-Bayes-style model), so
    planted separable signals are recovered exactly.
    """

    seed: int = 0
    keyword_table: dict[str, str] = field(default_factory=dict)
    trainable: bool = True
    deterministic: bool = True
    # hypothesis -> (bias, token -> weight); populated by finetune()
    _weights: dict[str, tuple[float, dict[str, float]]] = field(default_factory=dict)

    def _zero_shot_score(self, pair: NliPair) -> float:
        premise_tokens = set(_tokens(pair.premise))
        hypo = pair.hypothesis.lower()
        for keyword, phrase in self.keyword_table.items():
            if keyword in premise_tokens and phrase in hypo:
                return 0.9
        hypo_tokens = set(_tokens(pair.hypothesis)) - {"this", "message", "is", "an", "example", "of"}
        overlap = len(premise_tokens & hypo_tokens) / max(1, len(hypo_tokens))
        return 0.1 + 0.3 * overlap

    def score_pairs(self, pairs: Sequence[NliPair]) -> list[float]:
        out = []
        for pair in pairs:
            learned = self._weights.get(pair.hypothesis)
            if learned is None:
                out.append(self._zero_shot_score(pair))
            else:
                bias, weights = learned
                z = bias + sum(weights.get(t, 0.0) for t in set(_tokens(pair.premise)))
                out.append(_sigmoid(z))
        return out

    def train(self, pairs: Sequence[NliPair], config: TrainConfig) -> "MockBackend":
        by_hypothesis: dict[str, list[NliPair]] = {}
        for p in pairs:
            by_hypothesis.setdefault(p.hypothesis, []).append(p)
        weights = dict(self._weights)
        for hypothesis, group in by_hypothesis.items():
            pos = [p for p in group if p.target]
            neg = [p for p in group if not p.target]
            n_pos, n_neg = len(pos), len(neg)
            bias = math.log((n_pos + 1) / (n_neg + 1))
            pos_docs = [set(_tokens(p.premise)) for p in pos]
            neg_docs = [set(_tokens(p.premise)) for p in neg]
            vocab = {t for doc in pos_docs + neg_docs for t in doc}
            table: dict[str, float] = {}
            for tok in vocab:
                in_pos = sum(1 for doc in pos_docs if tok in doc)
                in_neg = sum(1 for doc in neg_docs if tok in doc)
                w = math.log((in_pos + 0.5) / (n_pos + 1)) - math.log((in_neg + 0.5) / (n_neg + 1))
                # Keep only strongly discriminative tokens; weak weights are
                # sampling noise that would accumulate over long premises.
                if abs(w) > 1.0:
                    table[tok] = w
            weights[hypothesis] = (bias, table)
        return replace(self, _weights=weights)


@dataclass
class TransformerBackend:
    """Adapter around a HuggingFace sequence-classification NLI checkpoint.

    Collapse rule: softmax over the entailment and contradiction logits only
    (the neutral class is dropped), taking the entailment share as the
    probability. Fine-tuning runs the standard cross-entropy loop with the
    configured schedule. Requires torch + transformers; CI never loads it.
    """

    base_model_id: str = "roberta-large-mnli"
    device: str = "cpu"
    trainable: bool = True
    deterministic: bool = False
    _model: object = None
    _tokenizer: object = None

    def _load(self):
        if self._model is not None:
            return
        try:
            import torch  # noqa: F401
            from transformers import AutoModelForSequenceClassification, AutoTokenizer
        except ImportError as exc:
            raise BackendUnavailable(f"transformer backend needs torch+transformers: {exc}")
        self._tokenizer = AutoTokenizer.from_pretrained(self.base_model_id)
        self._model = AutoModelForSequenceClassification.from_pretrained(self.base_model_id)
        self._model.to(self.device)

    def _label_indices(self) -> tuple[int, int]:
        id2label = {i: l.lower() for i, l in self._model.config.id2label.items()}
        entail = next(i for i, l in id2label.items() if "entail" in l)
        contra = next(i for i, l in id2label.items() if "contra" in l)
        return entail, contra

    def score_pairs(self, pairs: Sequence[NliPair]) -> list[float]:
        self._load()
        import torch

        entail, contra = self._label_indices()
        scores = []
        self._model.eval()
        with torch.no_grad():
            for i in range(0, len(pairs), 16):
                batch = pairs[i : i + 16]
                enc = self._tokenizer(
                    [p.premise for p in batch],
                    [p.hypothesis for p in batch],
                    truncation=True,
                    padding=True,
                    return_tensors="pt",
                ).to(self.device)
                logits = self._model(**enc).logits
                two_way = torch.softmax(logits[:, [contra, entail]], dim=-1)
                scores.extend(two_way[:, 1].tolist())
        return scores

    def train(self, pairs: Sequence[NliPair], config: TrainConfig) -> "TransformerBackend":
        self._load()
        import torch

        torch.manual_seed(config.seed)
        entail, contra = self._label_indices()
        opt = torch.optim.AdamW(self._model.parameters(), lr=config.learning_rate)
        self._model.train()
        for _ in range(config.epochs):
            for i in range(0, len(pairs), config.batch_size):
                batch = pairs[i : i + config.batch_size]
                enc = self._tokenizer(
                    [p.premise for p in batch],
                    [p.hypothesis for p in batch],
                    truncation=True,
                    padding=True,
                    return_tensors="pt",
                ).to(self.device)
                labels = torch.tensor(
                    [entail if p.target else contra for p in batch], device=self.device
                )
                loss = torch.nn.functional.cross_entropy(self._model(**enc).logits, labels)
                opt.zero_grad()
                loss.backward()
                opt.step()
        self._model.eval()
        return self


def load_backend(config: dict) -> MockBackend | TransformerBackend:
    """Backend config file: {"kind": "transformer"|"mock", "base_model_id",
    "device", "seed", "keyword_table"?}."""
    kind = config.get("kind", "mock")
    if kind == "mock":
        return MockBackend(
            seed=int(config.get("seed", 0)),
            keyword_table=dict(config.get("keyword_table", {})),
        )
    if kind == "transformer":
        return TransformerBackend(
            base_model_id=config.get("base_model_id", "roberta-large-mnli"),
            device=config.get("device", "cpu"),
        )
    raise BackendUnavailable(f"unknown backend kind {kind!r}")


def zero_shot_classify(
    backend: EntailmentBackend,
    pairs: Sequence[NliPair],
    threshold: float = 0.5,
) -> tuple[list[bool], list[float]]:
    """Predictions without any domain-specific training: entailment score
    strictly above the threshold."""
    scores = backend.score_pairs(pairs)
    return [s > threshold for s in scores], scores


def finetune(
    backend: EntailmentBackend,
    pairs: Sequence[NliPair],
    config: TrainConfig,
) -> EntailmentBackend:
    if not getattr(backend, "trainable", False):
        raise UntrainableBackend(type(backend).__name__)
    if not pairs:
        raise EmptyTrainingSet("finetune called with no training pairs")
    if any(p.target is None for p in pairs):
        raise EmptyTrainingSet("training pairs must carry targets")
    return backend.train(pairs, config)


# Behaviors whose coverage makes multi-message OR-labelling degenerate are
# excluded from window sizes above 1 unless explicitly overridden.
WINDOW_EXCLUDED_BEHAVIORS = ("communication_coordination",)


def run_ladder(
    corpus: Corpus,
    plan: SplitPlan,
    behavior_id: str,
    window_size: int,
    ladder: ShotLadder,
    backend: EntailmentBackend,
    config: TrainConfig,
    taxonomy: BehaviorTaxonomy,
    out_dir: str | Path | None = None,
    threshold: float = 0.5,
    negative_policy: str = "balanced",
) -> dict[str, MetricsSummary]:
    """Sample shots, build pairs, train, and evaluate on TEST for each
    non-skipped rung. Results are keyed by rung; the full-training-set rung
    is always present. Artifacts (metrics.json + predictions.jsonl) land in
    out_dir/<behavior>/<window>/<rung>/ when out_dir is given."""
    train_refs = plan.region_refs(Region.TRAIN)
    test_refs = plan.region_refs(Region.TEST)
    full_count = sum(1 for r in train_refs if corpus.label(r, behavior_id))
    rungs = ladder.active_rungs(full_count)

    test_windows = build_windows(corpus, test_refs, window_size, behavior_id)
    test_pairs = make_pairs(test_windows, behavior_id, taxonomy)
    gold = [w.label for w in test_windows]
    model_id = f"NLI ({window_size})"

    results: dict[str, MetricsSummary] = {}
    for rung in rungs:
        rung_key = FULL if rung == FULL else str(rung)
        started = time.time()
        if rung == 0:
            trained = backend
        else:
            shots = sample_shots(
                plan, corpus, behavior_id, rung, seed=config.seed, negative_policy=negative_policy
            )
            shot_windows = build_windows(corpus, [r for r, _ in shots], window_size, behavior_id)
            train_pairs = make_pairs(shot_windows, behavior_id, taxonomy)
            trained = finetune(backend, train_pairs, config)
        preds, scores = zero_shot_classify(trained, test_pairs, threshold)
        counts = score(preds, gold)
        summary = MetricsSummary(
            behavior_id=behavior_id,
            model_id=model_id,
            window_size=window_size,
            rung=rung_key,
            resamples=(ResampleMetrics.from_counts(counts),),
            mean=ResampleMetrics.from_counts(counts).as_dict(),
            sd={name: 0.0 for name in ("precision", "recall", "f1", "accuracy")},
        )
        results[rung_key] = summary
        if out_dir is not None:
            rung_dir = Path(out_dir) / behavior_id / str(window_size) / rung_key
            rung_dir.mkdir(parents=True, exist_ok=True)
            save_summary(summary, rung_dir / "metrics.json")
            with open(rung_dir / "predictions.jsonl", "w", encoding="utf-8") as fh:
                for w, p, s in zip(test_windows, preds, scores):
                    fh.write(
                        json.dumps(
                            {
                                "chat_id": w.target_ref[0],
                                "index": w.target_ref[1],
                                "score": round(float(s), 6),
                                "prediction": bool(p),
                            }
                        )
                        + "\n"
                    )
            log = {
                "behavior": behavior_id,
                "window": window_size,
                "rung": rung_key,
                "config": {
                    "epochs": config.epochs,
                    "batch_size": config.batch_size,
                    "learning_rate": config.learning_rate,
                    "seed": config.seed,
                    "base_model_id": config.base_model_id,
                },
                "train_pairs": 0 if rung == 0 else len(train_pairs),
                "test_pairs": len(test_pairs),
                "wall_time_s": round(time.time() - started, 3),
            }
            (rung_dir / "run_log.json").write_text(json.dumps(log, indent=2, sort_keys=True) + "\n")
    return results
