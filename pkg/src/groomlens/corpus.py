"""Chat corpus data model and JSONL ingestion.

A corpus is a set of chats (ordered messages with offender/decoy speaker
roles) plus one dense eleven-key boolean label vector per offender message.
Corpora are immutable after load and safe for concurrent readers.

File formats:
  chats.jsonl  — one message per line:
                 {"chat_id", "index", "speaker": "offender"|"decoy", "text",
                  "timestamp"?}
  labels.jsonl — one labelled offender message per line, sparse (only true
                 keys required): {"chat_id", "index", "labels": {id: true}}
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable

from .errors import (
    DanglingLabel,
    DuplicateIndex,
    IncompleteLabels,
    MalformedRecord,
)
from .taxonomy import BEHAVIOR_IDS

MessageRef = tuple[str, int]


class Speaker(str, Enum):
    OFFENDER = "offender"
    DECOY = "decoy"


@dataclass(frozen=True)
class Message:
    chat_id: str
    index: int
    speaker: Speaker
    text: str
    timestamp: str | None = None

    @property
    def ref(self) -> MessageRef:
        return (self.chat_id, self.index)


@dataclass(frozen=True)
class BehaviorLabelVector:
    """Dense labels for one offender message: all 11 behavior ids present."""

    message_ref: MessageRef
    labels: dict[str, bool]

    def __post_init__(self):
        if set(self.labels) != set(BEHAVIOR_IDS):
            raise ValueError("label vector must carry exactly the 11 behavior ids")


@dataclass(frozen=True)
class Corpus:
    chats: dict[str, tuple[Message, ...]]
    labels: dict[MessageRef, BehaviorLabelVector]
    provenance: str = ""
    _by_ref: dict[MessageRef, Message] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        by_ref = {m.ref: m for msgs in self.chats.values() for m in msgs}
        object.__setattr__(self, "_by_ref", by_ref)

    def message(self, ref: MessageRef) -> Message:
        return self._by_ref[ref]

    def offender_refs(self) -> list[MessageRef]:
        """Labelled offender message refs in deterministic (chat, index) order."""
        return sorted(self.labels.keys())

    def label(self, ref: MessageRef, behavior_id: str) -> bool:
        return self.labels[ref].labels[behavior_id]

    @property
    def n_messages(self) -> int:
        return sum(len(m) for m in self.chats.values())


def _densify(sparse: dict[str, bool]) -> dict[str, bool]:
    return {b: bool(sparse.get(b, False)) for b in BEHAVIOR_IDS}


def _parse_jsonl(path: Path) -> Iterable[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(f"{path.name}:{lineno}: invalid JSON ({exc.msg})")
            if not isinstance(obj, dict):
                raise MalformedRecord(f"{path.name}:{lineno}: expected an object")
            yield lineno, obj


def load_corpus(chats_path: str | Path, labels_path: str | Path, provenance: str = "") -> Corpus:
    """Load and validate a corpus from chats.jsonl + labels.jsonl.

    Enforces: contiguous unique indices per chat, non-empty texts, labels
    only on offender messages, and complete labelling of every offender
    message.
    """
    chats_path, labels_path = Path(chats_path), Path(labels_path)

    per_chat: dict[str, dict[int, Message]] = {}
    for lineno, obj in _parse_jsonl(chats_path):
        try:
            chat_id = str(obj["chat_id"])
            index = obj["index"]
            speaker = Speaker(obj["speaker"])
            text = obj["text"]
        except (KeyError, ValueError) as exc:
            raise MalformedRecord(f"{chats_path.name}:{lineno}: {exc!r}")
        if not isinstance(index, int) or index < 0:
            raise MalformedRecord(f"{chats_path.name}:{lineno}: index must be a non-negative int")
        if not isinstance(text, str) or not text.strip():
            raise MalformedRecord(f"{chats_path.name}:{lineno}: text must be non-empty")
        msg = Message(chat_id, index, speaker, text, obj.get("timestamp"))
        bucket = per_chat.setdefault(chat_id, {})
        if index in bucket:
            raise DuplicateIndex(f"chat {chat_id!r} index {index} appears twice")
        bucket[index] = msg

    chats: dict[str, tuple[Message, ...]] = {}
    for chat_id, bucket in per_chat.items():
        indices = sorted(bucket)
        if indices != list(range(len(indices))):
            raise MalformedRecord(
                f"chat {chat_id!r}: indices must be contiguous from 0, got {indices[:5]}..."
            )
        chats[chat_id] = tuple(bucket[i] for i in indices)

    by_ref = {m.ref: m for msgs in chats.values() for m in msgs}

    labels: dict[MessageRef, BehaviorLabelVector] = {}
    for lineno, obj in _parse_jsonl(labels_path):
        try:
            ref = (str(obj["chat_id"]), int(obj["index"]))
            sparse = obj["labels"]
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedRecord(f"{labels_path.name}:{lineno}: {exc!r}")
        if not isinstance(sparse, dict):
            raise MalformedRecord(f"{labels_path.name}:{lineno}: labels must be an object")
        unknown = set(sparse) - set(BEHAVIOR_IDS)
        if unknown:
            raise MalformedRecord(
                f"{labels_path.name}:{lineno}: unknown behavior ids {sorted(unknown)}"
            )
        msg = by_ref.get(ref)
        if msg is None:
            raise DanglingLabel(f"label references missing message {ref}")
        if msg.speaker is not Speaker.OFFENDER:
            raise DanglingLabel(f"label on decoy message {ref}; only offender messages are labelled")
        labels[ref] = BehaviorLabelVector(ref, _densify(sparse))

    offender_refs = {m.ref for m in by_ref.values() if m.speaker is Speaker.OFFENDER}
    missing = offender_refs - set(labels)
    if missing:
        example = sorted(missing)[0]
        raise IncompleteLabels(f"{len(missing)} offender messages without labels, e.g. {example}")

    return Corpus(chats=chats, labels=labels, provenance=provenance)


def serialize_corpus(corpus: Corpus, chats_path: str | Path, labels_path: str | Path) -> None:
    """Write chats.jsonl + labels.jsonl (sparse labels, deterministic order)."""
    with open(chats_path, "w", encoding="utf-8") as fh:
        for chat_id in sorted(corpus.chats):
            for m in corpus.chats[chat_id]:
                rec = {"chat_id": m.chat_id, "index": m.index, "speaker": m.speaker.value, "text": m.text}
                if m.timestamp is not None:
                    rec["timestamp"] = m.timestamp
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    with open(labels_path, "w", encoding="utf-8") as fh:
        for ref in sorted(corpus.labels):
            vec = corpus.labels[ref]
            sparse = {b: True for b in BEHAVIOR_IDS if vec.labels[b]}
            fh.write(
                json.dumps({"chat_id": ref[0], "index": ref[1], "labels": sparse}, ensure_ascii=False)
                + "\n"
            )


def coverage(corpus: Corpus) -> dict[str, float]:
    """Per-behavior fraction of labelled offender messages that are positive."""
    total = len(corpus.labels)
    cov = {}
    for b in BEHAVIOR_IDS:
        if total == 0:
            cov[b] = 0.0
        else:
            cov[b] = sum(1 for v in corpus.labels.values() if v.labels[b]) / total
    return cov
