"""Human-in-the-loop validation service.

Serves prediction batches with conversational context, records 1-3 agreement
ratings into an append-only per-session event log (fsync before acknowledge,
so acknowledged ratings survive a hard kill), and recomputes pairwise
agreement on demand.

Sessions sample contiguous random chat sections until the requested fraction
of the run's predicted offender messages is covered. Blind sessions never
expose gold labels in any API response.
"""

from __future__ import annotations

import json
import os
import random
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .agreement import (
    RatingEvent,
    UncertainPolicy,
    agreement_matrix,
    dedupe_events,
    matrix_as_dict,
)
from .corpus import Corpus, load_corpus
from .errors import (
    FractionOutOfRange,
    GroomlensError,
    InvalidScore,
    ItemNotInSession,
    NoRatings,
    RunNotFound,
    SessionExhausted,
    SessionNotFound,
)
from .evaluation import load_summary
from .taxonomy import default_taxonomy

MessageRef = tuple[str, int]

CONTEXT_MESSAGES = 5
DEFAULT_SECTION_LENGTH = 20


def select_best_predictions(run_dir: Path) -> dict[str, dict[MessageRef, bool]]:
    """Per behavior, the predictions of the artifact with the highest mean F1."""
    best: dict[str, tuple[float, Path]] = {}
    for metrics_path in sorted(run_dir.glob("*/*/*/metrics.json")):
        summary = load_summary(metrics_path)
        f1 = summary.mean.get("f1", 0.0)
        current = best.get(summary.behavior_id)
        if current is None or f1 > current[0]:
            pred_path = metrics_path.parent / "predictions.jsonl"
            if pred_path.exists():
                best[summary.behavior_id] = (f1, pred_path)
    out: dict[str, dict[MessageRef, bool]] = {}
    for behavior, (_, pred_path) in best.items():
        preds = {}
        with open(pred_path, encoding="utf-8") as fh:
            for line in fh:
                rec = json.loads(line)
                preds[(rec["chat_id"], rec["index"])] = bool(rec["prediction"])
        out[behavior] = preds
    return out


@dataclass
class ReviewSession:
    session_id: str
    run_id: str
    rater_id: str
    sample_fraction: float
    seed: int
    blind_mode: bool
    section_length: int
    item_order: list[tuple[MessageRef, str]]  # (message_ref, behavior_id)
    predictions: dict[str, dict[MessageRef, bool]] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "run_id": self.run_id,
            "rater_id": self.rater_id,
            "sample_fraction": self.sample_fraction,
            "seed": self.seed,
            "blind_mode": self.blind_mode,
            "section_length": self.section_length,
            "item_order": [
                {"chat_id": ref[0], "index": ref[1], "behavior_id": b}
                for ref, b in self.item_order
            ],
            "predictions": {
                b: [
                    {"chat_id": r[0], "index": r[1], "prediction": p}
                    for r, p in sorted(preds.items())
                ]
                for b, preds in self.predictions.items()
            },
        }

    @staticmethod
    def from_dict(raw: dict) -> "ReviewSession":
        return ReviewSession(
            session_id=raw["session_id"],
            run_id=raw["run_id"],
            rater_id=raw["rater_id"],
            sample_fraction=raw["sample_fraction"],
            seed=raw["seed"],
            blind_mode=raw["blind_mode"],
            section_length=raw["section_length"],
            item_order=[
                ((it["chat_id"], it["index"]), it["behavior_id"]) for it in raw["item_order"]
            ],
            predictions={
                b: {(r["chat_id"], r["index"]): bool(r["prediction"]) for r in recs}
                for b, recs in raw["predictions"].items()
            },
        )


def _sample_sections(
    predicted_refs: list[MessageRef],
    fraction: float,
    seed: int,
    section_length: int,
) -> list[MessageRef]:
    """Contiguous random chat sections until >= fraction of refs are covered."""
    rng = random.Random(seed)
    target = max(1, round(fraction * len(predicted_refs)))
    by_chat: dict[str, list[MessageRef]] = {}
    for ref in sorted(predicted_refs):
        by_chat.setdefault(ref[0], []).append(ref)
    chat_ids = sorted(by_chat)
    rng.shuffle(chat_ids)
    covered: list[MessageRef] = []
    seen: set[MessageRef] = set()
    while len(covered) < target and chat_ids:
        chat = chat_ids.pop()
        refs = by_chat[chat]
        start = rng.randrange(len(refs))
        # Clamp so the section keeps full length near the chat tail; otherwise
        # short tails make total coverage undershoot the requested fraction.
        start = min(start, max(0, len(refs) - section_length))
        for ref in refs[start : start + section_length]:
            if ref not in seen:
                seen.add(ref)
                covered.append(ref)
            if len(covered) >= target:
                break
    return covered


class SessionStore:
    """Filesystem-backed sessions: session.json + append-only events.jsonl."""

    def __init__(self, data_dir: str | Path, runs_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.runs_dir = Path(runs_dir)
        self._locks: dict[str, threading.Lock] = {}
        self._global = threading.Lock()
        self._corpora: dict[str, Corpus] = {}
        (self.data_dir / "sessions").mkdir(parents=True, exist_ok=True)

    def _lock(self, session_id: str) -> threading.Lock:
        with self._global:
            return self._locks.setdefault(session_id, threading.Lock())

    def _session_dir(self, session_id: str) -> Path:
        return self.data_dir / "sessions" / session_id

    def corpus_for_run(self, run_id: str) -> Corpus:
        if run_id not in self._corpora:
            manifest = self.run_manifest(run_id)
            self._corpora[run_id] = load_corpus(manifest["chats_path"], manifest["labels_path"])
        return self._corpora[run_id]

    def run_manifest(self, run_id: str) -> dict:
        path = self.runs_dir / run_id / "manifest.json"
        if not path.exists():
            raise RunNotFound(run_id)
        return json.loads(path.read_text())

    def list_runs(self) -> list[dict]:
        out = []
        for manifest in sorted(self.runs_dir.glob("*/manifest.json")):
            raw = json.loads(manifest.read_text())
            out.append({"run_id": raw.get("run_id", manifest.parent.name)})
        return out

    def create_session(
        self,
        run_id: str,
        rater_id: str,
        sample_fraction: float = 0.10,
        seed: int = 0,
        blind_mode: bool = True,
        section_length: int = DEFAULT_SECTION_LENGTH,
        session_id: str | None = None,
    ) -> ReviewSession:
        if not (0.0 < sample_fraction <= 1.0):
            raise FractionOutOfRange(f"sample_fraction must be in (0, 1], got {sample_fraction}")
        run_dir = self.runs_dir / run_id
        if not (run_dir / "manifest.json").exists():
            raise RunNotFound(run_id)
        predictions = select_best_predictions(run_dir)
        if not predictions:
            raise RunNotFound(f"run {run_id} has no prediction artifacts")

        predicted_refs = sorted({ref for preds in predictions.values() for ref in preds})
        covered = _sample_sections(predicted_refs, sample_fraction, seed, section_length)
        covered_set = set(covered)
        items = [
            (ref, behavior)
            for behavior in sorted(predictions)
            for ref in sorted(predictions[behavior])
            if ref in covered_set
        ]
        rng = random.Random(seed)
        rng.shuffle(items)

        session = ReviewSession(
            session_id=session_id or f"{run_id}-{rater_id}-{seed}",
            run_id=run_id,
            rater_id=rater_id,
            sample_fraction=sample_fraction,
            seed=seed,
            blind_mode=blind_mode,
            section_length=section_length,
            item_order=items,
            predictions=predictions,
        )
        sdir = self._session_dir(session.session_id)
        sdir.mkdir(parents=True, exist_ok=True)
        (sdir / "session.json").write_text(
            json.dumps(session.as_dict(), indent=2, sort_keys=True) + "\n"
        )
        (sdir / "events.jsonl").touch()
        return session

    def load_session(self, session_id: str) -> ReviewSession:
        path = self._session_dir(session_id) / "session.json"
        if not path.exists():
            raise SessionNotFound(session_id)
        return ReviewSession.from_dict(json.loads(path.read_text()))

    def events(self, session_id: str) -> list[RatingEvent]:
        path = self._session_dir(session_id) / "events.jsonl"
        if not path.exists():
            return []
        out = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    out.append(RatingEvent.from_dict(json.loads(line)))
                except (json.JSONDecodeError, KeyError):
                    # A torn final line from a crash is ignored; it was never
                    # acknowledged.
                    continue
        return out

    def rated_keys(self, session_id: str) -> set[tuple[MessageRef, str]]:
        return {(ev.message_ref, ev.behavior_id) for ev in self.events(session_id)}

    def next_item(self, session_id: str) -> dict:
        session = self.load_session(session_id)
        rated = self.rated_keys(session_id)
        position = None
        for i, (ref, behavior) in enumerate(session.item_order):
            if (ref, behavior) not in rated:
                position = i
                break
        if position is None:
            raise SessionExhausted(session_id)
        ref, behavior = session.item_order[position]
        corpus = self.corpus_for_run(session.run_id)
        chat = corpus.chats[ref[0]]
        lo = max(0, ref[1] - CONTEXT_MESSAGES)
        context = [
            {"chat_id": m.chat_id, "index": m.index, "speaker": m.speaker.value, "text": m.text}
            for m in chat[lo : ref[1]]
        ]
        target = chat[ref[1]]
        entry = default_taxonomy().get(behavior)
        item = {
            "position": position,
            "total": len(session.item_order),
            "chat_id": ref[0],
            "index": ref[1],
            "behavior_id": behavior,
            "behavior_name": entry.display_name,
            "behavior_description": entry.description,
            "model_prediction": session.predictions[behavior][ref],
            "context": context,
            "target": {
                "chat_id": target.chat_id,
                "index": target.index,
                "speaker": target.speaker.value,
                "text": target.text,
            },
        }
        if not session.blind_mode:
            item["gold"] = corpus.label(ref, behavior)
        return item

    def submit_rating(self, session_id: str, chat_id: str, index: int, behavior_id: str, score: int) -> dict:
        if score not in (1, 2, 3):
            raise InvalidScore(f"score must be 1, 2, or 3, got {score}")
        session = self.load_session(session_id)
        ref = (chat_id, index)
        if (ref, behavior_id) not in set(session.item_order):
            raise ItemNotInSession(f"({chat_id}, {index}, {behavior_id})")
        event = RatingEvent(
            session_id=session_id,
            message_ref=ref,
            behavior_id=behavior_id,
            model_prediction=session.predictions[behavior_id][ref],
            score=score,
            rated_at=datetime.now(timezone.utc).isoformat(),
        )
        with self._lock(session_id):
            path = self._session_dir(session_id) / "events.jsonl"
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(event.as_dict()) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        rated = len(self.rated_keys(session_id))
        total = len(session.item_order)
        return {
            "rated": rated,
            "total": total,
            "percent": round(100.0 * rated / total, 1) if total else 100.0,
            "state": "COMPLETE" if rated >= total else "OPEN",
        }

    def compact(self, session_id: str) -> int:
        """Rewrite the event log keeping only the last event per item."""
        with self._lock(session_id):
            events = dedupe_events(self.events(session_id))
            path = self._session_dir(session_id) / "events.jsonl"
            tmp = path.with_suffix(".tmp")
            with open(tmp, "w", encoding="utf-8") as fh:
                for ev in events:
                    fh.write(json.dumps(ev.as_dict()) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            tmp.replace(path)
        return len(events)

    def agreement_snapshot(self, session_id: str, policy: UncertainPolicy) -> dict:
        session = self.load_session(session_id)
        events = self.events(session_id)
        if not events:
            raise NoRatings(session_id)
        corpus = self.corpus_for_run(session.run_id)
        rated = {(ev.message_ref, ev.behavior_id) for ev in events}
        gold = {(ref, b): corpus.label(ref, b) for ref, b in rated}
        model = {(ref, b): session.predictions[b][ref] for ref, b in rated}
        matrix = agreement_matrix(gold, model, events, policy)
        return matrix_as_dict(matrix)


def create_app(data_dir: str | Path, runs_dir: str | Path, asset_dir: str | Path | None = None):
    """FastAPI app wired to a SessionStore; serves the UI bundle at / when
    asset_dir exists."""
    from fastapi import FastAPI, Request
    from fastapi.responses import JSONResponse, Response

    store = SessionStore(data_dir, runs_dir)
    app = FastAPI(title="groomlens review service")
    app.state.store = store

    _status = {
        "RUN_NOT_FOUND": 404,
        "SESSION_NOT_FOUND": 404,
        "FRACTION_OUT_OF_RANGE": 422,
        "INVALID_SCORE": 422,
        "ITEM_NOT_IN_SESSION": 422,
        "NO_RATINGS": 409,
    }

    @app.exception_handler(GroomlensError)
    async def _handle(request: Request, exc: GroomlensError):
        return JSONResponse(
            status_code=_status.get(exc.code, 400),
            content={"error": exc.code, "detail": exc.detail},
        )

    @app.get("/api/runs")
    def list_runs():
        return store.list_runs()

    @app.post("/api/sessions", status_code=201)
    def create_session(body: dict):
        session = store.create_session(
            run_id=body["run_id"],
            rater_id=body["rater_id"],
            sample_fraction=float(body.get("sample_fraction", 0.10)),
            seed=int(body.get("seed", 0)),
            blind_mode=bool(body.get("blind_mode", True)),
            section_length=int(body.get("section_length", DEFAULT_SECTION_LENGTH)),
        )
        return {
            "session": {
                "session_id": session.session_id,
                "run_id": session.run_id,
                "rater_id": session.rater_id,
                "blind_mode": session.blind_mode,
                "total_items": len(session.item_order),
            }
        }

    @app.get("/api/sessions/{session_id}/next")
    def next_item(session_id: str):
        try:
            return {"item": store.next_item(session_id)}
        except SessionExhausted:
            return Response(status_code=204)

    @app.post("/api/sessions/{session_id}/ratings")
    def submit_rating(session_id: str, body: dict):
        progress = store.submit_rating(
            session_id,
            chat_id=body["chat_id"],
            index=int(body["index"]),
            behavior_id=body["behavior_id"],
            score=int(body["score"]),
        )
        return {"progress": progress}

    @app.get("/api/sessions/{session_id}/agreement")
    def agreement(session_id: str, policy: str = "exclude"):
        chosen = (
            UncertainPolicy.UNCERTAIN_AS_AGREE
            if policy == "agree"
            else UncertainPolicy.EXCLUDE_UNCERTAIN
        )
        return store.agreement_snapshot(session_id, chosen)

    if asset_dir is not None and Path(asset_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(asset_dir), html=True), name="ui")

    return app
