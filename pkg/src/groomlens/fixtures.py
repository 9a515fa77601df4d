"""Deterministic synthetic corpus generator.

The real chat corpus is sensitive and cannot ship with the repo, so every
test and demo runs on seeded synthetic conversations. Positive offender
messages get a behavior-specific keyword planted into otherwise generic
filler text, which makes the fixtures linearly separable: both the
bag-of-words baseline and the mock entailment backend can recover the
planted signal, giving tests a known ceiling to assert against.
"""

from __future__ import annotations

import random

from .corpus import BehaviorLabelVector, Corpus, Message, Speaker
from .taxonomy import BEHAVIOR_IDS, BehaviorTaxonomy, default_taxonomy

# One separable keyword per behavior; none are stop-words and all survive
# the rule-based lemmatizer unchanged (or with a stable lemma).
KEYWORDS: dict[str, str] = {
    "communication_coordination": "logistics",
    "rapport_building": "pretty",
    "control": "obey",
    "challenge": "liar",
    "negotiation": "bargain",
    "use_of_emotions": "guilt",
    "testing_boundaries": "boundary",
    "use_of_sexual_topics": "explicit",
    "mitigation": "harmless",
    "encouragement": "proud",
    "risk_management": "secret",
}

DEFAULT_COVERAGE: dict[str, float] = {
    "communication_coordination": 0.45,
    "rapport_building": 0.15,
    "control": 0.20,
    "challenge": 0.08,
    "negotiation": 0.20,
    "use_of_emotions": 0.16,
    "testing_boundaries": 0.30,
    "use_of_sexual_topics": 0.18,
    "mitigation": 0.06,
    "encouragement": 0.10,
    "risk_management": 0.07,
}

_OFFENDER_FILLER = [
    "hey whats up",
    "you there",
    "did you do anything fun today",
    "im bored tonight",
    "tell me about school",
    "what music do you like",
    "im watching tv right now",
    "that sounds cool",
    "haha ok",
    "so what are you up to later",
    "long day at work for me",
    "nice weather today huh",
]

_DECOY_FILLER = [
    "not much",
    "lol ok",
    "im doing homework",
    "my mom is calling me",
    "idk maybe",
    "school was boring",
    "brb",
    "ok sure",
    "that is funny",
    "i guess so",
    "haha yeah",
    "one sec",
]


def default_keyword_table(taxonomy: BehaviorTaxonomy | None = None) -> dict[str, str]:
    """Keyword -> hypothesis-phrase table for the mock backend's zero-shot path.

    Maps each planted keyword to a phrase that appears in the matching
    behavior's hypothesis sentence.
    """
    taxonomy = taxonomy or default_taxonomy()
    table = {}
    for entry in taxonomy.entries:
        if entry.behavior_id == "rapport_building":
            phrase = "building rapport"
        else:
            phrase = entry.display_name.lower()
        table[KEYWORDS[entry.behavior_id]] = phrase
    return table


def generate_corpus(
    seed: int,
    offender_messages: int,
    coverage: dict[str, float] | None = None,
    chat_size: int = 150,
    same_speaker_prob: float = 0.3,
) -> Corpus:
    """Generate a seeded synthetic corpus with exactly `offender_messages`
    labelled offender messages.

    `coverage` overrides the per-behavior positive fraction (DEFAULT_COVERAGE
    fills gaps); the realized positive count per behavior is
    round(fraction * offender_messages). `same_speaker_prob` controls
    consecutive same-speaker runs, which exercise the window builder's
    alternating scan.
    """
    rng = random.Random(seed)
    cov = {**DEFAULT_COVERAGE, **(coverage or {})}
    unknown = set(cov) - set(BEHAVIOR_IDS)
    if unknown:
        raise ValueError(f"unknown behavior ids in coverage: {sorted(unknown)}")

    # Lay out chats: speaker sequences with occasional same-speaker runs,
    # until the offender quota is met.
    chats: dict[str, list[Message]] = {}
    offender_slots: list[tuple[str, int]] = []
    chat_no = 0
    while len(offender_slots) < offender_messages:
        chat_id = f"chat{chat_no:03d}"
        chat_no += 1
        msgs: list[Message] = []
        speaker = Speaker.OFFENDER
        while len(msgs) < chat_size and len(offender_slots) < offender_messages:
            index = len(msgs)
            if speaker is Speaker.OFFENDER:
                text = rng.choice(_OFFENDER_FILLER)
                offender_slots.append((chat_id, index))
            else:
                text = rng.choice(_DECOY_FILLER)
            msgs.append(Message(chat_id, index, speaker, text))
            if rng.random() >= same_speaker_prob:
                speaker = Speaker.DECOY if speaker is Speaker.OFFENDER else Speaker.OFFENDER
        # A chat must contain at least one decoy reply to look like a dialog.
        if all(m.speaker is Speaker.OFFENDER for m in msgs):
            msgs.append(Message(chat_id, len(msgs), Speaker.DECOY, rng.choice(_DECOY_FILLER)))
        chats[chat_id] = msgs

    # Choose positives per behavior, then plant keywords into the texts.
    positives: dict[str, set[tuple[str, int]]] = {}
    for b in BEHAVIOR_IDS:
        k = round(cov[b] * len(offender_slots))
        positives[b] = set(rng.sample(offender_slots, k))

    labels: dict[tuple[str, int], BehaviorLabelVector] = {}
    for ref in offender_slots:
        vec = {b: ref in positives[b] for b in BEHAVIOR_IDS}
        chat_id, index = ref
        planted = [KEYWORDS[b] for b in BEHAVIOR_IDS if vec[b]]
        if planted:
            base = chats[chat_id][index]
            chats[chat_id][index] = Message(
                chat_id, index, Speaker.OFFENDER, base.text + " " + " ".join(planted)
            )
        labels[ref] = BehaviorLabelVector(ref, vec)

    return Corpus(
        chats={cid: tuple(msgs) for cid, msgs in chats.items()},
        labels=labels,
        provenance=f"synthetic fixture seed={seed} offender_messages={offender_messages}",
    )


def simulate_ratings(
    run_dir,
    chats_path,
    labels_path,
    out_path,
    flip_probability: float = 0.0,
    uncertain_probability: float = 0.0,
    seed: int = 0,
) -> int:
    """Write a synthetic 1-3 ratings file for a run's best predictions.

    The simulated rater starts from the gold label, flips it with
    `flip_probability`, and rates 3 when their label matches the model
    prediction, 1 when it does not; with `uncertain_probability` they rate 2
    instead. Returns the number of events written. Useful for exercising the
    agreement pipeline end to end without a human in the loop.
    """
    import json
    from pathlib import Path

    from .agreement import RatingEvent
    from .corpus import load_corpus
    from .review_service import select_best_predictions

    rng = random.Random(seed)
    corpus = load_corpus(chats_path, labels_path)
    predictions = select_best_predictions(Path(run_dir))
    events = []
    for behavior in sorted(predictions):
        for ref in sorted(predictions[behavior]):
            if ref not in corpus.labels:
                continue
            gold = corpus.label(ref, behavior)
            rater = (not gold) if rng.random() < flip_probability else gold
            if rng.random() < uncertain_probability:
                score = 2
            else:
                score = 3 if rater == predictions[behavior][ref] else 1
            events.append(
                RatingEvent(
                    session_id="simulated",
                    message_ref=ref,
                    behavior_id=behavior,
                    model_prediction=predictions[behavior][ref],
                    score=score,
                )
            )
    with open(out_path, "w", encoding="utf-8") as fh:
        for ev in events:
            fh.write(json.dumps(ev.as_dict()) + "\n")
    return len(events)
