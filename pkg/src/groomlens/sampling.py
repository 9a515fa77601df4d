"""Region splitting, few-shot sampling ladders, and context-window construction.

All operations are pure functions of (corpus, seed): identical inputs give
identical outputs across runs and platforms.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .corpus import Corpus, MessageRef, Speaker
from .errors import CorpusTooSmall, InsufficientPositives
from .taxonomy import BEHAVIOR_IDS

FRACTIONS = (0.70, 0.20, 0.10)
DEFAULT_RUNGS = (0, 25, 50, 100, 200, 300, 500, 1000)
FULL = "full"
SEPARATOR = " </s> "


class Region(str, Enum):
    TRAIN = "train"
    TEST = "test"
    VALIDATION = "validation"


@dataclass(frozen=True)
class SplitPlan:
    seed: int
    assignment: dict[MessageRef, Region]
    fractions: tuple[float, float, float] = FRACTIONS

    def region_refs(self, region: Region) -> list[MessageRef]:
        return sorted(ref for ref, r in self.assignment.items() if r is region)

    def sizes(self) -> dict[Region, int]:
        out = {r: 0 for r in Region}
        for r in self.assignment.values():
            out[r] += 1
        return out


def _targets(n: int, fractions=FRACTIONS) -> dict[Region, int]:
    t_train = round(fractions[0] * n)
    t_test = round(fractions[1] * n)
    return {Region.TRAIN: t_train, Region.TEST: t_test, Region.VALIDATION: n - t_train - t_test}


def stratified_split(corpus: Corpus, seed: int) -> SplitPlan:
    """Greedy iterative multi-label stratification over labelled offender messages.

    Messages are processed label by label, rarest positive label first; each
    message goes to the region currently most short of that label (subject to
    remaining capacity). Unlabelled-positive messages fill remaining capacity
    last. Deterministic per seed; region sizes land exactly on the rounded
    70/20/10 targets.
    """
    refs = corpus.offender_refs()
    if len(refs) < 10:
        raise CorpusTooSmall(f"need >= 10 labelled messages, got {len(refs)}")
    rng = random.Random(seed)

    capacity = _targets(len(refs))
    label_totals = {b: sum(1 for r in refs if corpus.label(r, b)) for b in BEHAVIOR_IDS}
    # Per-region desired positive counts, proportional to region fractions.
    demand = {
        b: {reg: label_totals[b] * cap / len(refs) for reg, cap in capacity.items()}
        for b in BEHAVIOR_IDS
    }

    assignment: dict[MessageRef, Region] = {}
    regions = list(Region)

    def assign(ref: MessageRef, region: Region) -> None:
        assignment[ref] = region
        capacity[region] -= 1
        vec = corpus.labels[ref].labels
        for b in BEHAVIOR_IDS:
            if vec[b]:
                demand[b][region] -= 1

    for b in sorted(BEHAVIOR_IDS, key=lambda b: (label_totals[b], b)):
        pending = [r for r in refs if corpus.label(r, b) and r not in assignment]
        rng.shuffle(pending)
        for ref in pending:
            open_regions = [reg for reg in regions if capacity[reg] > 0]
            best = max(
                open_regions,
                key=lambda reg: (demand[b][reg], capacity[reg], rng.random()),
            )
            assign(ref, best)

    rest = [r for r in refs if r not in assignment]
    rng.shuffle(rest)
    for ref in rest:
        open_regions = [reg for reg in regions if capacity[reg] > 0]
        best = max(open_regions, key=lambda reg: (capacity[reg], rng.random()))
        assign(ref, best)

    return SplitPlan(seed=seed, assignment=assignment)


def resample(corpus: Corpus, base_seed: int, count: int) -> list[SplitPlan]:
    """`count` independent stratified splits with seeds base_seed..base_seed+count-1."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return [stratified_split(corpus, base_seed + i) for i in range(count)]


def save_split(plan: SplitPlan, path: str | Path) -> None:
    records = [
        {"chat_id": ref[0], "index": ref[1], "region": region.value}
        for ref, region in sorted(plan.assignment.items())
    ]
    payload = {"seed": plan.seed, "fractions": list(plan.fractions), "assignment": records}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_split(path: str | Path) -> SplitPlan:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    assignment = {
        (rec["chat_id"], rec["index"]): Region(rec["region"]) for rec in payload["assignment"]
    }
    return SplitPlan(
        seed=payload["seed"], assignment=assignment, fractions=tuple(payload["fractions"])
    )


@dataclass(frozen=True)
class ShotLadder:
    """Ordered few-shot rungs; rungs with k >= the behavior's positive TRAIN
    count are skipped and the full-training-set rung is always present."""

    rungs: tuple[int, ...] = DEFAULT_RUNGS

    def __post_init__(self):
        if list(self.rungs) != sorted(set(self.rungs)):
            raise ValueError("rungs must be strictly increasing")

    def active_rungs(self, full_count: int) -> list[int | str]:
        out: list[int | str] = [k for k in self.rungs if k < full_count]
        out.append(FULL)
        return out


def sample_shots(
    plan: SplitPlan,
    corpus: Corpus,
    behavior_id: str,
    k: int | str,
    seed: int,
    negative_policy: str = "balanced",
) -> list[tuple[MessageRef, bool]]:
    """Training examples for one rung.

    Finite k: k positives uniform without replacement from TRAIN plus
    negatives per policy (`balanced`: k negatives; `natural`: negatives
    scaled to the TRAIN class ratio). k == FULL: the whole TRAIN region at
    its natural ratio. Returns (ref, label) pairs in a deterministic order.
    """
    train = plan.region_refs(Region.TRAIN)
    pos = [r for r in train if corpus.label(r, behavior_id)]
    neg = [r for r in train if not corpus.label(r, behavior_id)]

    if k == FULL:
        return [(r, corpus.label(r, behavior_id)) for r in train]
    assert isinstance(k, int)
    if k == 0:
        return []
    if k > len(pos):
        raise InsufficientPositives(
            f"{behavior_id}: k={k} exceeds {len(pos)} available TRAIN positives"
        )
    rng = random.Random(seed)
    chosen_pos = rng.sample(pos, k)
    if negative_policy == "balanced":
        n_neg = min(k, len(neg))
    elif negative_policy == "natural":
        n_neg = min(len(neg), round(k * len(neg) / max(1, len(pos))))
    else:
        raise ValueError(f"unknown negative policy {negative_policy!r}")
    chosen_neg = rng.sample(neg, n_neg)
    out = [(r, True) for r in chosen_pos] + [(r, False) for r in chosen_neg]
    out.sort(key=lambda item: item[0])
    return out


@dataclass(frozen=True)
class WindowedExample:
    target_ref: MessageRef
    window_size: int
    concatenated_text: str
    member_refs: tuple[MessageRef, ...]
    label: bool
    offender_members: tuple[MessageRef, ...] = field(default=(), compare=False)


def _window_members(corpus: Corpus, target: MessageRef, window_size: int) -> list[MessageRef]:
    """Backward alternating scan from the target offender message.

    Wanted-speaker sequence below the target is decoy, offender, decoy,
    offender, ... up to the size quota (size 3: +1 each; size 5: +2 each).
    The scan for each wanted speaker walks toward the chat start; if none is
    found the window ends early (short windows at chat start are allowed).
    """
    chat = corpus.chats[target[0]]
    members = [target]
    extra_pairs = (window_size - 1) // 2
    wanted = [Speaker.DECOY, Speaker.OFFENDER] * extra_pairs
    cursor = target[1] - 1
    for speaker in wanted:
        while cursor >= 0 and chat[cursor].speaker is not speaker:
            cursor -= 1
        if cursor < 0:
            break
        members.append(chat[cursor].ref)
        cursor -= 1
    members.sort(key=lambda ref: ref[1])
    return members


def build_windows(
    corpus: Corpus,
    region_refs: list[MessageRef],
    window_size: int,
    behavior_id: str,
) -> list[WindowedExample]:
    """One example per offender message, labelled by OR over the window's
    offender members; texts joined in conversation order with speaker
    prefixes and the `SEPARATOR` token."""
    if window_size not in (1, 3, 5):
        raise ValueError("window_size must be 1, 3, or 5")
    out = []
    for target in sorted(region_refs):
        members = _window_members(corpus, target, window_size)
        parts = []
        offender_members = []
        label = False
        for ref in members:
            msg = corpus.message(ref)
            prefix = "OFFENDER: " if msg.speaker is Speaker.OFFENDER else "DECOY: "
            parts.append(prefix + msg.text)
            if msg.speaker is Speaker.OFFENDER:
                offender_members.append(ref)
                if ref in corpus.labels and corpus.label(ref, behavior_id):
                    label = True
        out.append(
            WindowedExample(
                target_ref=target,
                window_size=window_size,
                concatenated_text=SEPARATOR.join(parts),
                member_refs=tuple(members),
                label=label,
                offender_members=tuple(offender_members),
            )
        )
    return out
