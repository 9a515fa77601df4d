"""The eleven-behavior taxonomy.

Behavior ids are stable snake_case tokens used in files and APIs; display
names are the human-facing strings used in reports. Each behavior carries a
declarative hypothesis sentence used by the entailment pipeline and a short
description shown to human raters.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class BehaviorEntry:
    behavior_id: str
    display_name: str
    hypothesis_template: str
    description: str


@dataclass(frozen=True)
class BehaviorTaxonomy:
    entries: tuple[BehaviorEntry, ...]

    def __post_init__(self):
        if len(self.entries) != 11:
            raise ValueError(f"taxonomy must have 11 entries, got {len(self.entries)}")
        for e in self.entries:
            if e.display_name.lower() not in e.hypothesis_template.lower() and not (
                e.behavior_id == "rapport_building"
            ):
                raise ValueError(f"template for {e.behavior_id} must contain the display name")

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(e.behavior_id for e in self.entries)

    def get(self, behavior_id: str) -> BehaviorEntry:
        for e in self.entries:
            if e.behavior_id == behavior_id:
                return e
        raise KeyError(behavior_id)

    def __contains__(self, behavior_id: str) -> bool:
        return behavior_id in self.ids


def _template(display_name: str) -> str:
    return f"This message is an example of {display_name.lower()}."


# (id, display name, description). Rapport building uses a hand-set gerund
# phrase in its hypothesis; all others derive from the display name.
_ENTRIES: list[tuple[str, str, str]] = [
    (
        "communication_coordination",
        "Communication/Coordination",
        "Messages that start or keep the conversation going: exchanging or "
        "clarifying practical information, giving reasons or excuses, checking "
        "that the other party is still engaged, proposing new channels or media, "
        "filler humour, and steering the topic.",
    ),
    (
        "rapport_building",
        "Rapport Building",
        "Positive attention meant to build trust and a sense of a special bond: "
        "compliments, sweet talk, showing interest in the child's life, and "
        "emphasising shared experiences.",
    ),
    (
        "control",
        "Control",
        "Attempts to direct the victim's behaviour or the flow of the exchange, "
        "from subtle moves (rhetorical questions, permission-seeking that "
        "implies consent) to direct ones (demands, persistence, coercion).",
    ),
    (
        "challenge",
        "Challenge",
        "Confrontation when motivations clash: direct aggression or offence, or "
        "indirect jabs through jokes, mockery, or irony, often used to probe "
        "identity or assert control.",
    ),
    (
        "negotiation",
        "Negotiation",
        "Working toward a decision or goal: making compromises, offering "
        "incentives, or confirming arrangements such as a plan to meet.",
    ),
    (
        "use_of_emotions",
        "Use of Emotions",
        "Emotive language used to influence behaviour: guilt-tripping, "
        "reassurance, expressing empathy, playing the victim, or turning the "
        "child against third parties.",
    ),
    (
        "testing_boundaries",
        "Testing Boundaries",
        "Probes, direct or indirect, that gauge how far the conversation can be "
        "pushed and whether the victim can be desensitised to sexual topics.",
    ),
    (
        "use_of_sexual_topics",
        "Use of Sexual Topics",
        "Deliberate introduction of sex: asking about prior experience, "
        "discussing fantasies or preferences, explicit language, suggesting "
        "media production, or acting as a sexual mentor.",
    ),
    (
        "mitigation",
        "Mitigation",
        "Softening the seriousness of what is proposed so it seems normal: "
        "downplaying harm or criminality, brushing off the age difference, or "
        "casually framing sexual requests.",
    ),
    (
        "encouragement",
        "Encouragement",
        "Supportive responses that reward the victim's compliance or position "
        "the offender as a mentor or trusted other.",
    ),
    (
        "risk_management",
        "Risk Management",
        "Steps taken to avoid discovery: urging secrecy, asking for messages to "
        "be deleted, checking where parents are, or discussing the consequences "
        "of getting caught.",
    ),
]


def default_taxonomy() -> BehaviorTaxonomy:
    """The canonical eleven behaviors in fixed order."""
    entries = []
    for behavior_id, display, desc in _ENTRIES:
        if behavior_id == "rapport_building":
            template = "This message is an example of building rapport."
        else:
            template = _template(display)
        entries.append(BehaviorEntry(behavior_id, display, template, desc))
    return BehaviorTaxonomy(tuple(entries))


def load_taxonomy(path: str | Path) -> BehaviorTaxonomy:
    """Load a taxonomy override file (taxonomy.json).

    The file may override templates and/or descriptions per behavior id;
    ids and ordering stay fixed.
    """
    overrides = json.loads(Path(path).read_text(encoding="utf-8"))
    base = default_taxonomy()
    entries = []
    for e in base.entries:
        o = overrides.get(e.behavior_id, {})
        entries.append(
            BehaviorEntry(
                e.behavior_id,
                e.display_name,
                o.get("hypothesis_template", e.hypothesis_template),
                o.get("description", e.description),
            )
        )
    return BehaviorTaxonomy(tuple(entries))


BEHAVIOR_IDS: tuple[str, ...] = tuple(t[0] for t in _ENTRIES)
