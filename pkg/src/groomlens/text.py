"""Deterministic linguistic preprocessing for the bag-of-words baseline.

A rule-based suffix lemmatizer with a bundled exception table stands in for
an industrial tagger: tests need bit-stable tokenization without downloading
models. The `Preprocessor` protocol lets callers plug in a heavier
lemmatizer (e.g. a statistical tagger) behind the same interface.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Protocol

# Fixed English stop-word list, versioned here. Deliberately modest: enough
# to strip grammatical glue without eating content words.
STOP_WORDS: frozenset[str] = frozenset(
    """
    a about above after again against all am an and any are as at be because
    been before being below between both but by cannot could did do does doing
    down during each few for from further had has have having he her here hers
    herself him himself his how i if in into is it its itself just me more
    most my myself no nor not now of off on once only or other our ours
    ourselves out over own same she should so some such than that the their
    theirs them themselves then there these they this those through to too
    under until up very was we were what when where which while who whom why
    will with you your yours yourself yourselves
    """.split()
)

# Irregular forms the suffix rules cannot reach.
LEMMA_EXCEPTIONS: dict[str, str] = {
    "ran": "run",
    "went": "go",
    "gone": "go",
    "going": "go",
    "goes": "go",
    "did": "do",
    "done": "do",
    "said": "say",
    "made": "make",
    "got": "get",
    "gotten": "get",
    "came": "come",
    "saw": "see",
    "seen": "see",
    "took": "take",
    "taken": "take",
    "gave": "give",
    "given": "give",
    "told": "tell",
    "thought": "think",
    "knew": "know",
    "known": "know",
    "felt": "feel",
    "left": "leave",
    "met": "meet",
    "sent": "send",
    "children": "child",
    "men": "man",
    "women": "woman",
    "people": "person",
    "feet": "foot",
    "teeth": "tooth",
    "mice": "mouse",
    "geese": "goose",
}

_VOWELS = set("aeiou")
_TOKEN_RE = re.compile(r"[a-z0-9]+(?:'[a-z]+)?")


def _is_cvc(stem: str) -> bool:
    # consonant-vowel-consonant tail suggests a dropped silent e (mak+e).
    if len(stem) < 3:
        return False
    c2, v, c1 = stem[-3], stem[-2], stem[-1]
    return c1 not in _VOWELS and c1 not in "wxy" and v in _VOWELS and c2 not in _VOWELS


def _strip_plural(token: str) -> str:
    if token.endswith("ies") and len(token) > 4:
        return token[:-3] + "y"
    if token.endswith(("sses", "ches", "shes", "xes", "zes")):
        return token[:-2]
    if token.endswith("s") and not token.endswith(("ss", "us", "is")):
        return token[:-1]
    return token


def _strip_verb_suffix(token: str) -> str:
    for suffix in ("ing", "ed"):
        if token.endswith(suffix) and len(token) > len(suffix) + 2:
            stem = token[: -len(suffix)]
            if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-1] not in _VOWELS and stem[-1] not in "ls":
                return stem[:-1]  # running -> run
            if _is_cvc(stem):
                return stem + "e"  # making -> make
            return stem
    return token


def lemmatize(token: str) -> str:
    """Rule-based lemma for one lowercased token."""
    if token in LEMMA_EXCEPTIONS:
        return LEMMA_EXCEPTIONS[token]
    out = _strip_plural(token)
    if out in LEMMA_EXCEPTIONS:
        return LEMMA_EXCEPTIONS[out]
    return _strip_verb_suffix(out)


@dataclass(frozen=True)
class PreprocessedDoc:
    source_ref: tuple[str, int] | None
    tokens: tuple[str, ...]


class Preprocessor(Protocol):
    def __call__(self, text: str, source_ref: tuple[str, int] | None = None) -> PreprocessedDoc: ...


@dataclass(frozen=True)
class RulePreprocessor:
    """Default preprocessor: lowercase, tokenize, lemmatize, drop stop-words.

    Text that reduces to zero tokens yields an empty doc, which vectorizes
    to the zero vector downstream.
    """

    stop_words: frozenset[str] = field(default=STOP_WORDS)

    def __call__(self, text: str, source_ref: tuple[str, int] | None = None) -> PreprocessedDoc:
        tokens = []
        for raw in _TOKEN_RE.findall(text.lower()):
            if raw in self.stop_words:
                continue
            lemma = lemmatize(raw)
            if lemma and lemma not in self.stop_words:
                tokens.append(lemma)
        return PreprocessedDoc(source_ref=source_ref, tokens=tuple(tokens))


DEFAULT_PREPROCESSOR = RulePreprocessor()


def preprocess(text: str, preprocessor: Preprocessor | None = None,
               source_ref: tuple[str, int] | None = None) -> PreprocessedDoc:
    return (preprocessor or DEFAULT_PREPROCESSOR)(text, source_ref)
