import json
from pathlib import Path

import pytest

from groomlens import serialize_corpus
from groomlens.corpus import BehaviorLabelVector, Corpus, Message, Speaker
from groomlens.fixtures import generate_corpus
from groomlens.taxonomy import BEHAVIOR_IDS


def make_corpus(layout: list[tuple[str, str, str, list[str]]]) -> Corpus:
    """Hand-built corpus from (chat_id, speaker, text, positive_behaviors).

    Messages are appended in order per chat; offender messages always get a
    label vector (empty list = all-false).
    """
    chats: dict[str, list[Message]] = {}
    labels = {}
    for chat_id, speaker, text, positives in layout:
        idx = len(chats.setdefault(chat_id, []))
        sp = Speaker(speaker)
        chats[chat_id].append(Message(chat_id, idx, sp, text))
        if sp is Speaker.OFFENDER:
            vec = {b: b in positives for b in BEHAVIOR_IDS}
            labels[(chat_id, idx)] = BehaviorLabelVector((chat_id, idx), vec)
    return Corpus(chats={c: tuple(m) for c, m in chats.items()}, labels=labels)


@pytest.fixture(scope="session")
def small_corpus():
    return generate_corpus(seed=5, offender_messages=200)


@pytest.fixture(scope="session")
def medium_corpus():
    return generate_corpus(seed=9, offender_messages=1000)


@pytest.fixture
def corpus_files(tmp_path):
    def write(corpus, where: Path | None = None):
        where = where or tmp_path
        chats = where / "chats.jsonl"
        labels = where / "labels.jsonl"
        serialize_corpus(corpus, chats, labels)
        return chats, labels

    return write


def write_jsonl(path: Path, records: list[dict]) -> Path:
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n")
    return path


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if call.when != "call":
        return
    name = getattr(getattr(item, "function", None), "_criterion", None)
    if name is None:
        return
    # write through the terminal reporter so the line survives output capture
    reporter = item.config.pluginmanager.get_plugin("terminalreporter")
    status = "PASS" if report.passed else "FAIL"
    if reporter is not None:
        reporter.write_line(f"[ACCEPTANCE] {name}: {status}")
    else:
        print(f"[ACCEPTANCE] {name}: {status}")
