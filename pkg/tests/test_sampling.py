import pytest

from groomlens import (
    FULL,
    Region,
    ShotLadder,
    build_windows,
    coverage,
    resample,
    sample_shots,
    stratified_split,
)
from groomlens.corpus import Speaker
from groomlens.errors import CorpusTooSmall, InsufficientPositives
from groomlens.fixtures import generate_corpus
from groomlens.sampling import SEPARATOR, load_split, save_split
from groomlens.taxonomy import BEHAVIOR_IDS

from conftest import make_corpus


class TestStratifiedSplit:
    def test_region_sizes_1000(self, medium_corpus):
        plan = stratified_split(medium_corpus, seed=7)
        sizes = plan.sizes()
        assert sizes[Region.TRAIN] == 700
        assert sizes[Region.TEST] == 200
        assert sizes[Region.VALIDATION] == 100

    def test_partition(self, medium_corpus):
        plan = stratified_split(medium_corpus, seed=7)
        assert set(plan.assignment) == set(medium_corpus.labels)

    def test_per_region_coverage_within_2pp(self, medium_corpus):
        plan = stratified_split(medium_corpus, seed=3)
        cov = coverage(medium_corpus)
        for b in BEHAVIOR_IDS:
            positives = sum(1 for v in medium_corpus.labels.values() if v.labels[b])
            if positives < 50:
                continue
            for region in Region:
                refs = plan.region_refs(region)
                rate = sum(medium_corpus.label(r, b) for r in refs) / len(refs)
                assert abs(rate - cov[b]) <= 0.02, (b, region, rate, cov[b])

    def test_determinism_bytes(self, medium_corpus, tmp_path):
        for name in ("a", "b"):
            save_split(stratified_split(medium_corpus, seed=42), tmp_path / f"{name}.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_seed_changes_split(self, medium_corpus):
        a = stratified_split(medium_corpus, seed=1)
        b = stratified_split(medium_corpus, seed=2)
        assert a.assignment != b.assignment

    def test_too_small(self):
        tiny = make_corpus([("a", "offender", f"m{i}", []) for i in range(5)])
        with pytest.raises(CorpusTooSmall):
            stratified_split(tiny, seed=0)

    def test_split_round_trip(self, small_corpus, tmp_path):
        plan = stratified_split(small_corpus, seed=5)
        save_split(plan, tmp_path / "s.json")
        loaded = load_split(tmp_path / "s.json")
        assert loaded.assignment == plan.assignment
        assert loaded.seed == plan.seed


class TestResample:
    def test_three_plans(self, small_corpus):
        plans = resample(small_corpus, base_seed=10, count=3)
        assert [p.seed for p in plans] == [10, 11, 12]

    def test_count_one_identity(self, small_corpus):
        (plan,) = resample(small_corpus, base_seed=5, count=1)
        assert plan.assignment == stratified_split(small_corpus, 5).assignment

    def test_pairwise_distinct_train_sets(self, medium_corpus):
        plans = resample(medium_corpus, base_seed=0, count=3)
        trains = [frozenset(p.region_refs(Region.TRAIN)) for p in plans]
        assert trains[0] != trains[1] != trains[2] and trains[0] != trains[2]


class TestShotLadder:
    def test_skip_rule_mirrors_available_positives(self):
        ladder = ShotLadder()
        assert ladder.active_rungs(144) == [0, 25, 50, 100, FULL]
        assert ladder.active_rungs(3466) == [0, 25, 50, 100, 200, 300, 500, 1000, FULL]
        assert ladder.active_rungs(10) == [0, FULL]

    def test_rungs_strictly_increasing(self):
        with pytest.raises(ValueError):
            ShotLadder((0, 25, 25))


class TestSampleShots:
    def test_k_zero_empty(self, small_corpus):
        plan = stratified_split(small_corpus, seed=0)
        assert sample_shots(plan, small_corpus, "control", 0, seed=0) == []

    def test_balanced_counts(self, medium_corpus):
        plan = stratified_split(medium_corpus, seed=0)
        shots = sample_shots(plan, medium_corpus, "control", 25, seed=1)
        assert sum(1 for _, y in shots if y) == 25
        assert sum(1 for _, y in shots if not y) == 25

    def test_full_is_whole_train(self, small_corpus):
        plan = stratified_split(small_corpus, seed=0)
        shots = sample_shots(plan, small_corpus, "control", FULL, seed=1)
        train = plan.region_refs(Region.TRAIN)
        assert [r for r, _ in shots] == train
        assert all(y == small_corpus.label(r, "control") for r, y in shots)

    def test_insufficient_positives(self, small_corpus):
        plan = stratified_split(small_corpus, seed=0)
        with pytest.raises(InsufficientPositives):
            sample_shots(plan, small_corpus, "mitigation", 10_000, seed=0)

    def test_seed_changes_sample(self, medium_corpus):
        plan = stratified_split(medium_corpus, seed=0)
        a = {r for r, y in sample_shots(plan, medium_corpus, "control", 50, seed=1) if y}
        b = {r for r, y in sample_shots(plan, medium_corpus, "control", 50, seed=2) if y}
        assert len(a & b) < 50

    def test_determinism(self, small_corpus):
        plan = stratified_split(small_corpus, seed=0)
        assert sample_shots(plan, small_corpus, "control", 10, seed=9) == sample_shots(
            plan, small_corpus, "control", 10, seed=9
        )

    def test_natural_policy_ratio(self, medium_corpus):
        plan = stratified_split(medium_corpus, seed=0)
        train = plan.region_refs(Region.TRAIN)
        pos = sum(medium_corpus.label(r, "control") for r in train)
        neg = len(train) - pos
        shots = sample_shots(plan, medium_corpus, "control", 20, seed=0, negative_policy="natural")
        n_neg = sum(1 for _, y in shots if not y)
        assert n_neg == round(20 * neg / pos)


def alternating_chat():
    return make_corpus(
        [
            ("c", "offender", "msg zero", ["control"]),
            ("c", "decoy", "reply one", []),
            ("c", "offender", "msg two", []),
            ("c", "decoy", "reply three", []),
            ("c", "offender", "msg four", []),
        ]
    )


def runs_chat():
    # consecutive same-speaker runs exercise the alternating scan
    return make_corpus(
        [
            ("r", "offender", "o zero", []),
            ("r", "offender", "o one", ["control"]),
            ("r", "decoy", "d two", []),
            ("r", "decoy", "d three", []),
            ("r", "offender", "o four", []),
            ("r", "decoy", "d five", []),
            ("r", "offender", "o six", []),
        ]
    )


class TestBuildWindows:
    def test_window_one_identity(self):
        corpus = alternating_chat()
        (w,) = build_windows(corpus, [("c", 4)], 1, "control")
        assert w.concatenated_text == "OFFENDER: msg four"
        assert w.label is False
        assert w.member_refs == (("c", 4),)

    def test_fully_alternating_size_five(self):
        corpus = alternating_chat()
        (w,) = build_windows(corpus, [("c", 4)], 5, "control")
        assert w.member_refs == (("c", 0), ("c", 1), ("c", 2), ("c", 3), ("c", 4))
        assert w.concatenated_text == SEPARATOR.join(
            [
                "OFFENDER: msg zero",
                "DECOY: reply one",
                "OFFENDER: msg two",
                "DECOY: reply three",
                "OFFENDER: msg four",
            ]
        )

    def test_or_label_from_prior_offender(self):
        corpus = alternating_chat()
        (w,) = build_windows(corpus, [("c", 4)], 5, "control")
        # target negative, O0 positive -> window positive
        assert w.label is True

    def test_same_speaker_runs_composition(self):
        corpus = runs_chat()
        (w,) = build_windows(corpus, [("r", 6)], 5, "control")
        # scan: D5, then nearest offender before it (O4), then D3, then O1
        assert w.member_refs == (("r", 1), ("r", 3), ("r", 4), ("r", 5), ("r", 6))
        speakers = [corpus.message(m).speaker for m in w.member_refs]
        assert speakers.count(Speaker.OFFENDER) == 3
        assert speakers.count(Speaker.DECOY) == 2
        assert w.member_refs[-1] == w.target_ref
        assert w.label is True  # O1 positive

    def test_short_window_at_chat_start(self):
        corpus = alternating_chat()
        (w,) = build_windows(corpus, [("c", 0)], 5, "control")
        assert w.member_refs == (("c", 0),)

    def test_quota_never_exceeded(self, small_corpus):
        for size, max_off, max_dec in ((3, 2, 1), (5, 3, 2)):
            for w in build_windows(
                small_corpus, small_corpus.offender_refs(), size, "control"
            ):
                speakers = [small_corpus.message(m).speaker for m in w.member_refs]
                n_off = speakers.count(Speaker.OFFENDER)
                n_dec = speakers.count(Speaker.DECOY)
                assert n_off <= max_off and n_dec <= max_dec
                assert n_off >= n_dec
                assert w.member_refs[-1] == w.target_ref
                assert list(w.member_refs) == sorted(w.member_refs, key=lambda r: r[1])

    def test_window_positive_rate_dominates_single(self, small_corpus):
        refs = small_corpus.offender_refs()
        for b in BEHAVIOR_IDS:
            single = sum(small_corpus.label(r, b) for r in refs) / len(refs)
            for size in (3, 5):
                windows = build_windows(small_corpus, refs, size, b)
                rate = sum(w.label for w in windows) / len(windows)
                assert rate >= single
