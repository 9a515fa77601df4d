import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from groomlens.errors import IncompleteRun, KeyMismatch, LengthMismatch, RefMismatch
from groomlens.evaluation import (
    ConfusionCounts,
    MetricsSummary,
    ResampleMetrics,
    aggregate,
    collect_run_summaries,
    emit_report,
    load_summary,
    merge_summaries,
    metrics,
    save_summary,
    score,
)
from groomlens.taxonomy import BEHAVIOR_IDS


class TestScore:
    def test_hand_counted(self):
        preds = [True, True, False, False, True]
        gold = [True, False, False, True, True]
        counts = score(preds, gold)
        assert (counts.tp, counts.fp, counts.fn, counts.tn) == (2, 1, 1, 1)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            score([True], [True, False])

    def test_ref_mismatch(self):
        with pytest.raises(RefMismatch):
            score([True], [True], pred_refs=[("a", 0)], gold_refs=[("a", 1)])

    @given(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=50),
           st.randoms(use_true_random=False))
    @settings(max_examples=100, deadline=None)
    def test_permutation_invariant(self, pairs, rnd):
        shuffled = list(pairs)
        rnd.shuffle(shuffled)
        a = score([p for p, _ in pairs], [g for _, g in pairs])
        b = score([p for p, _ in shuffled], [g for _, g in shuffled])
        assert a == b


class TestMetrics:
    def test_large_scale_counts(self):
        # 84049 predictions: p=0.840, r=0.871 exactly by construction
        counts = ConfusionCounts(tp=73164, fp=13936, fn=10836, tn=0)
        p, r, f1, _ = metrics(counts)
        assert p == pytest.approx(0.840, abs=1e-12)
        assert r == pytest.approx(0.871, abs=1e-12)
        assert f1 == pytest.approx(2 * 0.840 * 0.871 / (0.840 + 0.871), abs=1e-12)

    def test_zero_denominator_convention(self):
        assert metrics(ConfusionCounts(0, 0, 0, 10)) == (0.0, 0.0, 0.0, 1.0)
        assert metrics(ConfusionCounts(0, 0, 5, 5)) == (0.0, 0.0, 0.0, 0.5)
        assert metrics(ConfusionCounts(0, 5, 0, 5)) == (0.0, 0.0, 0.0, 0.5)

    def test_perfect(self):
        assert metrics(ConfusionCounts(5, 0, 0, 5)) == (1.0, 1.0, 1.0, 1.0)

    @given(st.integers(0, 200), st.integers(0, 200), st.integers(0, 200), st.integers(0, 200))
    @settings(max_examples=200, deadline=None)
    def test_f1_between_precision_and_recall(self, tp, fp, fn, tn):
        p, r, f1, acc = metrics(ConfusionCounts(tp, fp, fn, tn))
        assert 0.0 <= p <= 1.0 and 0.0 <= r <= 1.0 and 0.0 <= acc <= 1.0
        assert min(p, r) - 1e-12 <= f1 <= max(p, r) + 1e-12


class TestAggregate:
    def test_mean_and_sample_sd(self):
        rs = [ResampleMetrics(0.84, 0.84, 0.84, 0.84), ResampleMetrics(0.86, 0.86, 0.86, 0.86)]
        s = aggregate("control", "Naive Bayes", 1, "full", rs)
        assert s.mean["f1"] == pytest.approx(0.85)
        # sample SD of {0.84, 0.86} = 0.02/sqrt(2)
        assert s.sd["f1"] == pytest.approx(0.014142135623730951)

    def test_single_resample_sd_zero(self):
        s = aggregate("control", "m", 1, "full", [ResampleMetrics(0.5, 0.5, 0.5, 0.5)])
        assert all(v == 0.0 for v in s.sd.values())

    def test_empty_rejected(self):
        with pytest.raises(KeyMismatch):
            aggregate("control", "m", 1, "full", [])

    @given(st.lists(st.floats(0, 1), min_size=1, max_size=8))
    @settings(max_examples=100, deadline=None)
    def test_mean_within_range_and_permutation_invariant(self, f1s):
        rs = [ResampleMetrics(f, f, f, f) for f in f1s]
        s = aggregate("b", "m", 1, "full", rs)
        assert min(f1s) - 1e-9 <= s.mean["f1"] <= max(f1s) + 1e-9
        shuffled = list(rs)
        random.Random(0).shuffle(shuffled)
        s2 = aggregate("b", "m", 1, "full", shuffled)
        # summation order may differ at the last ulp
        assert s.mean == pytest.approx(s2.mean) and s.sd == pytest.approx(s2.sd)

    def test_merge_pools_resamples(self):
        a = aggregate("b", "m", 1, "full", [ResampleMetrics(0.8, 0.8, 0.8, 0.8)])
        b = aggregate("b", "m", 1, "full", [ResampleMetrics(0.9, 0.9, 0.9, 0.9)])
        merged = merge_summaries([a, b])
        assert len(merged.resamples) == 2
        assert merged.mean["f1"] == pytest.approx(0.85)

    def test_merge_key_mismatch(self):
        a = aggregate("b", "m", 1, "full", [ResampleMetrics(0.8, 0.8, 0.8, 0.8)])
        b = aggregate("other", "m", 1, "full", [ResampleMetrics(0.9, 0.9, 0.9, 0.9)])
        with pytest.raises(KeyMismatch):
            merge_summaries([a, b])


class TestPersistence:
    def test_round_trip_and_bytes(self, tmp_path):
        s = aggregate("control", "Naive Bayes", 1, "full",
                      [ResampleMetrics(0.8, 0.7, 0.746666, 0.9)])
        save_summary(s, tmp_path / "m.json")
        loaded = load_summary(tmp_path / "m.json")
        assert loaded == s
        save_summary(loaded, tmp_path / "m2.json")
        assert (tmp_path / "m.json").read_bytes() == (tmp_path / "m2.json").read_bytes()

    def test_schema_keys(self, tmp_path):
        s = aggregate("control", "m", 3, "25", [ResampleMetrics(1, 1, 1, 1)])
        save_summary(s, tmp_path / "m.json")
        raw = json.loads((tmp_path / "m.json").read_text())
        assert set(raw) == {"behavior", "model", "window", "rung", "resamples", "mean", "sd"}


def synthetic_run(run_dir, f1_by_behavior=None, rungs=("0", "25", "full"), windows=(1,)):
    f1_by_behavior = f1_by_behavior or {}
    for b in BEHAVIOR_IDS:
        f1 = f1_by_behavior.get(b, 0.8)
        for w in windows:
            for i, rung in enumerate(rungs):
                v = max(0.0, f1 - 0.1 * (len(rungs) - 1 - i))
                s = aggregate(b, f"NLI ({w})", w, rung,
                              [ResampleMetrics(v, v, v, v), ResampleMetrics(v, v, v, v)])
                d = run_dir / b / str(w) / rung
                d.mkdir(parents=True)
                save_summary(s, d / "metrics.json")
    (run_dir / "coverage.json").write_text(
        json.dumps({b: 0.25 for b in BEHAVIOR_IDS}, sort_keys=True)
    )


class TestReport:
    def test_collect(self, tmp_path):
        synthetic_run(tmp_path)
        assert len(collect_run_summaries(tmp_path)) == 33

    def test_emit_and_idempotent(self, tmp_path):
        synthetic_run(tmp_path)
        written = emit_report(tmp_path)
        summary_csv = tmp_path / "report" / "summary.csv"
        assert summary_csv in written
        rows = summary_csv.read_text().strip().splitlines()
        assert len(rows) == 12  # header + one row per behavior
        assert rows[0] == "Category,Coverage (%),Model,Precision,Recall,F1"
        assert ",25.0," in rows[1]
        before = {p: p.read_bytes() for p in written}
        emit_report(tmp_path)
        assert {p: p.read_bytes() for p in written} == before

    def test_model_tables_and_curves(self, tmp_path):
        synthetic_run(tmp_path, windows=(1, 3))
        written = emit_report(tmp_path)
        md = (tmp_path / "report" / "control_models.md").read_text()
        assert "NLI (1) [25-shot]" in md and "(±0.0)" in md
        curve = tmp_path / "report" / "curves" / "control_w1.csv"
        assert curve in written
        lines = curve.read_text().strip().splitlines()
        assert lines[0] == "rung,mean_f1,sd_f1"
        assert [l.split(",")[0] for l in lines[1:]] == ["0", "25", "full"]

    def test_missing_behavior_fails(self, tmp_path):
        synthetic_run(tmp_path)
        import shutil

        shutil.rmtree(tmp_path / "mitigation")
        with pytest.raises(IncompleteRun) as exc:
            emit_report(tmp_path)
        assert "mitigation" in str(exc.value)

    def test_empty_run_fails(self, tmp_path):
        with pytest.raises(IncompleteRun):
            emit_report(tmp_path)

    def test_zero_denominator_footnote(self, tmp_path):
        synthetic_run(tmp_path, f1_by_behavior={"mitigation": 0.0})
        emit_report(tmp_path)
        md = (tmp_path / "report" / "summary.md").read_text()
        assert "zero-denominator" in md.lower()
