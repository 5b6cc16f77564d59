import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neosleep import dataio
from neosleep.dataio import (
    Annotation,
    EegRecord,
    RecordParseError,
    Stage,
    SynthConfig,
    generate_synthetic,
    label_and_filter,
    load_record,
    segment,
)
from neosleep.features import spectral_features


def write(path, text):
    path.write_text(text)
    return path


def grid_fraction(epoch_start, epoch_end, spans, step=1e-4):
    """Independent overlap oracle: share of a fine time grid covered by spans."""
    t = np.arange(epoch_start + step / 2, epoch_end, step)
    covered = np.zeros(len(t), dtype=bool)
    for a, b in spans:
        covered |= (t >= a) & (t < b)
    return covered.mean()


class TestLoadRecord:
    def test_two_sample_file(self, tmp_path):
        rec = load_record(write(tmp_path / "r.txt", "fs=500\n1.5\n-2.0\n"))
        assert rec.fs == 500
        np.testing.assert_array_equal(rec.samples, [1.5, -2.0])
        assert rec.record_id == "r"
        assert rec.annotations == ()

    def test_annotations_parsed_case_insensitive(self, tmp_path):
        write(tmp_path / "r.txt", "fs=2\n" + "0\n" * 20)
        write(tmp_path / "r.ann.csv", "start_s,end_s,kind\n0,5,Sleep\n5,10,WAKE\n2,3,artifact\n")
        rec = load_record(tmp_path / "r.txt")
        assert [a.kind for a in rec.annotations] == [Stage.SLEEP, Stage.WAKE, Stage.ARTIFACT]

    def test_annotation_end_before_start(self, tmp_path):
        write(tmp_path / "r.txt", "fs=1\n" + "0\n" * 10)
        write(tmp_path / "r.ann.csv", "start_s,end_s,kind\n0,5,sleep\n6,4,wake\n")
        with pytest.raises(RecordParseError) as err:
            load_record(tmp_path / "r.txt")
        assert err.value.line == 3

    def test_annotation_ending_at_duration_accepted(self, tmp_path):
        write(tmp_path / "r.txt", "fs=1\n" + "0\n" * 10)
        write(tmp_path / "r.ann.csv", "start_s,end_s,kind\n0,10,sleep\n")
        assert load_record(tmp_path / "r.txt").annotations[0].end_s == 10

    def test_annotation_past_duration_rejected(self, tmp_path):
        write(tmp_path / "r.txt", "fs=1\n" + "0\n" * 10)
        write(tmp_path / "r.ann.csv", "start_s,end_s,kind\n0,10.5,sleep\n")
        with pytest.raises(RecordParseError, match="outside record duration") as err:
            load_record(tmp_path / "r.txt")
        assert err.value.line == 2

    @pytest.mark.parametrize("header", ["500", "rate=500", "fs=abc", "fs=-1", ""])
    def test_malformed_header(self, tmp_path, header):
        with pytest.raises(RecordParseError) as err:
            load_record(write(tmp_path / "r.txt", header + "\n1\n"))
        assert err.value.line == 1

    def test_non_numeric_sample_names_line(self, tmp_path):
        with pytest.raises(RecordParseError, match="r.txt:4") as err:
            load_record(write(tmp_path / "r.txt", "fs=10\n1\n2\nxx\n4\n"))
        assert err.value.line == 4

    def test_unknown_kind(self, tmp_path):
        write(tmp_path / "r.txt", "fs=1\n" + "0\n" * 10)
        write(tmp_path / "r.ann.csv", "start_s,end_s,kind\n0,5,rem\n")
        with pytest.raises(RecordParseError, match="unknown annotation kind"):
            load_record(tmp_path / "r.txt")

    def test_save_load_roundtrip(self, tmp_path):
        recs, _ = generate_synthetic(SynthConfig(n_records=1, record_seconds=90, fs=50, seed=3,
                                                 artifact_fraction=0.4))
        path = dataio.save_record(recs[0], tmp_path)
        back = load_record(path)
        np.testing.assert_allclose(back.samples, recs[0].samples, atol=5e-7)
        assert back.annotations == recs[0].annotations


def test_overlapping_wake_sleep_rejected():
    with pytest.raises(ValueError, match="overlap"):
        EegRecord("r", 1.0, np.zeros(10), (Annotation(0, 6, Stage.SLEEP), Annotation(5, 10, Stage.WAKE)))


def test_annotation_invariant():
    with pytest.raises(ValueError):
        Annotation(3.0, 3.0, Stage.SLEEP)


class TestSegment:
    def test_two_hours_at_500(self):
        rec = EegRecord("r", 500.0, np.zeros(2 * 3600 * 500))
        epochs = segment(rec, 30)
        assert len(epochs) == 240
        assert {len(e.samples) for e in epochs} == {15000}
        assert len(epochs) * 19 == 4560

    def test_partial_epoch_dropped(self):
        epochs = segment(EegRecord("r", 10.0, np.arange(350.0)), 30)
        assert len(epochs) == 1 and len(epochs[0].samples) == 300

    def test_shorter_than_epoch(self):
        assert segment(EegRecord("r", 10.0, np.arange(290.0)), 30) == []

    def test_empty_record(self):
        assert segment(EegRecord("r", 10.0, np.array([])), 30) == []

    def test_too_few_samples_per_epoch(self):
        with pytest.raises(ValueError):
            segment(EegRecord("r", 1.0, np.arange(10.0)), 1.0)

    @settings(max_examples=60, deadline=None)
    @given(n=st.integers(0, 2000), fs=st.sampled_from([2.0, 10.0, 100.0, 128.0]),
           epoch_s=st.sampled_from([1.0, 2.5, 4.0, 30.0]))
    def test_partition_property(self, n, fs, epoch_s):
        x = np.arange(float(n))
        epochs = segment(EegRecord("r", fs, x), epoch_s)
        assert [e.index for e in epochs] == list(range(len(epochs)))
        joined = np.concatenate([e.samples for e in epochs]) if epochs else np.array([])
        np.testing.assert_array_equal(joined, x[:len(joined)])
        assert len(x) - len(joined) < max(int(round(epoch_s * fs)), 1)


def _one_epoch_record(anns, seconds=30, fs=10.0):
    return EegRecord("r", fs, np.zeros(int(seconds * fs)), tuple(anns))


class TestLabelAndFilter:
    def test_five_percent_artifact_excluded(self):
        rec = _one_epoch_record([Annotation(0, 30, Stage.WAKE), Annotation(10.0, 11.5, Stage.ARTIFACT)])
        assert label_and_filter(segment(rec, 30), rec) == []

    def test_below_threshold_kept(self):
        spans = [(10.0, 11.4)]
        frac = grid_fraction(0, 30, spans)
        assert frac == pytest.approx(1.4 / 30, abs=1e-6)
        assert frac < 0.05
        rec = _one_epoch_record([Annotation(0, 30, Stage.WAKE), Annotation(10.0, 11.4, Stage.ARTIFACT)])
        kept = label_and_filter(segment(rec, 30), rec)
        assert len(kept) == 1 and kept[0].label is Stage.WAKE

    def test_clean_sleep_kept(self):
        rec = _one_epoch_record([Annotation(0, 30, Stage.SLEEP)])
        kept = label_and_filter(segment(rec, 30), rec)
        assert [e.label for e in kept] == [Stage.SLEEP]

    def test_no_majority_dropped(self):
        rec = _one_epoch_record([Annotation(0, 15, Stage.SLEEP), Annotation(15, 30, Stage.WAKE)])
        assert label_and_filter(segment(rec, 30), rec) == []

    def test_unannotated_dropped(self):
        rec = _one_epoch_record([])
        assert label_and_filter(segment(rec, 30), rec) == []

    def test_overlapping_artifacts_not_double_counted(self):
        # two artifact marks over the same 1 s: 3.3% coverage, kept
        rec = _one_epoch_record([Annotation(0, 30, Stage.SLEEP), Annotation(5, 6, Stage.ARTIFACT),
                                 Annotation(5, 6, Stage.ARTIFACT)])
        assert len(label_and_filter(segment(rec, 30), rec)) == 1

    def test_majority_over_epoch_boundary(self):
        rec = EegRecord("r", 10.0, np.zeros(600), (Annotation(0, 40, Stage.SLEEP), Annotation(40, 60, Stage.WAKE)))
        kept = label_and_filter(segment(rec, 30), rec)
        assert [e.label for e in kept] == [Stage.SLEEP, Stage.WAKE]

    def test_threshold_range(self):
        rec = _one_epoch_record([Annotation(0, 30, Stage.SLEEP)])
        with pytest.raises(ValueError):
            label_and_filter(segment(rec, 30), rec, 0.0)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(st.floats(0, 295), st.floats(0.1, 10)), max_size=8),
           st.floats(0.01, 1.0), st.floats(0.01, 1.0))
    def test_exclusion_monotone(self, marks, t1, t2):
        lo, hi = sorted((t1, t2))
        anns = [Annotation(0, 300, Stage.SLEEP)]
        anns += [Annotation(a, min(a + d, 300), Stage.ARTIFACT) for a, d in marks]
        rec = EegRecord("r", 10.0, np.zeros(3000), tuple(anns))
        epochs = segment(rec, 30)
        kept_lo = {e.index for e in label_and_filter(epochs, rec, lo)}
        kept_hi = {e.index for e in label_and_filter(epochs, rec, hi)}
        assert kept_lo <= kept_hi

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.tuples(st.floats(0, 295), st.floats(0.1, 10)), max_size=6))
    def test_artifact_fraction_matches_grid_oracle(self, marks):
        anns = [Annotation(a, min(a + d, 300), Stage.ARTIFACT) for a, d in marks]
        rec = EegRecord("r", 10.0, np.zeros(3000), tuple(anns))
        for ep in segment(rec, 30):
            expected = grid_fraction(ep.start_s, ep.end_s, [(a.start_s, a.end_s) for a in anns], step=1e-3)
            assert dataio.artifact_fraction(ep, rec) == pytest.approx(expected, abs=2e-4)


class TestSynthetic:
    CFG = SynthConfig(n_records=3, record_seconds=600, fs=100, wake_fraction=0.4, seed=11)

    def test_deterministic(self):
        a, ta = generate_synthetic(self.CFG)
        b, tb = generate_synthetic(self.CFG)
        assert ta == tb
        for ra, rb in zip(a, b):
            assert ra.samples.tobytes() == rb.samples.tobytes()
            assert ra.annotations == rb.annotations

    def test_seed_changes_output(self):
        a, _ = generate_synthetic(self.CFG)
        b, _ = generate_synthetic(SynthConfig(**{**self.CFG.__dict__, "seed": 12}))
        assert a[0].samples.tobytes() != b[0].samples.tobytes()

    def test_all_sleep(self):
        _, truth = generate_synthetic(SynthConfig(n_records=2, record_seconds=300, fs=50, wake_fraction=0.0))
        assert all(lab is Stage.SLEEP for labs in truth.values() for lab in labs)

    def test_class_balance(self):
        _, truth = generate_synthetic(self.CFG)
        for labs in truth.values():
            assert sum(lab is Stage.WAKE for lab in labs) == round(0.4 * 20)

    def test_epoch_count(self):
        # count depends only on record length / epoch length; fs kept low for speed
        recs, truth = generate_synthetic(SynthConfig(n_records=19, record_seconds=7200, fs=2.0))
        assert sum(len(segment(r, 30)) for r in recs) == 4560
        assert sum(map(len, truth.values())) == 4560

    def test_pipeline_recovers_truth(self):
        cfg = SynthConfig(n_records=2, record_seconds=900, fs=50, wake_fraction=0.5, seed=5,
                          artifact_fraction=0.2)
        recs, truth = generate_synthetic(cfg)
        for rec in recs:
            epochs = segment(rec, 30)
            kept = label_and_filter(epochs, rec)
            assert len(kept) == len(epochs) - round(0.2 * 30)
            for ep in kept:
                assert ep.label is truth[rec.record_id][ep.index]

    def test_noise_free_separable_by_centroid(self):
        recs, truth = generate_synthetic(SynthConfig(n_records=2, record_seconds=1200, fs=100, seed=2))
        cents, ys = [], []
        for rec in recs:
            for ep in label_and_filter(segment(rec, 30), rec):
                cents.append(spectral_features(ep.samples, rec.fs)[0])
                ys.append(ep.label is Stage.WAKE)
        cents, ys = np.array(cents), np.array(ys)
        order = np.sort(cents)
        cuts = (order[:-1] + order[1:]) / 2
        best = max(np.mean((cents > c) == ys) for c in cuts)
        assert best == 1.0

    @pytest.mark.parametrize("bad", [dict(n_records=0), dict(record_seconds=0), dict(fs=0),
                                     dict(wake_fraction=1.5), dict(record_seconds=1e-4, fs=1)])
    def test_invalid_config(self, bad):
        with pytest.raises(ValueError):
            SynthConfig(**bad)


def test_labels_roundtrip(tmp_path):
    rows = [("a", 0, Stage.WAKE), ("a", 1, Stage.SLEEP), ("b", 0, None)]
    dataio.write_labels(tmp_path / "l.csv", rows)
    assert dataio.read_labels(tmp_path / "l.csv") == rows
    assert (tmp_path / "l.csv").read_text().splitlines()[0] == "record_id,epoch_index,label"
