"""Stream sources: CSV round-trips, blob generation oracles, drift."""

import pytest
from sklearn.naive_bayes import GaussianNB

from colabel.errors import RejectedInput
from colabel.records import CATEGORICAL, NUMERIC, FeatureSpec, Schema
from colabel.stream import DriftSpec, apply_drift, gen_blobs, load_csv, write_csv


def reference_accuracy(rows, schema, train_frac=0.5) -> float:
    """Independent oracle: a batch GaussianNB trained on the head of the
    stream, scored on the tail."""
    split = int(len(rows) * train_frac)
    X = [list(r.features) for r, _ in rows]
    y = [lab for _, lab in rows]
    clf = GaussianNB().fit(X[:split], y[:split])
    return clf.score(X[split:], y[split:])


class TestLoadCsv:
    def schema(self):
        return Schema(
            features=(FeatureSpec("a", NUMERIC), FeatureSpec("b", NUMERIC)),
            label_column="label",
            labels=("A", "B"),
        )

    def test_well_formed_file(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("a,b,label\n1.0,2.0,A\n3.5,-1.0,B\n0.0,0.0,A\n")
        rows = load_csv(path, self.schema())
        assert [r.t for r, _ in rows] == [0, 1, 2]
        assert rows[1][0].features == (3.5, -1.0)
        assert [lab for _, lab in rows] == ["A", "B", "A"]

    def test_unknown_label_names_row(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("a,b,label\n1.0,2.0,A\n3.5,-1.0,Z\n")
        with pytest.raises(RejectedInput, match="row 1"):
            load_csv(path, self.schema())

    def test_bad_numeric_cell_names_row(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("a,b,label\nok,2.0,A\n")
        with pytest.raises(RejectedInput, match="row 0"):
            load_csv(path, self.schema())

    def test_header_mismatch(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("a,wrong,label\n1.0,2.0,A\n")
        with pytest.raises(RejectedInput, match="header"):
            load_csv(path, self.schema())

    def test_unknown_category_names_row(self, tmp_path):
        schema = Schema(
            features=(FeatureSpec("color", CATEGORICAL, ("red", "blue")),),
            label_column="label",
            labels=("A", "B"),
        )
        path = tmp_path / "data.csv"
        path.write_text("color,label\nred,A\ngreen,B\n")
        with pytest.raises(RejectedInput, match="row 1"):
            load_csv(path, schema)

    def test_round_trip_is_exact(self, tmp_path):
        schema, rows = gen_blobs(50, 2, dims=3, separation=2.0, seed=9)
        path = tmp_path / "blobs.csv"
        write_csv(path, schema, rows)
        loaded = load_csv(path, schema)
        assert loaded == rows  # bit-exact floats via repr round-trip


class TestGenBlobs:
    def test_indistinguishable_at_zero_separation(self):
        _, rows = gen_blobs(2000, 2, dims=2, separation=0.0, seed=1)
        schema, _ = gen_blobs(2, 2)
        assert reference_accuracy(rows, schema) == pytest.approx(0.5, abs=0.05)

    def test_nearly_separable_at_six(self):
        schema, rows = gen_blobs(2000, 2, dims=2, separation=6.0, seed=1)
        assert reference_accuracy(rows, schema) >= 0.99

    def test_same_seed_identical_streams(self):
        a = gen_blobs(100, 3, dims=2, separation=3.0, seed=42)
        b = gen_blobs(100, 3, dims=2, separation=3.0, seed=42)
        assert a == b

    def test_different_seed_differs(self):
        _, a = gen_blobs(50, 2, seed=1)
        _, b = gen_blobs(50, 2, seed=2)
        assert a != b

    def test_label_balance_within_one(self):
        for n, classes in ((1000, 2), (1001, 2), (100, 3), (101, 3)):
            _, rows = gen_blobs(n, classes, seed=5)
            counts = {}
            for _, lab in rows:
                counts[lab] = counts.get(lab, 0) + 1
            assert max(counts.values()) - min(counts.values()) <= 1

    def test_replayable_iteration(self):
        _, rows = gen_blobs(20, 2, seed=3)
        assert list(rows) == list(rows)


class TestApplyDrift:
    def test_past_end_is_identity(self):
        _, rows = gen_blobs(30, 2, seed=8)
        spec = DriftSpec(kind="label_flip", at_t=30, mapping={"c0": "c1", "c1": "c0"})
        assert apply_drift(rows, spec) == rows

    def test_flip_at_zero_swaps_everything(self):
        _, rows = gen_blobs(30, 2, seed=8)
        spec = DriftSpec(kind="label_flip", at_t=0, mapping={"c0": "c1", "c1": "c0"})
        flipped = apply_drift(rows, spec)
        assert all(
            (a == "c0") == (b == "c1") for (_, a), (_, b) in zip(rows, flipped)
        )

    def test_flip_at_600_affects_exactly_400(self):
        _, rows = gen_blobs(1000, 2, seed=8)
        spec = DriftSpec(kind="label_flip", at_t=600, mapping={"c0": "c1", "c1": "c0"})
        flipped = apply_drift(rows, spec)
        changed = sum(1 for (_, a), (_, b) in zip(rows, flipped) if a != b)
        assert changed == 400

    def test_mean_shift_moves_features_from_at_t(self):
        _, rows = gen_blobs(10, 2, dims=2, seed=8)
        spec = DriftSpec(kind="mean_shift", at_t=5, deltas={"c0": [10.0, 0.0], "c1": [10.0, 0.0]})
        shifted = apply_drift(rows, spec)
        for (r0, _), (r1, _) in zip(rows[:5], shifted[:5]):
            assert r0.features == r1.features
        for (r0, _), (r1, _) in zip(rows[5:], shifted[5:]):
            assert r1.features[0] == r0.features[0] + 10.0
            assert r1.features[1] == r0.features[1]

    def test_bad_spec_rejected(self):
        with pytest.raises(RejectedInput):
            DriftSpec(kind="label_flip", at_t=0, mapping=None)
        with pytest.raises(RejectedInput):
            DriftSpec(kind="nope", at_t=0, mapping={"a": "b"})
