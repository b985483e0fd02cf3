"""Schema, normalization, reconstruction, splitting, generation and
CSV round-trip tests."""

import numpy as np
import pytest

from btcgan import data
from btcgan.errors import InputError, ParseError, ValidationError


def make_record(rx=3, tx=1, recv=5.0, sent=3.0, sib=2, label="MiningPool"):
    return data.AddressRecord(
        rx_tx_count=rx, tx_tx_count=tx, btc_received=recv, btc_sent=sent,
        balance=recv - sent, uniqueness=1 if rx == 1 else 0,
        sibling_count=sib, label=label,
    )


class TestNormalizer:
    def test_single_column_min_max(self):
        params = data.fit_normalizer(np.array([[1.0], [5.0], [3.0]]))
        assert params.minimum[0] == 1.0
        assert params.maximum[0] == 5.0

    def test_constant_column_degenerates(self):
        params = data.fit_normalizer(np.array([[2.0], [2.0], [2.0]]))
        assert params.minimum[0] == params.maximum[0] == 2.0
        normalized = data.normalize(np.array([[2.0]]), params)
        assert normalized[0, 0] == 0.0
        assert data.denormalize(normalized, params)[0, 0] == 2.0

    def test_columns_are_independent(self):
        params = data.fit_normalizer(np.array([[0.0, 10.0], [4.0, 30.0]]))
        assert list(params.minimum) == [0.0, 10.0]
        assert list(params.maximum) == [4.0, 30.0]

    def test_empty_input_rejected(self):
        with pytest.raises(InputError):
            data.fit_normalizer(np.empty((0, 3)))

    def test_endpoints_and_midpoint(self):
        params = data.fit_normalizer(np.array([[2.0], [6.0]]))
        pts = data.normalize(np.array([[2.0], [6.0], [4.0]]), params)
        assert list(pts[:, 0]) == [0.0, 1.0, 0.5]

    def test_out_of_range_inputs_clamp(self):
        params = data.fit_normalizer(np.array([[0.0], [1.0]]))
        out = data.normalize(np.array([[-5.0], [9.0]]), params)
        assert list(out[:, 0]) == [0.0, 1.0]

    def test_round_trip_identity_on_random_values(self):
        rng = np.random.default_rng(42)
        base = rng.normal(size=(200, 5)) * rng.lognormal(1, 1, size=5)
        params = data.fit_normalizer(base)
        lo, hi = params.minimum, params.maximum
        x = rng.uniform(lo, hi, size=(1000, 5))
        back = data.denormalize(data.normalize(x, params), params)
        assert np.max(np.abs(back - x)) < 1e-9
        y = rng.uniform(0, 1, size=(1000, 5))
        back_y = data.normalize(data.denormalize(y, params), params)
        assert np.max(np.abs(back_y - y)) < 1e-9


class TestReduceReconstruct:
    def test_projection_order(self):
        rec = make_record(rx=1, tx=0, recv=5.0, sent=0.0, sib=2)
        assert list(data.reduce_features(rec)) == [5.0, 5.0, 1.0, 0.0, 2.0]

    def test_invalid_balance_rejected(self):
        rec = make_record()
        rec.balance += 1.0
        with pytest.raises(ValidationError):
            data.reduce_features(rec)

    def test_zero_record_maps_to_zero_vector(self):
        rec = data.AddressRecord(0, 0, 0.0, 0.0, 0.0, 0, 0, "Mixer")
        assert list(data.reduce_features(rec)) == [0.0] * 5

    def test_reconstruct_arithmetic_identity(self):
        rec, implausible = data.reconstruct_features([5.0, 2.0, 3.0, 1.0, 0.0])
        assert not implausible
        assert rec.btc_sent == pytest.approx(3.0)
        assert rec.uniqueness == 0
        assert rec.rx_tx_count == 3

    def test_unique_receive_count_marks_uniqueness(self):
        rec, _ = data.reconstruct_features([1.0, 1.0, 1.0, 0.0, 0.0])
        assert rec.uniqueness == 1

    def test_negative_sent_flagged_implausible(self):
        rec, implausible = data.reconstruct_features([1.0, 1.5, 2.0, 0.0, 0.0])
        assert implausible
        assert rec.btc_sent == pytest.approx(-0.5)

    def test_reconstruct_after_reduce_is_identity(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            rx = int(rng.integers(1, 50))
            tx = int(rng.integers(0, 50))
            recv = float(rng.lognormal(1, 1))
            sent = float(rng.uniform(0, recv)) if tx else 0.0
            rec = data.AddressRecord(
                rx_tx_count=rx, tx_tx_count=tx, btc_received=recv,
                btc_sent=sent, balance=recv - sent,
                uniqueness=1 if rx == 1 else 0,
                sibling_count=int(rng.integers(0, 9)), label="Exchange",
            )
            back, implausible = data.reconstruct_features(data.reduce_features(rec))
            assert not implausible
            assert back.rx_tx_count == rec.rx_tx_count
            assert back.tx_tx_count == rec.tx_tx_count
            assert back.sibling_count == rec.sibling_count
            assert back.uniqueness == rec.uniqueness
            assert back.btc_received == pytest.approx(rec.btc_received, abs=1e-9)
            assert back.btc_sent == pytest.approx(rec.btc_sent, abs=1e-9)
            assert back.balance == pytest.approx(rec.balance, abs=1e-9)

    def test_negative_counts_clamped_before_rounding(self):
        rec, _ = data.reconstruct_features([1.0, 1.0, -3.0, -0.2, -0.6])
        assert rec.rx_tx_count == 0
        assert rec.tx_tx_count == 0
        assert rec.sibling_count == 0


class TestStratifiedSplit:
    def test_even_split_of_one_class(self):
        records = [make_record(label="Exchange") for _ in range(100)]
        a, b = data.stratified_split(records, 0.5, seed=1)
        assert len(a) == len(b) == 50

    def test_two_class_counts(self):
        records = ([make_record(label="Exchange")] * 10
                   + [make_record(label="Mixer")] * 4)
        a, b = data.stratified_split(records, 0.5, seed=2)
        assert sum(1 for r in a if r.label == "Exchange") == 5
        assert sum(1 for r in a if r.label == "Mixer") == 2

    def test_odd_class_size_splits_within_one(self):
        records = [make_record(label="Service") for _ in range(7)]
        a, b = data.stratified_split(records, 0.5, seed=3)
        assert sorted([len(a), len(b)]) == [3, 4]

    def test_partition_exact_no_loss_no_duplicates(self):
        records = data.synth_ground_truth(0.001, seed=5)
        a, b = data.stratified_split(records, 0.5, seed=4)
        assert len(a) + len(b) == len(records)
        ids = {id(r) for r in a} | {id(r) for r in b}
        assert len(ids) == len(records)

    def test_tiny_class_rejected(self):
        records = [make_record(label="Exchange")] * 10 + [make_record(label="Mixer")]
        with pytest.raises(InputError):
            data.stratified_split(records, 0.5, seed=0)

    def test_seeded_determinism(self):
        records = data.synth_ground_truth(0.001, seed=5)
        a1, b1 = data.stratified_split(records, 0.5, seed=9)
        a2, b2 = data.stratified_split(records, 0.5, seed=9)
        assert a1 == a2 and b1 == b2


class TestSynthGroundTruth:
    def test_scale_one_thousandth_counts(self):
        records = data.synth_ground_truth(0.001, seed=0)
        counts = {c: 0 for c in data.CLASSES}
        for r in records:
            counts[r.label] += 1
        assert counts == {
            "Exchange": 9947, "Gambling": 3051, "Marketplace": 2349,
            "MiningPool": 86, "Mixer": 476, "Service": 251,
        }

    def test_every_record_satisfies_invariants(self):
        for rec in data.synth_ground_truth(0.001, seed=11):
            rec.validate()
            assert rec.balance == rec.btc_received - rec.btc_sent

    def test_same_seed_same_dataset(self):
        a = data.synth_ground_truth(0.001, seed=21)
        b = data.synth_ground_truth(0.001, seed=21)
        assert a == b

    def test_scale_too_small_rejected(self):
        with pytest.raises(InputError):
            data.synth_ground_truth(0.0001, seed=0)
        with pytest.raises(InputError):
            data.synth_ground_truth(-1.0, seed=0)


class TestRecordsCsv:
    def test_round_trip(self, tmp_path):
        records = data.synth_ground_truth(0.001, seed=3)[:1000]
        path = tmp_path / "records.csv"
        data.save_records(records, path)
        assert data.load_records(path) == records

    def test_header_only_file_is_empty_set(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text(",".join(data.CSV_HEADER) + "\n")
        assert data.load_records(path) == []

    def test_short_row_names_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(",".join(data.CSV_HEADER) + "\n1,0,1.0,0.0,1.0,1\n")
        with pytest.raises(ParseError) as err:
            data.load_records(path)
        assert err.value.line == 2
        assert "line 2" in str(err.value)

    def test_bad_number_names_column(self, tmp_path):
        path = tmp_path / "bad2.csv"
        path.write_text(
            ",".join(data.CSV_HEADER)
            + "\n1,0,oops,0.0,1.0,1,0,Exchange\n"
        )
        with pytest.raises(ParseError) as err:
            data.load_records(path)
        assert "btc_received" in str(err.value)

    def test_wrong_header_rejected(self, tmp_path):
        path = tmp_path / "hdr.csv"
        path.write_text("a,b,c\n")
        with pytest.raises(ParseError) as err:
            data.load_records(path)
        assert err.value.line == 1

    def test_invariant_violation_on_load_names_line(self, tmp_path):
        path = tmp_path / "inv.csv"
        path.write_text(
            ",".join(data.CSV_HEADER)
            + "\n1,0,5.0,0.0,1.0,1,0,Exchange\n"
        )
        with pytest.raises(ParseError) as err:
            data.load_records(path)
        assert err.value.line == 2
