import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rockeeg.edf import (
    Annotation,
    SignalHeader,
    make_recording,
    normalize_label,
    parse_edf,
    parse_physionet_name,
    read_edf,
    write_edf,
)
from rockeeg.exceptions import (
    MalformedHeader,
    NonNumericField,
    TruncatedRecord,
    UnsupportedVariant,
)


def field(text, width):
    return str(text).encode("ascii").ljust(width)


def hand_edf(digital, dmin=-2048, dmax=2047, pmin=-1000, pmax=1000, spr=4,
             reserved="", n_records=None, label="C3..", tal=None):
    """Single-signal EDF assembled byte by byte (plus an optional TAL signal)."""
    digital = np.asarray(digital, dtype="<i2")
    signals = [(label, pmin, pmax, dmin, dmax, spr)]
    if tal is not None:
        signals.append(("EDF Annotations", -1, 1, -32768, 32767, len(tal) // 2))
    ns = len(signals)
    n_rec = digital.size // spr if n_records is None else n_records
    head = (field(0, 8) + field("patient", 80) + field("recording", 80) + field("01.02.03", 8)
            + field("04.05.06", 8) + field(256 * (ns + 1), 8) + field(reserved, 44)
            + field(n_rec, 8) + field(1, 8) + field(ns, 4))
    cols = [[s[0] for s in signals], [""] * ns, ["uV"] * ns, [s[1] for s in signals],
            [s[2] for s in signals], [s[3] for s in signals], [s[4] for s in signals],
            [""] * ns, [s[5] for s in signals], [""] * ns]
    widths = [16, 80, 8, 8, 8, 8, 8, 80, 8, 32]
    for values, w in zip(cols, widths):
        head += b"".join(field(v, w) for v in values)
    body = b""
    for r in range(digital.size // spr):
        body += digital[r * spr:(r + 1) * spr].tobytes()
        if tal is not None:
            body += tal
    return head + body


class TestScaling:
    def test_hand_value(self):
        rec = parse_edf(hand_edf([0, 0, 0, 0]))
        expected = -1000 + (0 - (-2048)) * 2000 / 4095
        assert rec.signals[0][0] == pytest.approx(0.2442, abs=1e-4)
        assert rec.signals[0][0] == pytest.approx(expected, abs=1e-12)

    def test_endpoints_exact(self):
        rec = parse_edf(hand_edf([-2048, 2047, -2048, 2047]))
        assert rec.signals[0].tolist() == [-1000.0, 1000.0, -1000.0, 1000.0]

    @given(st.integers(-30000, 30000), st.integers(1, 30000),
           st.floats(-1e4, 1e4), st.floats(1e-3, 1e4))
    def test_endpoints_exact_any_range(self, dmin, span, pmin, pspan):
        h = SignalHeader("x", pmin, pmin + pspan, dmin, dmin + span, 1)
        lo, hi = h.to_physical([dmin, dmin + span])
        assert lo == h.physical_min and hi == h.physical_max

    def test_digital_round_trip(self):
        h = SignalHeader("x", -8092.0, 8092.0, -8092, 8092, 1)
        d = np.arange(-8092, 8093, 37)
        assert np.array_equal(h.to_digital(h.to_physical(d)), d)


class TestParse:
    def test_header_fields(self):
        rec = parse_edf(hand_edf(np.arange(8)))
        assert rec.patient_id == "patient" and rec.start_date == "01.02.03"
        assert rec.n_records == 2 and rec.sampling_rate == 4.0
        assert rec.labels == ["C3.."]

    def test_tal_annotations(self):
        tal = b"+0\x14\x14\x00+0.5\x151.25\x14T1\x14\x00"
        tal = tal.ljust(32, b"\x00")
        rec = parse_edf(hand_edf(np.arange(4), tal=tal, reserved="EDF+C"))
        assert rec.annotations == [Annotation(0.5, 1.25, "T1")]
        assert len(rec.signals) == 1

    def test_discontinuous_rejected(self):
        with pytest.raises(UnsupportedVariant):
            parse_edf(hand_edf(np.arange(4), reserved="EDF+D"))

    def test_truncated(self):
        with pytest.raises(TruncatedRecord):
            parse_edf(hand_edf(np.arange(8))[:-2])

    def test_non_numeric(self):
        blob = bytearray(hand_edf(np.arange(4)))
        blob[236:244] = b"abc     "
        with pytest.raises(NonNumericField):
            parse_edf(bytes(blob))

    def test_short_file(self):
        with pytest.raises(MalformedHeader):
            parse_edf(b"0" * 100)

    def test_bad_ranges(self):
        with pytest.raises(MalformedHeader):
            parse_edf(hand_edf(np.arange(4), dmin=5, dmax=5))


def synthetic_recording(seed=0, n_channels=3, rate=8, seconds=5):
    rng = np.random.default_rng(seed)
    data = rng.uniform(-900, 900, size=(n_channels, rate * seconds))
    return make_recording([f"Ch{i}." for i in range(n_channels)], data, rate,
                          annotations=[(0.0, 1.5, "T0"), (1.5, 2.0, "T1"), (3.25, 1.0, "T2")],
                          patient_id="P 1", recording_id="R 1")


class TestRoundTrip:
    def test_bit_exact(self):
        rec = synthetic_recording()
        back = parse_edf(write_edf(rec))
        assert back.labels == rec.labels
        assert back.n_records == rec.n_records and back.record_duration == rec.record_duration
        assert back.patient_id == rec.patient_id and back.reserved == "EDF+C"
        for a, b in zip(rec.signals, back.signals):
            assert a.tobytes() == b.tobytes()
        assert back.annotations == rec.annotations

    def test_write_is_deterministic(self):
        assert write_edf(synthetic_recording(1)) == write_edf(synthetic_recording(1))

    @given(st.integers(0, 10_000), st.integers(1, 4), st.integers(1, 6))
    def test_round_trip_property(self, seed, n_channels, seconds):
        rec = synthetic_recording(seed, n_channels, rate=4, seconds=seconds + 4)
        back = parse_edf(write_edf(rec))
        assert all(np.array_equal(a, b) for a, b in zip(rec.signals, back.signals))
        assert back.annotations == rec.annotations


class TestPhysionetConventions:
    def test_names(self):
        assert parse_physionet_name("/x/S001/S001R04.edf") == (1, 4)
        assert parse_physionet_name("s109r14.EDF") == (109, 14)
        assert parse_physionet_name("notes.edf") is None

    def test_labels(self):
        assert normalize_label("Fc5.") == "FC5"
        assert normalize_label("Cz..") == "CZ"
        assert normalize_label(" Cp3 ") == "CP3"

    def test_fixture(self, fixture_edf):
        rec = read_edf(fixture_edf)
        assert rec.sampling_rate == 160.0
        assert "Fc5." in rec.labels and "C4.." in rec.labels
        texts = [a.text for a in rec.annotations]
        assert set(texts) == {"T0", "T1", "T2"}
        assert sum(t != "T0" for t in texts) == 7
        onsets = [a.onset for a in rec.annotations]
        assert onsets == sorted(onsets)
        assert rec.data().shape == (len(rec.labels), 160 * rec.n_records)

    def test_fixture_reencodes_identically(self, fixture_edf):
        with open(fixture_edf, "rb") as fh:
            blob = fh.read()
        assert write_edf(parse_edf(blob)) == blob
