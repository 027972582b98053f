"""Reader (and fixture writer) for EDF and EDF+ biosignal files.

Only continuous recordings are supported; EDF+D files raise
:class:`~rockeeg.exceptions.UnsupportedVariant`. Annotations from an
``EDF Annotations`` signal are decoded from their TAL encoding into
:class:`Annotation` tuples and the annotation signal is removed from the
channel list.
"""

import re
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .exceptions import (
    MalformedHeader,
    NonNumericField,
    TruncatedRecord,
    UnsupportedVariant,
)

ANNOTATION_LABEL = "EDF Annotations"

_MAIN_FIELDS = (
    ("version", 8), ("patient_id", 80), ("recording_id", 80), ("start_date", 8),
    ("start_time", 8), ("header_bytes", 8), ("reserved", 44), ("n_records", 8),
    ("record_duration", 8), ("n_signals", 4),
)
_SIGNAL_FIELDS = (
    ("label", 16), ("transducer", 80), ("physical_dimension", 8), ("physical_min", 8),
    ("physical_max", 8), ("digital_min", 8), ("digital_max", 8), ("prefiltering", 80),
    ("samples_per_record", 8), ("reserved", 32),
)


class Annotation(NamedTuple):
    onset: float
    duration: float
    text: str


@dataclass(frozen=True)
class SignalHeader:
    label: str
    physical_min: float
    physical_max: float
    digital_min: int
    digital_max: int
    samples_per_record: int
    physical_dimension: str = "uV"
    transducer: str = ""
    prefiltering: str = ""

    def to_physical(self, digital):
        """Map digital samples to physical units.

        Written as an interpolation between the two endpoints so that
        ``digital_min`` and ``digital_max`` land exactly on the physical limits.
        """
        u = (np.asarray(digital, dtype=np.float64) - self.digital_min) / (
            self.digital_max - self.digital_min)
        return self.physical_min * (1.0 - u) + self.physical_max * u

    def to_digital(self, physical):
        """Inverse of :meth:`to_physical`, rounded and clipped to the digital range."""
        u = (np.asarray(physical, dtype=np.float64) - self.physical_min) / (
            self.physical_max - self.physical_min)
        d = np.rint(self.digital_min + u * (self.digital_max - self.digital_min))
        return np.clip(d, self.digital_min, self.digital_max).astype(np.int64)


@dataclass
class EdfRecording:
    """Decoded EDF/EDF+ file.

    ``signals`` holds one physical-unit array per entry of ``channels`` (the
    annotation signal is excluded). ``annotations`` is sorted by onset.
    """

    channels: list
    signals: list
    record_duration: float
    n_records: int
    annotations: list = field(default_factory=list)
    version: str = "0"
    patient_id: str = ""
    recording_id: str = ""
    start_date: str = "01.01.00"
    start_time: str = "00.00.00"
    reserved: str = ""
    annotation_samples_per_record: int = 0

    @property
    def labels(self):
        return [c.label for c in self.channels]

    @property
    def sampling_rates(self):
        return [c.samples_per_record / self.record_duration for c in self.channels]

    @property
    def sampling_rate(self):
        rates = set(self.sampling_rates)
        if len(rates) != 1:
            raise UnsupportedVariant(f"channels have differing sampling rates {sorted(rates)}")
        return rates.pop()

    @property
    def duration(self):
        return self.n_records * self.record_duration

    def data(self):
        """Channel x time matrix (requires a uniform sampling rate)."""
        self.sampling_rate  # noqa: B018 - validates uniformity
        return np.vstack(self.signals)

    def channel_index(self, name):
        """Index of a channel, matched by :func:`normalize_label`."""
        wanted = normalize_label(name)
        for i, label in enumerate(self.labels):
            if normalize_label(label) == wanted:
                return i
        raise KeyError(name)


def normalize_label(label):
    """Canonical electrode name: PhysioNet writes ``"Fc5."`` for ``FC5``."""
    return label.strip().rstrip(".").upper()


def _text(raw, what):
    try:
        return raw.decode("ascii").strip()
    except UnicodeDecodeError:
        raise MalformedHeader(f"non-ASCII bytes in header field {what}") from None


def _number(raw, what, kind=float):
    text = _text(raw, what)
    try:
        value = float(text)
    except ValueError:
        raise NonNumericField(f"header field {what} is not numeric: {text!r}") from None
    if kind is int:
        if value != int(value):
            raise NonNumericField(f"header field {what} is not an integer: {text!r}")
        return int(value)
    return value


def _parse_tal_block(raw):
    events = []
    for tal in raw.split(b"\x00"):
        if not tal:
            continue
        parts = tal.split(b"\x14")
        if len(parts) < 2:
            raise MalformedHeader(f"bad TAL {tal!r}")
        stamp = parts[0].decode("ascii", errors="strict")
        onset_text, _, duration_text = stamp.partition("\x15")
        try:
            onset = float(onset_text)
            duration = float(duration_text) if duration_text else 0.0
        except ValueError:
            raise NonNumericField(f"bad TAL time stamp {stamp!r}") from None
        for text in parts[1:]:
            if text:
                events.append(Annotation(onset, duration, text.decode("utf-8")))
    return events


def parse_edf(blob):
    """Parse the bytes of an EDF or EDF+ file into an :class:`EdfRecording`."""
    blob = bytes(blob)
    if len(blob) < 256:
        raise MalformedHeader("file shorter than the 256-byte main header")
    pos = 0
    main = {}
    for name, width in _MAIN_FIELDS:
        main[name] = blob[pos:pos + width]
        pos += width
    version = _text(main["version"], "version")
    if version != "0":
        raise MalformedHeader(f"unsupported EDF version {version!r}")
    reserved = _text(main["reserved"], "reserved")
    if reserved.startswith("EDF+D"):
        raise UnsupportedVariant("discontinuous EDF+D recordings are not supported")
    header_bytes = _number(main["header_bytes"], "header_bytes", int)
    n_records = _number(main["n_records"], "n_records", int)
    record_duration = _number(main["record_duration"], "record_duration")
    ns = _number(main["n_signals"], "n_signals", int)
    if ns < 1:
        raise MalformedHeader("recording declares no signals")
    if header_bytes != 256 * (ns + 1):
        raise MalformedHeader(f"header size {header_bytes} != 256 * (ns + 1) for ns={ns}")
    if len(blob) < header_bytes:
        raise MalformedHeader("file ends inside the signal headers")
    if record_duration <= 0:
        raise MalformedHeader("record duration must be positive")

    raw = {name: [] for name, _ in _SIGNAL_FIELDS}
    for name, width in _SIGNAL_FIELDS:
        for _ in range(ns):
            raw[name].append(blob[pos:pos + width])
            pos += width

    headers = []
    for i in range(ns):
        h = SignalHeader(
            label=_text(raw["label"][i], "label"),
            physical_min=_number(raw["physical_min"][i], "physical_min"),
            physical_max=_number(raw["physical_max"][i], "physical_max"),
            digital_min=_number(raw["digital_min"][i], "digital_min", int),
            digital_max=_number(raw["digital_max"][i], "digital_max", int),
            samples_per_record=_number(raw["samples_per_record"][i], "samples_per_record", int),
            physical_dimension=_text(raw["physical_dimension"][i], "physical_dimension"),
            transducer=_text(raw["transducer"][i], "transducer"),
            prefiltering=_text(raw["prefiltering"][i], "prefiltering"),
        )
        if h.digital_max <= h.digital_min:
            raise MalformedHeader(f"signal {h.label!r}: digital_max <= digital_min")
        if h.physical_max <= h.physical_min:
            raise MalformedHeader(f"signal {h.label!r}: physical_max <= physical_min")
        if h.samples_per_record < 1:
            raise MalformedHeader(f"signal {h.label!r}: samples_per_record < 1")
        headers.append(h)

    record_samples = sum(h.samples_per_record for h in headers)
    record_bytes = 2 * record_samples
    available = len(blob) - header_bytes
    if n_records == -1:
        n_records = available // record_bytes
    if n_records < 0:
        raise MalformedHeader(f"invalid record count {n_records}")
    if available < n_records * record_bytes:
        raise TruncatedRecord(
            f"expected {n_records} records of {record_bytes} bytes, found {available} bytes")

    body = np.frombuffer(blob, dtype="<i2", count=n_records * record_samples,
                         offset=header_bytes).reshape(n_records, record_samples)
    channels, signals, annotations = [], [], []
    ann_spr = 0
    start = 0
    for h in headers:
        block = body[:, start:start + h.samples_per_record]
        start += h.samples_per_record
        if h.label == ANNOTATION_LABEL:
            ann_spr = h.samples_per_record
            for rec in range(n_records):
                annotations.extend(_parse_tal_block(block[rec].astype("<i2").tobytes()))
            continue
        channels.append(h)
        signals.append(h.to_physical(block.reshape(-1)))
    annotations.sort(key=lambda a: a.onset)
    return EdfRecording(
        channels=channels,
        signals=signals,
        record_duration=record_duration,
        n_records=n_records,
        annotations=annotations,
        version=version,
        patient_id=_text(main["patient_id"], "patient_id"),
        recording_id=_text(main["recording_id"], "recording_id"),
        start_date=_text(main["start_date"], "start_date"),
        start_time=_text(main["start_time"], "start_time"),
        reserved=reserved,
        annotation_samples_per_record=ann_spr,
    )


def read_edf(path):
    with open(path, "rb") as fh:
        return parse_edf(fh.read())


# ----------------------------------------------------------------------
# writing (test fixtures)


def _field(value, width, what):
    if isinstance(value, float):
        text = repr(value)
        if text.endswith(".0"):
            text = text[:-2]
    else:
        text = str(value)
    raw = text.encode("ascii")
    if len(raw) > width:
        raise ValueError(f"{what}={text!r} does not fit in {width} characters")
    return raw.ljust(width, b" ")


def _format_time(t):
    text = repr(float(t))
    if text.endswith(".0"):
        text = text[:-2]
    return text if text.startswith("-") else "+" + text


def _tal(onset, duration, texts):
    stamp = _format_time(onset)
    if duration:
        stamp += "\x15" + _format_time(duration).lstrip("+")
    return (stamp + "\x14" + "".join(t + "\x14" for t in texts) + "\x00").encode("utf-8")


def write_edf(recording):
    """Encode an :class:`EdfRecording` as EDF+ bytes.

    Physical samples are quantised with :meth:`SignalHeader.to_digital`. If the
    recording has annotations, or its ``reserved`` field starts with ``EDF+``,
    an ``EDF Annotations`` signal is appended.
    """
    rec = recording
    n_records = rec.n_records
    with_annotations = bool(rec.annotations) or rec.reserved.startswith("EDF+")
    blocks = []
    for h, sig in zip(rec.channels, rec.signals):
        sig = np.asarray(sig, dtype=np.float64)
        if sig.shape != (n_records * h.samples_per_record,):
            raise ValueError(f"signal {h.label!r} has {sig.size} samples, "
                             f"expected {n_records * h.samples_per_record}")
        blocks.append(h.to_digital(sig).reshape(n_records, h.samples_per_record))

    headers = list(rec.channels)
    if with_annotations:
        per_record = [[_tal(r * rec.record_duration, 0.0, [""])] for r in range(n_records)]
        for a in rec.annotations:
            r = min(max(int(a.onset // rec.record_duration), 0), n_records - 1)
            per_record[r].append(_tal(a.onset, a.duration, [a.text]))
        needed = max(sum(len(t) for t in tals) for tals in per_record)
        spr = max(rec.annotation_samples_per_record, (needed + 1) // 2)
        raw = np.zeros((n_records, 2 * spr), dtype=np.uint8)
        for r, tals in enumerate(per_record):
            joined = b"".join(tals)
            raw[r, :len(joined)] = np.frombuffer(joined, dtype=np.uint8)
        blocks.append(raw.view("<i2").astype(np.int64))
        headers.append(SignalHeader(ANNOTATION_LABEL, -1.0, 1.0, -32768, 32767, spr, ""))

    ns = len(headers)
    reserved = rec.reserved or ("EDF+C" if with_annotations else "")
    out = [
        _field(rec.version, 8, "version"),
        _field(rec.patient_id, 80, "patient_id"),
        _field(rec.recording_id, 80, "recording_id"),
        _field(rec.start_date, 8, "start_date"),
        _field(rec.start_time, 8, "start_time"),
        _field(256 * (ns + 1), 8, "header_bytes"),
        _field(reserved, 44, "reserved"),
        _field(n_records, 8, "n_records"),
        _field(float(rec.record_duration), 8, "record_duration"),
        _field(ns, 4, "n_signals"),
    ]
    attrs = {
        "label": 16, "transducer": 80, "physical_dimension": 8, "physical_min": 8,
        "physical_max": 8, "digital_min": 8, "digital_max": 8, "prefiltering": 80,
        "samples_per_record": 8,
    }
    for name, width in attrs.items():
        for h in headers:
            value = getattr(h, name)
            if name in ("physical_min", "physical_max"):
                value = float(value)
            out.append(_field(value, width, name))
    out.append(b" " * (32 * ns))
    data = np.concatenate(blocks, axis=1).astype("<i2")
    out.append(data.tobytes())
    return b"".join(out)


def make_recording(labels, data, rate, record_duration=1.0, annotations=(),
                   physical_range=(-1000.0, 1000.0), digital_range=(-32768, 32767), **header):
    """Convenience constructor for synthetic recordings.

    ``data`` is a channel x time array in physical units. Values are quantised
    to the digital grid so the result round-trips through :func:`write_edf`
    and :func:`parse_edf` exactly.
    """
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    spr = rate * record_duration
    if spr != int(spr):
        raise ValueError("rate * record_duration must be an integer")
    spr = int(spr)
    if data.shape[1] % spr:
        raise ValueError("signal length must be a whole number of records")
    channels, signals = [], []
    for label, row in zip(labels, data):
        h = SignalHeader(label, float(physical_range[0]), float(physical_range[1]),
                         int(digital_range[0]), int(digital_range[1]), spr)
        channels.append(h)
        signals.append(h.to_physical(h.to_digital(row)))
    return EdfRecording(channels=channels, signals=signals, record_duration=float(record_duration),
                        n_records=data.shape[1] // spr,
                        annotations=sorted((Annotation(*a) for a in annotations),
                                           key=lambda a: a.onset),
                        reserved="EDF+C", **header)


_PHYSIONET_NAME = re.compile(r"S(\d{3})R(\d{2})\.edf$", re.IGNORECASE)


def parse_physionet_name(path):
    """Return ``(subject, run)`` for names like ``S001R04.edf``, else ``None``."""
    m = _PHYSIONET_NAME.search(str(path))
    if not m:
        return None
    return int(m.group(1)), int(m.group(2))


__all__ = [
    "Annotation", "EdfRecording", "SignalHeader", "make_recording", "normalize_label",
    "parse_edf", "parse_physionet_name", "read_edf", "write_edf",
]
