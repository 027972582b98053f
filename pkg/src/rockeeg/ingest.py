"""From PhysioNet motor-imagery EDF files to an electrode-pair :class:`Dataset`.

Pipeline per file: parse, preprocess (optional resampling, band-pass, common
average reference), cut one window per mapped cue annotation, then emit one
sample per (window, electrode pair) by concatenating the left-electrode window
with the right-electrode window.
"""

import logging
import os
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, DEFAULT_CLASS_NAMES
from .edf import normalize_label, parse_physionet_name, read_edf
from .exceptions import EmptyInput, MissingChannel, RockEEGError, UnmappedAnnotation, WindowPastEnd
from .preprocessing import PreprocessConfig, preprocess

log = logging.getLogger(__name__)

DEFAULT_PAIRS = (
    ("FC5", "FC6"), ("FC3", "FC4"), ("FC1", "FC2"),
    ("C5", "C6"), ("C3", "C4"), ("C1", "C2"),
    ("CP5", "CP6"), ("CP3", "CP4"), ("CP1", "CP2"),
)

FIST_RUNS = (4, 8, 12)
FIST_FEET_RUNS = (6, 10, 14)
IMAGERY_RUNS = tuple(sorted(FIST_RUNS + FIST_FEET_RUNS))


def default_run_label_map():
    mapping = {}
    for run in FIST_RUNS:
        mapping[(run, "T1")] = 0
        mapping[(run, "T2")] = 1
    for run in FIST_FEET_RUNS:
        mapping[(run, "T1")] = 2
        mapping[(run, "T2")] = 3
    return mapping


@dataclass(frozen=True)
class ElectrodePairSpec:
    pairs: tuple = DEFAULT_PAIRS

    def __post_init__(self):
        pairs = tuple((str(a), str(b)) for a, b in self.pairs)
        if not pairs:
            raise ValueError("at least one electrode pair is required")
        for left, right in pairs:
            if normalize_label(left) == normalize_label(right):
                raise ValueError(f"pair ({left}, {right}) repeats a channel")
        object.__setattr__(self, "pairs", pairs)

    def __len__(self):
        return len(self.pairs)

    @classmethod
    def parse(cls, text):
        """Parse ``"C3-C4,FC3-FC4"`` style pair lists."""
        pairs = []
        for item in text.split(","):
            item = item.strip()
            if not item:
                continue
            left, sep, right = item.partition("-")
            if not sep:
                raise ValueError(f"pair {item!r} is not of the form LEFT-RIGHT")
            pairs.append((left.strip(), right.strip()))
        return cls(tuple(pairs))

    def format(self):
        return ",".join(f"{a}-{b}" for a, b in self.pairs)

    def resolve(self, labels):
        """Channel indices ``[(left, right), ...]`` for the given channel labels."""
        index = {normalize_label(lab): i for i, lab in enumerate(labels)}
        out = []
        for left, right in self.pairs:
            missing = [c for c in (left, right) if normalize_label(c) not in index]
            if missing:
                raise MissingChannel(f"channels {missing} not present in recording")
            out.append((index[normalize_label(left)], index[normalize_label(right)]))
        return out


@dataclass(frozen=True)
class EpochSpec:
    """Cue-locked window definition (times in seconds relative to the cue)."""

    onset_offset: float = 0.0
    duration: float = 4.0
    run_label_map: dict = field(default_factory=default_run_label_map)
    ignore: frozenset = frozenset({"T0"})

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("epoch duration must be positive")
        if any(c < 0 or c >= 4 for c in self.run_label_map.values()):
            raise ValueError("mapped classes must lie in 0..3")


@dataclass
class Epoch:
    data: np.ndarray
    label: int
    subject_id: int
    trial_id: int
    channel_labels: list


@dataclass
class EpochLog:
    mapped: int = 0
    ignored: int = 0
    skipped: list = field(default_factory=list)


def epoch_events(recording, spec=None, run=None, subject_id=1, strict=True,
                 signals=None, rate=None, log_to=None):
    """Cut one window per mapped cue annotation.

    Parameters
    ----------
    recording : EdfRecording
    spec : EpochSpec, optional
    run : int
        Run number used to look up ``(run, text)`` in ``spec.run_label_map``.
    strict : bool
        Raise :class:`UnmappedAnnotation` / :class:`WindowPastEnd` instead of
        skipping and counting.
    signals, rate : optional
        Already-preprocessed channel x time data and its rate; defaults to the
        raw recording.
    log_to : EpochLog, optional
        Receives mapped/ignored/skipped counts.

    Returns
    -------
    list of Epoch
        ``trial_id`` is ``run * 1000 + k`` for the k-th mapped cue of the run.
    """
    spec = spec or EpochSpec()
    if run is None:
        raise ValueError("run number is required to map annotations to classes")
    if signals is None:
        signals, rate = recording.data(), recording.sampling_rate
    n_times = signals.shape[1]
    width = int(round(spec.duration * rate))
    if width < 1:
        raise ValueError("epoch duration is shorter than one sample")
    stats = log_to if log_to is not None else EpochLog()
    epochs = []
    for ann in recording.annotations:
        text = ann.text.strip()
        if text in spec.ignore:
            stats.ignored += 1
            continue
        label = spec.run_label_map.get((run, text))
        if label is None:
            if strict:
                raise UnmappedAnnotation(f"run {run}: no class for annotation {text!r}")
            stats.skipped.append(f"unmapped {text!r} at {ann.onset:g}s")
            continue
        start = int(round((ann.onset + spec.onset_offset) * rate))
        if start < 0 or start + width > n_times:
            if strict:
                raise WindowPastEnd(
                    f"run {run}: window at {ann.onset:g}s exceeds the recording")
            stats.skipped.append(f"window past end at {ann.onset:g}s")
            continue
        epochs.append(Epoch(signals[:, start:start + width].copy(), label, subject_id,
                            run * 1000 + stats.mapped, list(recording.labels)))
        stats.mapped += 1
    return epochs


def build_pair_samples(epochs, pair_spec=None, class_count=4, class_names=DEFAULT_CLASS_NAMES):
    """One sample per (epoch, pair): left window followed by right window."""
    pair_spec = pair_spec or ElectrodePairSpec()
    epochs = list(epochs)
    if not epochs:
        raise EmptyInput("no epochs to convert")
    rows, labels, subjects, trials, pairs = [], [], [], [], []
    for ep in epochs:
        for p, (li, ri) in enumerate(pair_spec.resolve(ep.channel_labels)):
            rows.append(np.concatenate([ep.data[li], ep.data[ri]]))
            labels.append(ep.label)
            subjects.append(ep.subject_id)
            trials.append(ep.trial_id)
            pairs.append(p)
    return Dataset(np.stack(rows), labels, subjects, trials, pairs,
                   class_count=class_count, class_names=class_names)


def ingest_recording(recording, run, subject_id=1, pair_spec=None, preprocess_config=None,
                     epoch_spec=None, strict=True, log_to=None):
    """Preprocess one recording and return its epochs (restricted to paired channels)."""
    pair_spec = pair_spec or ElectrodePairSpec()
    pair_spec.resolve(recording.labels)
    data, rate = preprocess(recording.data(), recording.sampling_rate, preprocess_config)
    return epoch_events(recording, epoch_spec, run=run, subject_id=subject_id, strict=strict,
                        signals=data, rate=rate, log_to=log_to)


def find_recordings(root, subjects=None, runs=IMAGERY_RUNS):
    """Sorted ``(path, subject, run)`` for ``SxxxRyy.edf`` files below ``root``."""
    found = []
    for dirpath, _, names in os.walk(root):
        for name in names:
            ids = parse_physionet_name(name)
            if ids is None:
                continue
            subject, run = ids
            if runs is not None and run not in runs:
                continue
            if subjects is not None and subject not in subjects:
                continue
            found.append((os.path.join(dirpath, name), subject, run))
    found.sort(key=lambda t: (t[1], t[2], t[0]))
    return found


def ingest_directory(root, subjects=None, runs=IMAGERY_RUNS, pair_spec=None,
                     preprocess_config=None, epoch_spec=None, strict=True,
                     trials_per_class=None):
    """Ingest every matching recording below ``root``.

    ``trials_per_class`` keeps only the first N trials of each class per
    subject (in run/cue order). Without ``strict``, unreadable files are
    reported and skipped. Returns ``(dataset, report_lines)``.
    """
    pair_spec = pair_spec or ElectrodePairSpec()
    preprocess_config = preprocess_config or PreprocessConfig()
    files = find_recordings(root, subjects, runs)
    if not files:
        raise EmptyInput(f"no SxxxRyy.edf recordings found under {root}")
    epochs, report = [], []
    for path, subject, run in files:
        stats = EpochLog()
        try:
            rec = read_edf(path)
            got = ingest_recording(rec, run, subject, pair_spec, preprocess_config, epoch_spec,
                                   strict, stats)
        except RockEEGError as exc:
            if strict:
                raise
            line = f"{os.path.basename(path)}\tsubject={subject}\trun={run}\terror={exc}"
            report.append(line)
            log.warning(line)
            continue
        epochs.extend(got)
        line = (f"{os.path.basename(path)}\tsubject={subject}\trun={run}\tepochs={stats.mapped}"
                f"\tignored={stats.ignored}\tskipped={len(stats.skipped)}")
        report.append(line)
        report.extend(f"  skipped: {s}" for s in stats.skipped)
        log.info(line)
    if trials_per_class is not None:
        kept, seen = [], {}
        for ep in epochs:
            key = (ep.subject_id, ep.label)
            if seen.get(key, 0) < trials_per_class:
                kept.append(ep)
                seen[key] = seen.get(key, 0) + 1
        epochs = kept
    if not epochs:
        raise EmptyInput("recordings contained no mapped cues")
    return build_pair_samples(epochs, pair_spec), report
