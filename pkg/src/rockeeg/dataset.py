"""Labelled sample collections and trial-level splitting.

A *trial* is identified by ``(subject_id, trial_id)``. Every split in this
module assigns whole trials, so all electrode-pair samples cut from one trial
always land on the same side of a split.

Randomness comes from ``numpy.random.default_rng(seed)`` (the PCG64 bit
generator). Trial lists are sorted before they are shuffled, so a split is a
pure function of the dataset content, the parameters and the seed.
"""

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import container
from .exceptions import (
    EmptyInput,
    InsufficientTrials,
    LabelOutOfRange,
    LengthMismatch,
)

DEFAULT_CLASS_NAMES = ("left_fist", "right_fist", "both_fists", "both_feet")
DATASET_KIND = "dataset"


@dataclass(frozen=True, eq=False)
class LabeledSample:
    """One fixed-length real-valued sequence with its identity tags."""

    values: np.ndarray
    label: int
    subject_id: int = 1
    trial_id: int = 0
    pair_id: int = 0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise LengthMismatch("sample values must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(values)):
            raise ValueError("sample values contain non-finite entries")
        if int(self.label) < 0:
            raise LabelOutOfRange(f"negative label {self.label}")
        object.__setattr__(self, "values", values)


class Dataset:
    """Uniform-length samples plus per-sample label, subject, trial and pair ids.

    Parameters
    ----------
    X : array-like of shape (n_samples, length)
    y, subject_id, trial_id, pair_id : array-like of int, shape (n_samples,)
    class_count : int, optional
        Defaults to ``max(y) + 1``.
    class_names : sequence of str, optional

    Arrays are copied and made read-only.
    """

    def __init__(self, X, y, subject_id=None, trial_id=None, pair_id=None,
                 class_count=None, class_names=None):
        X = np.array(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] == 0:
            raise EmptyInput("a dataset needs at least one sample")
        if X.shape[1] == 0:
            raise LengthMismatch("samples must have positive length")
        if not np.all(np.isfinite(X)):
            raise ValueError("dataset contains non-finite values")
        n = X.shape[0]

        def ids(a, default):
            a = np.full(n, default, dtype=np.int64) if a is None else np.array(a, dtype=np.int64)
            if a.shape != (n,):
                raise LengthMismatch(f"id array of shape {a.shape} does not match {n} samples")
            return a

        y = ids(y, 0)
        if y.min() < 0:
            raise LabelOutOfRange("labels must be non-negative")
        if class_count is None:
            class_count = int(y.max()) + 1
        if y.max() >= class_count:
            raise LabelOutOfRange(f"label {int(y.max())} >= class_count {class_count}")
        if class_names is None:
            if class_count <= len(DEFAULT_CLASS_NAMES):
                class_names = DEFAULT_CLASS_NAMES[:class_count]
            else:
                class_names = tuple(f"class_{c}" for c in range(class_count))
        class_names = tuple(str(c) for c in class_names)
        if len(class_names) != class_count:
            raise ValueError("class_names length must equal class_count")

        self.X = X
        self.y = y
        self.subject_id = ids(subject_id, 1)
        self.trial_id = ids(trial_id, 0)
        self.pair_id = ids(pair_id, 0)
        self.class_count = int(class_count)
        self.class_names = class_names
        for a in (self.X, self.y, self.subject_id, self.trial_id, self.pair_id):
            a.flags.writeable = False

    def __len__(self):
        return self.X.shape[0]

    def __repr__(self):
        return (f"Dataset(n_samples={len(self)}, length={self.length}, "
                f"class_count={self.class_count})")

    @property
    def length(self):
        return self.X.shape[1]

    @property
    def uniform_length(self):
        return self.length

    def sample(self, i):
        return LabeledSample(self.X[i].copy(), int(self.y[i]), int(self.subject_id[i]),
                             int(self.trial_id[i]), int(self.pair_id[i]))

    def samples(self):
        for i in range(len(self)):
            yield self.sample(i)

    def subset(self, indices):
        indices = np.asarray(indices, dtype=np.int64)
        if indices.size == 0:
            raise EmptyInput("empty subset")
        return Dataset(self.X[indices], self.y[indices], self.subject_id[indices],
                       self.trial_id[indices], self.pair_id[indices],
                       self.class_count, self.class_names)

    def trial_keys(self):
        """Per-sample ``(subject_id, trial_id)`` tuples."""
        return list(zip(self.subject_id.tolist(), self.trial_id.tolist()))

    def trial_table(self):
        """Map each trial key to its class label.

        Raises ``ValueError`` if one trial carries two different labels.
        """
        table = {}
        for key, label in zip(self.trial_keys(), self.y.tolist()):
            if table.setdefault(key, label) != label:
                raise ValueError(f"trial {key} has inconsistent labels")
        return table

    def indices_for_trials(self, trials):
        trials = set(trials)
        return np.array([i for i, key in enumerate(self.trial_keys()) if key in trials],
                        dtype=np.int64)

    # serialization -----------------------------------------------------

    def to_bytes(self):
        manifest = {
            "format": "rockeeg-dataset",
            "version": 1,
            "sample_count": len(self),
            "length": self.length,
            "class_count": self.class_count,
            "class_names": list(self.class_names),
            "labels": self.y.tolist(),
            "subject_ids": self.subject_id.tolist(),
            "trial_ids": self.trial_id.tolist(),
            "pair_ids": self.pair_id.tolist(),
        }
        return container.dumps(DATASET_KIND, manifest, {"values": self.X})

    @classmethod
    def from_bytes(cls, blob):
        _, m, arrays = container.loads(blob, kind=DATASET_KIND)
        X = arrays["values"]
        if X.shape != (m["sample_count"], m["length"]):
            raise LengthMismatch("payload shape does not match manifest")
        return cls(X, m["labels"], m["subject_ids"], m["trial_ids"], m["pair_ids"],
                   m["class_count"], m["class_names"])

    def save(self, path):
        container.write_bytes(path, self.to_bytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


def build_dataset(samples, class_count=None, class_names=None):
    """Assemble :class:`LabeledSample` objects into a :class:`Dataset`.

    Sample order is preserved.
    """
    samples = list(samples)
    if not samples:
        raise EmptyInput("no samples given")
    lengths = {s.values.shape[0] for s in samples}
    if len(lengths) != 1:
        raise LengthMismatch(f"samples have differing lengths {sorted(lengths)}")
    labels = [int(s.label) for s in samples]
    if class_count is not None and max(labels) >= class_count:
        raise LabelOutOfRange(f"label {max(labels)} >= class_count {class_count}")
    return Dataset(
        np.stack([s.values for s in samples]),
        labels,
        [s.subject_id for s in samples],
        [s.trial_id for s in samples],
        [s.pair_id for s in samples],
        class_count=class_count,
        class_names=class_names,
    )


# ----------------------------------------------------------------------
# splitting


@dataclass(frozen=True)
class Fold:
    train: frozenset
    test: frozenset

    def subjects(self):
        return sorted({s for s, _ in self.train | self.test})

    def for_subject(self, subject_id):
        return (frozenset(k for k in self.train if k[0] == subject_id),
                frozenset(k for k in self.test if k[0] == subject_id))


@dataclass(frozen=True)
class FoldPlan:
    """Trial-level cross-validation plan.

    ``folds[i].train`` / ``folds[i].test`` hold ``(subject_id, trial_id)`` keys.
    """

    folds: tuple
    k: int
    mode: str
    seed: int = field(default=0)

    def __iter__(self):
        return iter(self.folds)

    def __len__(self):
        return len(self.folds)

    def sample_indices(self, dataset):
        """Yield ``(train_idx, test_idx)`` sample index arrays per fold."""
        keys = dataset.trial_keys()
        for fold in self.folds:
            train = np.array([i for i, k in enumerate(keys) if k in fold.train], dtype=np.int64)
            test = np.array([i for i, k in enumerate(keys) if k in fold.test], dtype=np.int64)
            yield train, test


SPLIT_MODES = ("even", "paper-literal")


def _trials_by_subject_class(dataset):
    groups = {}
    for (subject, trial), label in sorted(dataset.trial_table().items()):
        groups.setdefault(subject, {}).setdefault(label, []).append((subject, trial))
    return groups


def kfold_by_trial(dataset, k=10, seed=0, mode="even"):
    """Trial-level stratified k-fold plan.

    ``mode="even"`` shuffles each (subject, class) trial list and deals it into
    ``k`` contiguous chunks whose sizes differ by at most one, so every trial
    is tested exactly once. ``mode="paper-literal"`` tests exactly two trials
    per class in every fold: fold ``f`` tests shuffled positions ``2f`` and
    ``2f + 1`` (modulo the class size). With 21 trials per class and ``k=10``
    this gives 76 train / 8 test trials per subject and one trial per class
    that is never tested.
    """
    if mode not in SPLIT_MODES:
        raise ValueError(f"mode must be one of {SPLIT_MODES}, got {mode!r}")
    k = int(k)
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = np.random.default_rng(seed)
    groups = _trials_by_subject_class(dataset)
    test_sets = [set() for _ in range(k)]
    universe = set()
    for subject in sorted(groups):
        for label in sorted(groups[subject]):
            trials = groups[subject][label]
            n = len(trials)
            if mode == "even" and n < k:
                raise InsufficientTrials(
                    f"subject {subject} class {label}: {n} trials < k={k}")
            if mode == "paper-literal" and n < max(k, 2):
                raise InsufficientTrials(
                    f"subject {subject} class {label}: {n} trials < {max(k, 2)}")
            order = [trials[i] for i in rng.permutation(n)]
            universe.update(order)
            if mode == "even":
                for f, chunk in enumerate(np.array_split(np.arange(n), k)):
                    test_sets[f].update(order[i] for i in chunk)
            else:
                for f in range(k):
                    test_sets[f].update((order[(2 * f) % n], order[(2 * f + 1) % n]))
    folds = tuple(Fold(frozenset(universe - t), frozenset(t)) for t in test_sets)
    return FoldPlan(folds, k, mode, seed)


def largest_remainder(n, ratios):
    """Split ``n`` items into integer parts proportional to ``ratios``.

    Floors the exact quotas, then hands the leftover items to the parts with
    the largest fractional remainders; equal remainders go to the earlier part.
    """
    ratios = [Fraction(r).limit_denominator(10**9) for r in ratios]
    total = sum(ratios)
    if total <= 0 or any(r < 0 for r in ratios):
        raise ValueError("ratios must be non-negative with a positive sum")
    quotas = [n * r / total for r in ratios]
    parts = [int(q) for q in quotas]
    leftover = n - sum(parts)
    order = sorted(range(len(ratios)), key=lambda i: (-(quotas[i] - parts[i]), i))
    for i in order[:leftover]:
        parts[i] += 1
    return parts


def ratio_split(dataset, ratios=(5, 2, 3), seed=0):
    """Class-stratified trial-level train/validation/test split.

    Returns a tuple of three :class:`Dataset` objects, with ``None`` in place of
    a part that receives no trials.
    """
    if len(ratios) != 3:
        raise ValueError("expected three ratios (train, validation, test)")
    rng = np.random.default_rng(seed)
    by_class = {}
    for key, label in sorted(dataset.trial_table().items()):
        by_class.setdefault(label, []).append(key)
    parts = [set(), set(), set()]
    for label in sorted(by_class):
        trials = by_class[label]
        counts = largest_remainder(len(trials), ratios)
        for r, c in zip(ratios, counts):
            if r > 0 and c == 0:
                raise InsufficientTrials(
                    f"class {label}: {len(trials)} trials cannot fill ratios {tuple(ratios)}")
        order = [trials[i] for i in rng.permutation(len(trials))]
        start = 0
        for part, c in zip(parts, counts):
            part.update(order[start:start + c])
            start += c
    out = []
    for part in parts:
        idx = dataset.indices_for_trials(part) if part else np.array([], dtype=np.int64)
        out.append(dataset.subset(idx) if idx.size else None)
    return tuple(out)
