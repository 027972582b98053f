import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rockeeg import container
from rockeeg.dataset import (
    Dataset,
    LabeledSample,
    build_dataset,
    kfold_by_trial,
    largest_remainder,
    ratio_split,
)
from rockeeg.exceptions import (
    ContainerError,
    EmptyInput,
    InsufficientTrials,
    LabelOutOfRange,
    LengthMismatch,
)


def make_corpus(subjects=1, per_class=21, classes=4, pairs=9, length=8, seed=0):
    """Trial-structured dataset: every trial contributes ``pairs`` samples."""
    rng = np.random.default_rng(seed)
    X, y, sid, tid, pid = [], [], [], [], []
    for s in range(1, subjects + 1):
        trial = 0
        for c in range(classes):
            for _ in range(per_class):
                for p in range(pairs):
                    X.append(rng.normal(size=length))
                    y.append(c)
                    sid.append(s)
                    tid.append(trial)
                    pid.append(p)
                trial += 1
    return Dataset(np.array(X), y, sid, tid, pid, class_count=classes)


class TestBuild:
    def test_corpus_size(self):
        d = make_corpus(subjects=10, length=4)
        assert len(d) == 7560
        assert len(set(d.trial_keys())) == 840

    def test_singleton(self):
        d = build_dataset([LabeledSample(np.zeros(5), 0)])
        assert d.class_count == 1 and d.uniform_length == 5

    def test_ragged(self):
        with pytest.raises(LengthMismatch):
            build_dataset([LabeledSample(np.zeros(8), 0), LabeledSample(np.zeros(9), 0)])

    def test_empty(self):
        with pytest.raises(EmptyInput):
            build_dataset([])

    def test_label_out_of_range(self):
        with pytest.raises(LabelOutOfRange):
            build_dataset([LabeledSample(np.zeros(3), 2)], class_count=2)

    def test_non_finite_sample_rejected(self):
        with pytest.raises(ValueError):
            LabeledSample(np.array([1.0, np.nan]), 0)

    def test_order_preserved_and_read_only(self):
        samples = [LabeledSample(np.full(3, i, dtype=float), i % 2, 1, i) for i in range(6)]
        d = build_dataset(samples)
        assert d.X[:, 0].tolist() == list(range(6))
        with pytest.raises(ValueError):
            d.X[0, 0] = 1.0


class TestContainer:
    def test_round_trip_bit_exact(self, rng):
        d = make_corpus(per_class=3, pairs=2, length=17)
        X = rng.normal(size=d.X.shape) * 1e-300
        d = Dataset(X, d.y, d.subject_id, d.trial_id, d.pair_id, 4)
        back = Dataset.from_bytes(d.to_bytes())
        assert back.X.tobytes() == d.X.tobytes()
        for name in ("y", "subject_id", "trial_id", "pair_id"):
            assert np.array_equal(getattr(back, name), getattr(d, name))
        assert back.class_names == d.class_names

    def test_bytes_deterministic(self):
        d = make_corpus(per_class=2, pairs=1)
        assert d.to_bytes() == make_corpus(per_class=2, pairs=1).to_bytes()

    def test_header_is_text(self):
        blob = make_corpus(per_class=1, pairs=1).to_bytes()
        head = blob.split(b"\n\n", 1)[0].decode("ascii").splitlines()
        assert head[0] == "RKEG-CONTAINER 1"
        assert head[1] == "kind: dataset"

    def test_wrong_kind(self):
        blob = container.dumps("other", {}, {})
        with pytest.raises(ContainerError):
            Dataset.from_bytes(blob)

    def test_truncated(self):
        blob = make_corpus(per_class=1, pairs=1).to_bytes()
        with pytest.raises(ContainerError):
            Dataset.from_bytes(blob[:-3])

    def test_save_load(self, tmp_path):
        d = make_corpus(per_class=2, pairs=2)
        path = tmp_path / "d.rkeg"
        d.save(path)
        assert Dataset.load(path).to_bytes() == d.to_bytes()
        assert container.peek_kind(path) == "dataset"


class TestKFold:
    def test_literal_mode_arithmetic(self):
        d = make_corpus()
        plan = kfold_by_trial(d, k=10, seed=0, mode="paper-literal")
        table = d.trial_table()
        for fold in plan:
            assert len(fold.train) == 76 and len(fold.test) == 8
            per_class = np.bincount([table[t] for t in fold.test], minlength=4)
            assert per_class.tolist() == [2, 2, 2, 2]

    def test_literal_mode_pooled(self):
        d = make_corpus(subjects=10, pairs=1, length=2)
        for fold in kfold_by_trial(d, k=10, mode="paper-literal"):
            assert (len(fold.train), len(fold.test)) == (760, 80)

    def test_literal_mode_leaves_one_per_class_untested(self):
        d = make_corpus(pairs=1)
        plan = kfold_by_trial(d, k=10, mode="paper-literal")
        tested = set().union(*(f.test for f in plan))
        assert len(tested) == 80

    def test_even_coverage(self):
        d = make_corpus()
        plan = kfold_by_trial(d, k=10, seed=3)
        seen = [t for f in plan for t in f.test]
        assert sorted(seen) == sorted(set(d.trial_keys()))
        sizes = {len(f.test) for f in plan}
        assert sizes <= {8, 9, 10, 11, 12}

    def test_even_class_chunks_differ_by_at_most_one(self):
        d = make_corpus(pairs=1)
        table = d.trial_table()
        for c in range(4):
            sizes = [sum(table[t] == c for t in f.test) for f in kfold_by_trial(d, k=10)]
            assert max(sizes) - min(sizes) <= 1 and sum(sizes) == 21

    def test_k1(self):
        d = make_corpus(per_class=2, pairs=1)
        (fold,) = kfold_by_trial(d, k=1).folds
        assert fold.test == frozenset(d.trial_keys()) and not fold.train

    def test_insufficient(self):
        d = make_corpus(per_class=5, pairs=1)
        with pytest.raises(InsufficientTrials):
            kfold_by_trial(d, k=10, mode="paper-literal")
        with pytest.raises(InsufficientTrials):
            kfold_by_trial(d, k=10)

    def test_deterministic(self):
        d = make_corpus(pairs=2)
        assert kfold_by_trial(d, seed=4) == kfold_by_trial(d, seed=4)
        assert kfold_by_trial(d, seed=4) != kfold_by_trial(d, seed=5)

    def test_sample_indices_keep_trials_together(self):
        d = make_corpus(per_class=10, pairs=9)
        plan = kfold_by_trial(d, k=5, seed=1)
        keys = d.trial_keys()
        for train, test in plan.sample_indices(d):
            assert not {keys[i] for i in train} & {keys[i] for i in test}
            assert len(train) + len(test) == len(d)


@st.composite
def random_corpora(draw):
    subjects = draw(st.integers(1, 3))
    classes = draw(st.integers(1, 4))
    k = draw(st.integers(2, 5))
    per_class = draw(st.integers(k, k + 6))
    pairs = draw(st.integers(1, 4))
    seed = draw(st.integers(0, 2**32 - 1))
    mode = draw(st.sampled_from(["even", "paper-literal"]))
    return make_corpus(subjects, per_class, classes, pairs, length=2, seed=seed % 1000), k, \
        seed, mode


@given(random_corpora())
def test_folds_disjoint_and_leak_free(args):
    d, k, seed, mode = args
    plan = kfold_by_trial(d, k=k, seed=seed, mode=mode)
    universe = set(d.trial_keys())
    keys = d.trial_keys()
    for fold, (train, test) in zip(plan, plan.sample_indices(d)):
        assert not fold.train & fold.test
        assert fold.train | fold.test == universe
        train_trials = {keys[i] for i in train}
        assert all(keys[i] not in train_trials for i in test)


class TestRatioSplit:
    def test_largest_remainder_pinned(self):
        assert largest_remainder(21, (5, 2, 3)) == [11, 4, 6]
        assert largest_remainder(10, (5, 2, 3)) == [5, 2, 3]
        assert largest_remainder(7, (1, 1, 1)) == [3, 2, 2]

    def test_84_trials(self):
        d = make_corpus()
        train, val, test = ratio_split(d, seed=0)
        counts = [len(set(p.trial_keys())) for p in (train, val, test)]
        assert counts == [44, 16, 24]
        for part, expect in zip((train, val, test), (11, 4, 6)):
            per_class = np.bincount(list(part.trial_table().values()), minlength=4)
            assert per_class.tolist() == [expect] * 4

    def test_disjoint_union(self):
        d = make_corpus(per_class=13, pairs=3)
        parts = ratio_split(d, seed=9)
        sets = [set(p.trial_keys()) for p in parts]
        assert not (sets[0] & sets[1] or sets[0] & sets[2] or sets[1] & sets[2])
        assert set.union(*sets) == set(d.trial_keys())
        assert sum(len(p) for p in parts) == len(d)

    def test_degenerate_ratio(self):
        d = make_corpus(per_class=3, pairs=1)
        train, val, test = ratio_split(d, (1, 0, 0))
        assert len(train) == len(d) and val is None and test is None

    def test_deterministic(self):
        d = make_corpus(per_class=6, pairs=2)
        a = ratio_split(d, seed=2)
        b = ratio_split(d, seed=2)
        assert all(x.to_bytes() == y.to_bytes() for x, y in zip(a, b))

    def test_insufficient(self):
        d = make_corpus(per_class=1, pairs=1)
        with pytest.raises(InsufficientTrials):
            ratio_split(d)

    @given(st.integers(0, 200), st.lists(st.integers(0, 9), min_size=1, max_size=5))
    def test_largest_remainder_properties(self, n, ratios):
        if sum(ratios) == 0:
            return
        parts = largest_remainder(n, ratios)
        assert sum(parts) == n
        total = sum(ratios)
        for p, r in zip(parts, ratios):
            assert abs(p - n * r / total) < 1
