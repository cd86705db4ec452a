import math

import numpy as np
import pytest

from mirrormatch.imitation.tree import (
    HoeffdingTree,
    N_CLASSES,
    NUMERIC_ATTRS,
    RANGE_R,
    hoeffding_bound,
    split_candidates,
)


def test_hoeffding_bound_fixtures():
    assert hoeffding_bound(1.0, 1.0, 5) == 0.0  # ln(1) = 0
    # closed-form evaluations, R = log2(8) for 8 classes
    assert hoeffding_bound(3.0, 1e-7, 200) == pytest.approx(0.60221, abs=1e-5)
    assert hoeffding_bound(1.0, 0.05, 1) == pytest.approx(1.22387, abs=1e-5)


def test_hoeffding_bound_matches_closed_form():
    rng = np.random.default_rng(42)
    for _ in range(100):
        r = float(rng.uniform(0.1, 10.0))
        delta = float(rng.uniform(1e-9, 0.999))
        n = int(rng.integers(1, 10_000))
        expected = math.sqrt(r * r * math.log(1.0 / delta) / (2.0 * n))
        assert abs(hoeffding_bound(r, delta, n) - expected) < 1e-12


def test_hoeffding_bound_decreasing_in_n():
    values = [hoeffding_bound(RANGE_R, 1e-7, n) for n in (1, 5, 50, 500, 5000)]
    assert all(a > b for a, b in zip(values, values[1:]))


def _dx_stream(n, seed=0):
    """Synthetic persona-like stream: label is a deterministic 3-region
    function of dx; dy fixed at 0, action codes echo the label."""
    rng = np.random.default_rng(seed)
    prev = 0
    for _ in range(n):
        dx = float(rng.uniform(-0.5, 0.5))
        if dx < -0.0833:
            label = 1
        elif dx > 0.0833:
            label = 2
        else:
            label = 5
        x = np.array([dx, 0.0, float(prev), 0.0])
        yield x, label
        prev = label


def test_tree_learns_deterministic_mapping():
    tree = HoeffdingTree(subspace=(0, 1), grace_period=50)
    correct = 0
    total = 0
    for i, (x, y) in enumerate(_dx_stream(3000)):
        if i >= 2000:
            correct += int(tree.predict(x) == y)
            total += 1
        tree.learn_one(x, y)
    assert tree.n_splits >= 2
    assert correct / total >= 0.95


def test_pure_stream_never_splits():
    tree = HoeffdingTree(subspace=(0, 2), grace_period=25)
    x = np.array([0.3, 0.0, 5.0, 0.0])
    for _ in range(500):
        tree.learn_one(x, 5)
    assert tree.n_splits == 0
    assert tree.predict(x) == 5


def test_untrained_tree_uniform():
    tree = HoeffdingTree(subspace=(0, 1))
    probs = tree.predict_proba(np.zeros(4))
    assert probs == pytest.approx(np.full(8, 1 / 8))
    assert tree.predict(np.zeros(4)) == 0


class ExhaustiveSplitOracle:
    """Recomputes information gain for every (attribute, threshold) candidate
    straight from the leaf statistics and replays the split rule."""

    def __init__(self, delta_split, tie_epsilon=0.05):
        self.delta_split = delta_split
        self.tie_epsilon = tie_epsilon
        self.disagreements = []

    @staticmethod
    def _entropy(counts):
        total = sum(counts)
        if total <= 0:
            return 0.0
        h = 0.0
        for c in counts:
            if c > 0:
                p = c / total
                h -= p * math.log2(p)
        return h

    def check(self, leaf, candidates, eps, chosen):
        n = float(leaf.class_counts.sum())
        parent_h = self._entropy(leaf.class_counts)
        best_by_attr = {}
        for cand in candidates:
            nl = float(cand.left_counts.sum())
            nr = float(cand.right_counts.sum())
            gain = parent_h - (
                nl / n * self._entropy(cand.left_counts)
                + nr / n * self._entropy(cand.right_counts)
            )
            cur = best_by_attr.get(cand.attribute)
            if cur is None or gain > cur[0]:
                best_by_attr[cand.attribute] = (gain, cand.attribute, cand.threshold)
        merits = sorted(best_by_attr.values(), key=lambda s: -s[0])
        best = merits[0]
        second = merits[1][0] if len(merits) > 1 else 0.0
        expected_eps = hoeffding_bound(RANGE_R, self.delta_split, leaf.n_seen)
        if abs(expected_eps - eps) > 1e-12:
            self.disagreements.append(("eps", expected_eps, eps))
            return
        should_split = best[0] > 0.0 and (
            best[0] - second > eps or eps < self.tie_epsilon
        )
        if should_split != (chosen is not None):
            self.disagreements.append(("decision", should_split, chosen))
        elif chosen is not None:
            if (chosen.attribute, chosen.threshold) != (best[1], best[2]):
                self.disagreements.append(("choice", best, chosen))


def test_split_decisions_match_exhaustive_oracle():
    # small-instance verification: 200 examples, 1 tree, grace 25
    oracle = ExhaustiveSplitOracle(delta_split=1e-7)
    tree = HoeffdingTree(
        subspace=(0, 2),
        grace_period=25,
        delta_split=1e-7,
        split_observer=oracle.check,
    )
    for x, y in _dx_stream(200, seed=3):
        tree.learn_one(x, y)
    assert tree.n_splits >= 1, "stream should trigger at least one split"
    assert oracle.disagreements == []


def test_candidate_masses_conserve_counts():
    tree = HoeffdingTree(subspace=(0, 3), grace_period=1000)
    for x, y in _dx_stream(400, seed=9):
        tree.learn_one(x, y)
    leaf = tree.root
    for cand in split_candidates(leaf, tree.subspace):
        total = cand.left_counts + cand.right_counts
        assert total == pytest.approx(leaf.class_counts)
        assert (cand.left_counts >= -1e-9).all()
        assert (cand.right_counts >= -1e-9).all()
