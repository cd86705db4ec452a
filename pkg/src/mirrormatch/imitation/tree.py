"""Incremental decision tree with Hoeffding-bound split decisions.

Feature layout follows the arena's FeatureVector: attributes 0 and 1 (dx, dy)
are numeric and summarized per class by streaming Gaussians; attributes 2
and 3 (the two current action codes) are categorical with dense per-class
value counts. Splits are binary: numeric `x[a] <= t` with candidate
thresholds on an even grid over the observed range, categorical `x[a] == v`
equality partitions.

A leaf attempts to split each time its seen weight crosses a multiple of
``grace_period``. Each attribute's merit is the information gain of its best
candidate; the leaf splits when the top attribute's lead over the runner-up
attribute exceeds the Hoeffding bound eps = sqrt(R^2 ln(1/delta) / 2n) with
R = log2(n_classes), or when eps has shrunk below the tie threshold.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

N_CLASSES = 8
N_ATTRS = 4
NUMERIC_ATTRS = (0, 1)
N_THRESHOLDS = 10
RANGE_R = math.log2(N_CLASSES)

_SQRT2 = math.sqrt(2.0)


def hoeffding_bound(range_r: float, delta: float, n: float) -> float:
    """Deviation bound for a mean of n observations with range range_r."""
    return math.sqrt(range_r * range_r * math.log(1.0 / delta) / (2.0 * n))


def _entropy(counts: np.ndarray) -> float:
    total = counts.sum()
    if total <= 0.0:
        return 0.0
    p = counts[counts > 0.0] / total
    return float(-(p * np.log2(p)).sum())


def _gauss_cdf(x: float, mean: float, std: float) -> float:
    if std <= 0.0:
        return 1.0 if x >= mean else 0.0
    return 0.5 * (1.0 + math.erf((x - mean) / (std * _SQRT2)))


@dataclass
class LeafNode:
    class_counts: np.ndarray = field(
        default_factory=lambda: np.zeros(N_CLASSES, dtype=np.float64)
    )
    n_seen: float = 0.0
    # numeric attr -> (per-class [count, mean, M2]), plus observed range
    gauss: dict = field(default_factory=dict)
    ranges: dict = field(default_factory=dict)
    # categorical attr -> per-class value counts, shape (N_CLASSES, N_CLASSES)
    cat_counts: dict = field(default_factory=dict)
    _last_split_check: float = 0.0

    def observe(self, x: np.ndarray, y: int, weight: float, subspace: tuple) -> None:
        self.class_counts[y] += weight
        self.n_seen += weight
        for attr in subspace:
            v = float(x[attr])
            if attr in NUMERIC_ATTRS:
                stats = self.gauss.setdefault(
                    attr, np.zeros((N_CLASSES, 3), dtype=np.float64)
                )
                cnt, mean, m2 = stats[y]
                cnt += weight
                delta = v - mean
                mean += weight * delta / cnt
                m2 += weight * delta * (v - mean)
                stats[y] = (cnt, mean, m2)
                rng = self.ranges.get(attr)
                if rng is None:
                    self.ranges[attr] = [v, v]
                else:
                    rng[0] = min(rng[0], v)
                    rng[1] = max(rng[1], v)
            else:
                counts = self.cat_counts.setdefault(
                    attr, np.zeros((N_CLASSES, N_CLASSES), dtype=np.float64)
                )
                counts[y, int(v)] += weight

    def distribution(self) -> np.ndarray:
        total = self.class_counts.sum()
        if total <= 0.0:
            return np.full(N_CLASSES, 1.0 / N_CLASSES)
        return self.class_counts / total


@dataclass
class SplitNode:
    attribute: int
    threshold: float  # numeric: x[a] <= threshold; categorical: x[a] == threshold
    left: object
    right: object


@dataclass(frozen=True)
class SplitCandidate:
    gain: float
    attribute: int
    threshold: float
    left_counts: np.ndarray
    right_counts: np.ndarray


def split_candidates(leaf: LeafNode, subspace: tuple) -> list[SplitCandidate]:
    """Score every (attribute, threshold) candidate by information gain,
    in a fixed enumeration order so tie handling is deterministic."""
    parent_entropy = _entropy(leaf.class_counts)
    n = leaf.class_counts.sum()
    out: list[SplitCandidate] = []
    if n <= 0.0:
        return out
    for attr in subspace:
        if attr in NUMERIC_ATTRS:
            stats = leaf.gauss.get(attr)
            rng = leaf.ranges.get(attr)
            if stats is None or rng is None or rng[1] <= rng[0]:
                continue
            lo, hi = rng
            for i in range(1, N_THRESHOLDS + 1):
                t = lo + (hi - lo) * i / (N_THRESHOLDS + 1)
                left = np.zeros(N_CLASSES)
                for cls in range(N_CLASSES):
                    cnt, mean, m2 = stats[cls]
                    if cnt <= 0.0:
                        continue
                    std = math.sqrt(max(m2 / cnt, 0.0))
                    left[cls] = cnt * _gauss_cdf(t, mean, std)
                right = leaf.class_counts - left
                out.append(_candidate(parent_entropy, n, attr, t, left, right))
        else:
            counts = leaf.cat_counts.get(attr)
            if counts is None:
                continue
            for value in range(N_CLASSES):
                left = counts[:, value].copy()
                if left.sum() <= 0.0:
                    continue
                right = leaf.class_counts - left
                out.append(_candidate(parent_entropy, n, attr, float(value), left, right))
    return [c for c in out if c is not None]


def _candidate(parent_entropy, n, attr, threshold, left, right):
    nl, nr = left.sum(), right.sum()
    if nl <= 1e-9 or nr <= 1e-9:
        return None
    child = (nl / n) * _entropy(left) + (nr / n) * _entropy(right)
    return SplitCandidate(parent_entropy - child, attr, threshold, left, right)


def attribute_merits(cands: list[SplitCandidate]) -> list[SplitCandidate]:
    """One candidate per attribute (that attribute's best threshold), ranked
    by gain descending. Ties keep enumeration order, so the result is
    deterministic."""
    best_per_attr: dict[int, SplitCandidate] = {}
    for cand in cands:
        cur = best_per_attr.get(cand.attribute)
        if cur is None or cand.gain > cur.gain:
            best_per_attr[cand.attribute] = cand
    return sorted(best_per_attr.values(), key=lambda c: -c.gain)


class HoeffdingTree:
    def __init__(
        self,
        subspace: tuple,
        grace_period: int = 50,
        delta_split: float = 1e-7,
        tie_epsilon: float = 0.05,
        split_observer=None,
    ):
        self.subspace = tuple(sorted(subspace))
        self.grace_period = grace_period
        self.delta_split = delta_split
        self.tie_epsilon = tie_epsilon
        self.split_observer = split_observer
        self.root = LeafNode()
        self.n_splits = 0

    def _sort(self, x: np.ndarray) -> LeafNode:
        node = self.root
        while isinstance(node, SplitNode):
            v = float(x[node.attribute])
            if node.attribute in NUMERIC_ATTRS:
                node = node.left if v <= node.threshold else node.right
            else:
                node = node.left if int(v) == int(node.threshold) else node.right
        return node

    def learn_one(self, x: np.ndarray, y: int, weight: float = 1.0) -> None:
        leaf = self._sort(x)
        leaf.observe(x, y, weight, self.subspace)
        if leaf.n_seen - leaf._last_split_check >= self.grace_period:
            leaf._last_split_check = leaf.n_seen
            self._attempt_split(leaf, x)

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return self._sort(x).distribution()

    def predict(self, x: np.ndarray) -> int:
        return int(np.argmax(self.predict_proba(x)))

    # -- split machinery ------------------------------------------------------

    def _attempt_split(self, leaf: LeafNode, x: np.ndarray) -> None:
        if np.count_nonzero(leaf.class_counts) < 2:
            return  # pure leaf: nothing to gain
        cands = split_candidates(leaf, self.subspace)
        if not cands:
            return
        merits = attribute_merits(cands)
        best = merits[0]
        second_gain = merits[1].gain if len(merits) > 1 else 0.0
        eps = hoeffding_bound(RANGE_R, self.delta_split, leaf.n_seen)
        do_split = best.gain > 0.0 and (
            best.gain - second_gain > eps or eps < self.tie_epsilon
        )
        if self.split_observer is not None:
            self.split_observer(leaf, cands, eps, best if do_split else None)
        if not do_split:
            return
        self._apply_split(leaf, best, x)

    def _apply_split(self, leaf: LeafNode, cand: SplitCandidate, x: np.ndarray) -> None:
        # children start with the projected class masses but fresh attribute
        # stats, so follow-up splits use locally observed data
        left = LeafNode(class_counts=cand.left_counts.copy(),
                        n_seen=float(cand.left_counts.sum()))
        right = LeafNode(class_counts=cand.right_counts.copy(),
                         n_seen=float(cand.right_counts.sum()))
        split = SplitNode(cand.attribute, cand.threshold, left, right)
        self.n_splits += 1
        if leaf is self.root:
            self.root = split
            return
        parent, went_left = self._find_parent(self.root, leaf, x)
        if went_left:
            parent.left = split
        else:
            parent.right = split

    def _find_parent(self, node, leaf, x):
        parent, went_left = None, False
        while isinstance(node, SplitNode):
            v = float(x[node.attribute])
            if node.attribute in NUMERIC_ATTRS:
                go_left = v <= node.threshold
            else:
                go_left = int(v) == int(node.threshold)
            child = node.left if go_left else node.right
            if child is leaf:
                return node, go_left
            parent, went_left = node, go_left
            node = child
        raise AssertionError("leaf not reachable from root")
