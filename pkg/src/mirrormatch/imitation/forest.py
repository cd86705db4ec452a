"""Adaptive random forest over the arena's 4-component feature vectors.

Each member is a Hoeffding tree restricted to a random feature subspace,
bagged online with Poisson example weights, and watched by two adaptive
windowing detectors on its own prediction correctness: a loose one that
starts a background tree (warning) and a tight one that swaps the background
tree in (drift). Predictions are an accuracy-weighted vote of the members'
leaf distributions. The forest-level prequential tracker records
test-then-train correctness of the ensemble vote.
"""
from __future__ import annotations

import copy
import struct
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ..arena import ActionId, FeatureVector, P1, encode_features
from ..errors import ConfigError
from ..snapshots import AgentSnapshot, KIND_IMITATION
from .adwin import AdwinDetector
from .tree import HoeffdingTree, LeafNode, SplitNode, N_ATTRS, N_CLASSES, NUMERIC_ATTRS


@dataclass(frozen=True)
class LabeledExample:
    features: FeatureVector
    label: ActionId


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 10
    lambda_bagging: float = 6.0  # <= 0 disables bagging (every weight = 1)
    delta_split: float = 1e-7
    delta_warn: float = 0.01  # <= 0 disables the warning detector
    delta_drift: float = 0.002  # <= 0 disables the drift detector
    grace_period: int = 50
    subspace_size: int = 2
    window: int = 1000  # prequential window W
    weight_window: int = 200  # member accuracy horizon for vote weights
    weight_floor: float = 0.01

    def validate(self) -> None:
        if self.n_trees < 1:
            raise ConfigError(f"n_trees must be >= 1, got {self.n_trees}")
        for name in ("delta_split",):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ConfigError(f"{name} must be in (0,1), got {v}")
        for name in ("delta_warn", "delta_drift"):
            v = getattr(self, name)
            if v >= 1.0:
                raise ConfigError(f"{name} must be < 1, got {v}")
        if not 1 <= self.subspace_size <= N_ATTRS:
            raise ConfigError(f"subspace_size must be in 1..{N_ATTRS}")
        if self.grace_period < 1:
            raise ConfigError("grace_period must be >= 1")
        if self.window < 1 or self.weight_window < 1:
            raise ConfigError("window sizes must be >= 1")


class ForestMember:
    __slots__ = (
        "tree",
        "drift_detector",
        "warning_detector",
        "background_tree",
        "weight_bits",
        "rng",
        "config",
    )

    def __init__(self, config: ForestConfig, rng: np.random.Generator):
        self.config = config
        self.rng = rng
        self.tree = self._fresh_tree()
        self.drift_detector = self._new_detector(config.delta_drift)
        self.warning_detector = self._new_detector(config.delta_warn)
        self.background_tree: HoeffdingTree | None = None
        self.weight_bits: deque = deque(maxlen=config.weight_window)

    @staticmethod
    def _new_detector(delta: float) -> AdwinDetector | None:
        return AdwinDetector(delta) if delta > 0.0 else None

    def _fresh_tree(self) -> HoeffdingTree:
        subspace = tuple(
            sorted(self.rng.choice(N_ATTRS, size=self.config.subspace_size, replace=False))
        )
        return HoeffdingTree(
            subspace,
            grace_period=self.config.grace_period,
            delta_split=self.config.delta_split,
        )

    def weight(self) -> float:
        if not self.weight_bits:
            return 1.0
        acc = sum(self.weight_bits) / len(self.weight_bits)
        return max(acc, self.config.weight_floor)


class ForestModel:
    def __init__(self, config: ForestConfig, members: list[ForestMember]):
        self.config = config
        self.members = members
        self.window_bits: deque = deque(maxlen=config.window)
        self.lifetime_correct = 0
        self.lifetime_total = 0


def forest_new(config: ForestConfig, seed: int) -> ForestModel:
    config.validate()
    seeds = np.random.SeedSequence(seed).spawn(config.n_trees)
    members = [
        ForestMember(config, np.random.default_rng(s)) for s in seeds
    ]
    return ForestModel(config, members)


def _vote(model: ForestModel, member_probs: list[np.ndarray]) -> np.ndarray:
    dist = np.zeros(N_CLASSES)
    for member, probs in zip(model.members, member_probs):
        dist += member.weight() * probs
    total = dist.sum()
    if total <= 0.0:
        return np.full(N_CLASSES, 1.0 / N_CLASSES)
    return dist / total


def predict_one(model: ForestModel, features: FeatureVector):
    """Accuracy-weighted vote; ties resolve to the lowest action code."""
    x = features.as_array()
    dist = _vote(model, [m.tree.predict_proba(x) for m in model.members])
    return ActionId(int(np.argmax(dist))), dist


def _worsened(det: AdwinDetector | None, bit: float) -> bool:
    if det is None:
        return False
    before = det.mean
    return det.update(bit) and det.mean < before


def learn_one(model: ForestModel, example: LabeledExample) -> list[tuple[int, str]]:
    """Test-then-train on one example.

    Per member: record the pre-update prediction into its detectors and vote
    weight, train with a Poisson(lambda) example weight, then react to
    warning (start background tree) and drift (promote background tree,
    reset detectors). The ensemble vote's correctness feeds the forest-level
    prequential tracker. Returns [(member index, "warning"|"drift"), ...].
    """
    x = example.features.as_array()
    y = int(example.label)
    cfg = model.config

    member_probs = [m.tree.predict_proba(x) for m in model.members]
    forest_pred = int(np.argmax(_vote(model, member_probs)))
    forest_bit = 1 if forest_pred == y else 0
    model.window_bits.append(forest_bit)
    model.lifetime_correct += forest_bit
    model.lifetime_total += 1

    events: list[tuple[int, str]] = []
    for idx, member in enumerate(model.members):
        bit = 1.0 if int(np.argmax(member_probs[idx])) == y else 0.0
        # a cut only counts as warning/drift when the member got WORSE:
        # ADWIN is two-sided and would otherwise fire on warm-up improvement
        warned = _worsened(member.warning_detector, bit)
        drifted = _worsened(member.drift_detector, bit)
        member.weight_bits.append(bit)

        if cfg.lambda_bagging > 0.0:
            k = int(member.rng.poisson(cfg.lambda_bagging))
        else:
            k = 1
        if k > 0:
            member.tree.learn_one(x, y, weight=float(k))
            if member.background_tree is not None:
                member.background_tree.learn_one(x, y, weight=float(k))

        if warned:
            events.append((idx, "warning"))
            if member.background_tree is None:
                member.background_tree = member._fresh_tree()
            member.warning_detector = ForestMember._new_detector(cfg.delta_warn)
        if drifted:
            events.append((idx, "drift"))
            member.tree = member.background_tree or member._fresh_tree()
            member.background_tree = None
            member.drift_detector = ForestMember._new_detector(cfg.delta_drift)
            member.warning_detector = ForestMember._new_detector(cfg.delta_warn)
            member.weight_bits.clear()
    return events


def prequential_accuracy(model: ForestModel) -> dict:
    """Windowed and lifetime test-then-train accuracy; None before any example."""
    window_acc = (
        sum(model.window_bits) / len(model.window_bits) if model.window_bits else None
    )
    lifetime_acc = (
        model.lifetime_correct / model.lifetime_total if model.lifetime_total else None
    )
    return {"window_acc": window_acc, "lifetime_acc": lifetime_acc}


def imitation_snapshot(model: ForestModel, side: str = P1) -> AgentSnapshot:
    """Frozen copy acting for the imitated side; later learn_one calls on the
    live model do not affect it."""
    frozen_members = [
        (copy.deepcopy(m.tree), m.weight()) for m in model.members
    ]

    def _act(state):
        x = encode_features(state, side).as_array()
        dist = np.zeros(N_CLASSES)
        for tree, weight in frozen_members:
            dist += weight * tree.predict_proba(x)
        return ActionId(int(np.argmax(dist)))

    return AgentSnapshot(kind=KIND_IMITATION, act=_act, version=0)


# ---------------------------------------------------------------------------
# serialization: versioned little-endian binary snapshot

MAGIC = b"PDDAFRST"
FORMAT_VERSION = 1


def _dump_tree(tree: HoeffdingTree, out: bytearray) -> None:
    out += struct.pack("<B", len(tree.subspace))
    out += struct.pack(f"<{len(tree.subspace)}B", *tree.subspace)
    out += struct.pack("<idd", tree.grace_period, tree.delta_split, tree.tie_epsilon)
    _dump_node(tree.root, tree.subspace, out)


def _dump_node(node, subspace, out: bytearray) -> None:
    if isinstance(node, SplitNode):
        out += struct.pack("<BBd", 1, node.attribute, node.threshold)
        _dump_node(node.left, subspace, out)
        _dump_node(node.right, subspace, out)
        return
    out += struct.pack("<B", 0)
    out += struct.pack("<dd", node.n_seen, node._last_split_check)
    out += node.class_counts.astype("<f8").tobytes()
    for attr in subspace:
        if attr in NUMERIC_ATTRS:
            rng = node.ranges.get(attr)
            stats = node.gauss.get(attr)
            out += struct.pack("<B", 1 if rng is not None else 0)
            if rng is not None:
                out += struct.pack("<dd", rng[0], rng[1])
                out += stats.astype("<f8").tobytes()
        else:
            counts = node.cat_counts.get(attr)
            out += struct.pack("<B", 1 if counts is not None else 0)
            if counts is not None:
                out += counts.astype("<f8").tobytes()


def _dump_detector(det: AdwinDetector | None, out: bytearray) -> None:
    if det is None:
        out += struct.pack("<B", 0)
        return
    out += struct.pack("<Bd", 1, det.delta)
    out += struct.pack("<I", len(det._buckets))
    for size, total in det._buckets:
        out += struct.pack("<Qd", int(size), total)


def save_forest(model: ForestModel) -> bytes:
    cfg = model.config
    out = bytearray()
    out += MAGIC
    out += struct.pack("<H", FORMAT_VERSION)
    out += struct.pack(
        "<iddddiiiid",
        cfg.n_trees,
        cfg.lambda_bagging,
        cfg.delta_split,
        cfg.delta_warn,
        cfg.delta_drift,
        cfg.grace_period,
        cfg.subspace_size,
        cfg.window,
        cfg.weight_window,
        cfg.weight_floor,
    )
    out += struct.pack("<QQ", model.lifetime_correct, model.lifetime_total)
    out += struct.pack("<I", len(model.window_bits))
    out += struct.pack(f"<{len(model.window_bits)}B", *model.window_bits)
    for member in model.members:
        bits = [int(b) for b in member.weight_bits]
        out += struct.pack("<I", len(bits))
        if bits:
            out += struct.pack(f"<{len(bits)}B", *bits)
        _dump_detector(member.warning_detector, out)
        _dump_detector(member.drift_detector, out)
        out += struct.pack("<B", 1 if member.background_tree is not None else 0)
        if member.background_tree is not None:
            _dump_tree(member.background_tree, out)
        _dump_tree(member.tree, out)
    return bytes(out)


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, fmt: str):
        vals = struct.unpack_from(fmt, self.buf, self.pos)
        self.pos += struct.calcsize(fmt)
        return vals

    def take_array(self, count: int, shape) -> np.ndarray:
        nbytes = count * 8
        arr = np.frombuffer(self.buf, dtype="<f8", count=count, offset=self.pos).copy()
        self.pos += nbytes
        return arr.reshape(shape)


def _load_tree(r: _Reader) -> HoeffdingTree:
    (n_sub,) = r.take("<B")
    subspace = tuple(r.take(f"<{n_sub}B"))
    grace, delta_split, tie = r.take("<idd")
    tree = HoeffdingTree(
        subspace, grace_period=grace, delta_split=delta_split, tie_epsilon=tie
    )
    tree.root = _load_node(r, subspace)
    return tree


def _load_node(r: _Reader, subspace):
    (kind,) = r.take("<B")
    if kind == 1:
        attr, threshold = r.take("<Bd")
        left = _load_node(r, subspace)
        right = _load_node(r, subspace)
        return SplitNode(attr, threshold, left, right)
    n_seen, last_check = r.take("<dd")
    leaf = LeafNode(
        class_counts=r.take_array(N_CLASSES, (N_CLASSES,)),
        n_seen=n_seen,
        _last_split_check=last_check,
    )
    for attr in subspace:
        (present,) = r.take("<B")
        if not present:
            continue
        if attr in NUMERIC_ATTRS:
            lo, hi = r.take("<dd")
            leaf.ranges[attr] = [lo, hi]
            leaf.gauss[attr] = r.take_array(N_CLASSES * 3, (N_CLASSES, 3))
        else:
            leaf.cat_counts[attr] = r.take_array(
                N_CLASSES * N_CLASSES, (N_CLASSES, N_CLASSES)
            )
    return leaf


def _load_detector(r: _Reader) -> AdwinDetector | None:
    (present,) = r.take("<B")
    if not present:
        return None
    (delta,) = r.take("<d")
    det = AdwinDetector(delta)
    (n_buckets,) = r.take("<I")
    for _ in range(n_buckets):
        size, total = r.take("<Qd")
        det._buckets.append([float(size), total])
        det._counts[int(size)] = det._counts.get(int(size), 0) + 1
        det.width += int(size)
        det.total += total
    return det


def load_forest(data: bytes, seed: int = 0) -> ForestModel:
    """Restore a serialized forest. Member RNG streams are reseeded from
    `seed` (bagging draws are not part of the snapshot format)."""
    if data[:8] != MAGIC:
        raise ValueError("not a forest snapshot (bad magic)")
    r = _Reader(data)
    r.pos = 8
    (version,) = r.take("<H")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported forest snapshot version {version}")
    vals = r.take("<iddddiiiid")
    cfg = ForestConfig(
        n_trees=vals[0],
        lambda_bagging=vals[1],
        delta_split=vals[2],
        delta_warn=vals[3],
        delta_drift=vals[4],
        grace_period=vals[5],
        subspace_size=vals[6],
        window=vals[7],
        weight_window=vals[8],
        weight_floor=vals[9],
    )
    model = forest_new(cfg, seed)
    model.lifetime_correct, model.lifetime_total = r.take("<QQ")
    (n_window,) = r.take("<I")
    if n_window:
        model.window_bits.extend(r.take(f"<{n_window}B"))
    for member in model.members:
        (n_bits,) = r.take("<I")
        if n_bits:
            member.weight_bits.extend(float(b) for b in r.take(f"<{n_bits}B"))
        member.warning_detector = _load_detector(r)
        member.drift_detector = _load_detector(r)
        (has_bg,) = r.take("<B")
        member.background_tree = _load_tree(r) if has_bg else None
        member.tree = _load_tree(r)
    return model
