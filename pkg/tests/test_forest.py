import dataclasses

import numpy as np
import pytest

from mirrormatch.arena import ActionId, EnvConfig, FeatureVector, new_game
from mirrormatch.errors import ConfigError
from mirrormatch.imitation import (
    ForestConfig,
    HoeffdingTree,
    LabeledExample,
    forest_new,
    imitation_snapshot,
    learn_one,
    load_forest,
    predict_one,
    prequential_accuracy,
    save_forest,
)
from mirrormatch.imitation.tree import LeafNode


def _fv(dx, dy=0.0, sa=0, oa=0):
    return FeatureVector(dx=dx, dy=dy, self_action=sa, opp_action=oa)


def _region_label(dx):
    if dx < -0.0833:
        return ActionId.MOVE_LEFT
    if dx > 0.0833:
        return ActionId.MOVE_RIGHT
    return ActionId.PUNCH


def _region_stream(n, seed):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        dx = float(rng.uniform(-0.5, 0.5))
        yield LabeledExample(_fv(dx), _region_label(dx))


def _flipped_label(dx):
    # conflicts with _region_label on every region
    if dx < -0.0833:
        return ActionId.MOVE_RIGHT
    if dx > 0.0833:
        return ActionId.MOVE_LEFT
    return ActionId.GUARD


# -- construction -------------------------------------------------------------

def test_forest_new_initial_state():
    model = forest_new(ForestConfig(n_trees=10), seed=1)
    assert len(model.members) == 10
    assert all(isinstance(m.tree.root, LeafNode) for m in model.members)
    acc = prequential_accuracy(model)
    assert acc["window_acc"] is None and acc["lifetime_acc"] is None


def test_forest_new_deterministic_subspaces():
    a = forest_new(ForestConfig(n_trees=10), seed=1)
    b = forest_new(ForestConfig(n_trees=10), seed=1)
    assert [m.tree.subspace for m in a.members] == [m.tree.subspace for m in b.members]


def test_forest_new_rejects_bad_config():
    with pytest.raises(ConfigError):
        forest_new(ForestConfig(n_trees=0), seed=1)
    with pytest.raises(ConfigError):
        forest_new(ForestConfig(delta_split=2.0), seed=1)
    with pytest.raises(ConfigError):
        forest_new(ForestConfig(subspace_size=9), seed=1)


# -- learning ----------------------------------------------------------------

def test_constant_stream_no_drift_predicts_label():
    model = forest_new(ForestConfig(), seed=3)
    ex = LabeledExample(_fv(0.2, 0.0, 5, 5), ActionId.KICK)
    events = []
    for _ in range(500):
        events += learn_one(model, ex)
    assert events == []
    action, dist = predict_one(model, ex.features)
    assert action == ActionId.KICK
    assert dist[int(ActionId.KICK)] > 0.9


def test_deterministic_mapping_converges():
    model = forest_new(ForestConfig(), seed=5)
    bits = []
    for i, ex in enumerate(_region_stream(2000, seed=8)):
        if i >= 1000:
            pred, _ = predict_one(model, ex.features)
            bits.append(int(pred == ex.label))
        learn_one(model, ex)
    assert sum(bits) / len(bits) >= 0.95


def test_conflicting_stream_triggers_drift():
    model = forest_new(ForestConfig(), seed=7)
    rng = np.random.default_rng(2)
    drifts = []
    for i in range(5000):
        dx = float(rng.uniform(-0.5, 0.5))
        label = _region_label(dx) if i < 2500 else _flipped_label(dx)
        events = learn_one(model, LabeledExample(_fv(dx), label))
        drifts += [(i, m) for m, kind in events if kind == "drift"]
    assert drifts, "label flip should trigger at least one member drift"
    assert all(i >= 2500 for i, _ in drifts)
    # and the model recovers on the new concept
    bits = []
    for ex_i in range(500):
        dx = float(rng.uniform(-0.5, 0.5))
        label = _flipped_label(dx)
        pred, _ = predict_one(model, _fv(dx))
        bits.append(int(pred == label))
        learn_one(model, LabeledExample(_fv(dx), label))
    assert sum(bits) / len(bits) >= 0.8


# -- prediction ---------------------------------------------------------------

def test_single_member_forest_is_that_tree():
    cfg = ForestConfig(n_trees=1, lambda_bagging=0.0, delta_warn=0.0, delta_drift=0.0,
                       subspace_size=4)
    model = forest_new(cfg, seed=11)
    for ex in _region_stream(300, seed=12):
        learn_one(model, ex)
    for ex in _region_stream(100, seed=13):
        action, dist = predict_one(model, ex.features)
        tree_probs = model.members[0].tree.predict_proba(ex.features.as_array())
        assert int(action) == int(np.argmax(tree_probs))
        assert dist == pytest.approx(tree_probs)


def test_weighted_vote_hand_case():
    # members voting {A, weight 0.9}, {B, 0.5}, {A, 0.4} with point-mass
    # leaves: A scores 1.3, B scores 0.5
    model = forest_new(ForestConfig(n_trees=3, weight_window=10), seed=1)
    a, b = int(ActionId.PUNCH), int(ActionId.KICK)
    for member, (cls, weight) in zip(
        model.members, ((a, 0.9), (b, 0.5), (a, 0.4))
    ):
        leaf = member.tree.root
        leaf.class_counts[cls] = 100.0
        leaf.n_seen = 100.0
        member.weight_bits.extend([1.0] * int(weight * 10) + [0.0] * (10 - int(weight * 10)))
        assert member.weight() == pytest.approx(weight)
    action, dist = predict_one(model, _fv(0.0))
    assert action == ActionId.PUNCH
    assert dist[a] == pytest.approx(1.3 / 1.8)


def test_untrained_forest_uniform_idle():
    model = forest_new(ForestConfig(), seed=2)
    action, dist = predict_one(model, _fv(0.1))
    assert dist == pytest.approx(np.full(8, 1 / 8))
    assert action == ActionId.IDLE  # lowest code wins the tie


# -- prequential tracker --------------------------------------------------------

def test_prequential_arithmetic():
    model = forest_new(ForestConfig(), seed=4)
    model.window_bits.extend([1, 0, 1, 1])
    model.lifetime_correct, model.lifetime_total = 3, 4
    acc = prequential_accuracy(model)
    assert acc["window_acc"] == 0.75
    assert acc["lifetime_acc"] == 0.75


def test_prequential_window_upper_bound():
    model = forest_new(ForestConfig(window=1000), seed=4)
    model.window_bits.extend([1] * 1500)
    assert len(model.window_bits) == 1000
    assert prequential_accuracy(model)["window_acc"] == 1.0


# -- single-tree equivalence -----------------------------------------------------

def test_degenerate_forest_equals_bare_tree():
    cfg = ForestConfig(n_trees=1, lambda_bagging=0.0, delta_warn=0.0, delta_drift=0.0,
                       subspace_size=4, grace_period=50)
    model = forest_new(cfg, seed=21)
    tree = HoeffdingTree(subspace=(0, 1, 2, 3), grace_period=50)
    for ex in _region_stream(1500, seed=22):
        x = ex.features.as_array()
        forest_pred, _ = predict_one(model, ex.features)
        assert int(forest_pred) == tree.predict(x)
        learn_one(model, ex)
        tree.learn_one(x, int(ex.label))


# -- determinism -----------------------------------------------------------------

def test_identical_streams_identical_predictions():
    def run():
        model = forest_new(ForestConfig(), seed=31)
        preds = []
        for ex in _region_stream(800, seed=32):
            pred, _ = predict_one(model, ex.features)
            preds.append(int(pred))
            learn_one(model, ex)
        return preds

    assert run() == run()


# -- snapshots --------------------------------------------------------------------

def test_snapshot_immutable_and_agrees():
    model = forest_new(ForestConfig(), seed=41)
    for ex in _region_stream(600, seed=42):
        learn_one(model, ex)
    snap = imitation_snapshot(model)

    state = new_game(EnvConfig(), seed=1)
    rng = np.random.default_rng(43)
    frozen_expect = []
    for _ in range(100):
        s = dataclasses.replace(
            state,
            p1=dataclasses.replace(state.p1, x=float(rng.uniform(0, 960))),
            p2=dataclasses.replace(state.p2, x=float(rng.uniform(0, 960))),
        )
        frozen_expect.append((s, snap.act(s)))

    for ex in _region_stream(1000, seed=44):
        learn_one(model, ex)
    for s, expected in frozen_expect:
        assert snap.act(s) == expected


def test_snapshot_of_constant_persona_constant():
    model = forest_new(ForestConfig(), seed=51)
    ex = LabeledExample(_fv(0.3, 0.0, 0, 0), ActionId.GUARD)
    for _ in range(400):
        learn_one(model, ex)
    snap = imitation_snapshot(model)
    state = new_game(EnvConfig(), seed=9)
    assert snap.act(state) == ActionId.GUARD


# -- serialization ------------------------------------------------------------------

def test_serialization_round_trip():
    model = forest_new(ForestConfig(), seed=61)
    stream = list(_region_stream(1200, seed=62))
    for ex in stream[:1000]:
        learn_one(model, ex)
    blob = save_forest(model)
    assert blob[:8] == b"PDDAFRST"

    restored = load_forest(blob)
    assert restored.config == model.config
    for ex in stream[1000:]:
        p1, d1 = predict_one(model, ex.features)
        p2, d2 = predict_one(restored, ex.features)
        assert p1 == p2
        assert d1 == pytest.approx(d2)
    assert prequential_accuracy(restored) == prequential_accuracy(model)


def test_load_rejects_bad_magic():
    with pytest.raises(ValueError):
        load_forest(b"NOTAFRST" + b"\x00" * 64)
