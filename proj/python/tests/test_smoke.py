import numpy as np
import pytest

import sevo


def reference_blend(frame, mask, alpha, color):
    v = (1.0 - alpha) * frame.astype(np.float64) + alpha * np.asarray(color, dtype=np.float64)
    blended = np.floor(v + 0.5).clip(0, 255).astype(np.uint8)
    return np.where(mask[..., None].astype(bool), blended, frame)


def test_overlay_matches_reference():
    rng = np.random.default_rng(3)
    for _ in range(20):
        h, w = rng.integers(1, 40, size=2)
        frame = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
        mask = rng.integers(0, 2, size=(h, w), dtype=np.uint8)
        alpha = float(rng.uniform())
        out = sevo.compose_overlay(frame, mask, alpha, (255, 255, 0))
        np.testing.assert_array_equal(out, reference_blend(frame, mask, alpha, (255, 255, 0)))


def test_overlay_examples():
    frame = np.array([[[0, 0, 0], [100, 150, 200]]], dtype=np.uint8)
    mask = np.array([[1, 0]], dtype=np.uint8)
    out = sevo.compose_overlay(frame, mask)
    assert out[0, 0].tolist() == [115, 115, 0]
    assert out[0, 1].tolist() == [100, 150, 200]


def test_overlay_shape_mismatch():
    with pytest.raises(ValueError):
        sevo.compose_overlay(np.zeros((4, 4, 3), np.uint8), np.zeros((4, 5), np.uint8))


def test_downsample_uniform():
    frame = np.full((48, 64, 3), 77, dtype=np.uint8)
    out = sevo.downsample(frame)
    assert out.shape == (16, 16, 3)
    assert np.allclose(out, 77 / 255.0)


def test_gate_arms_after_debounce():
    gate = sevo.SafetyGate(sevo.GateConfig())
    outputs = gate.feed([True] * 30)
    assert not any(outputs[:29])
    assert outputs[29]
    assert gate.phase == sevo.GatePhase.armed


def test_gate_never_arms_on_empty_stream():
    gate = sevo.SafetyGate()
    assert not any(gate.feed([False] * 1000))
    assert gate.phase == sevo.GatePhase.idle


def test_policy_round_trip(tmp_path):
    policy = sevo.init_policy("frozen_encoder", seed=4)
    assert 0.0 < policy.trainable_fraction < 0.2
    path = tmp_path / "p.sevp"
    policy.save(path)
    loaded = sevo.load_policy(path)
    assert loaded == policy
    actions = loaded.predict(np.zeros(policy.input_size, dtype=np.float32))
    assert actions.shape == (policy.chunk_len, 3)


def test_collect_train_evaluate(tmp_path):
    sevo.collect(tmp_path / "ds", sevo.ProtocolFlags.full(), episodes=3, seed=1)
    episodes = sevo.read_dataset(tmp_path / "ds")
    assert len(episodes) == 3
    assert all(e["actions"].shape == (e["steps"], 3) for e in episodes)
    policy = sevo.train(tmp_path / "ds", steps=20, seed=1)
    rate, successes, trials, false_triggers = sevo.evaluate(policy, trials=4, seed=2)
    assert 0.0 <= rate <= 1.0
    assert successes <= trials
    assert false_triggers >= 0
