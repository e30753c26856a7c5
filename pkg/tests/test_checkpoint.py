"""Checkpoint round trips: byte stability, bit-exact resume, refusal modes."""

import numpy as np
import pytest

from crfgan.errors import CheckpointError
from crfgan.models.bundle import make_bundle
from crfgan.training.checkpoint import (MAGIC, load_checkpoint, read_manifest,
                                        save_checkpoint)
from crfgan.training.loop import TrainConfig, Trainer


def _data(cfg, n, seed=0):
    rng = np.random.default_rng(seed)
    r = cfg.resolution
    return np.tanh(rng.normal(size=(n, 1, r, r, r))).astype(np.float32)


def _trainer(tiny_cfg, **kw):
    tcfg = TrainConfig(batch_size=2, steps=1, seed=0, **kw)
    return Trainer(make_bundle(tiny_cfg, 0), tcfg)


def _param_state(trainer):
    return {p.name: p.data.copy() for p in trainer.bundle.parameters()}


def test_save_is_deterministic(tiny_cfg, tmp_path):
    t = _trainer(tiny_cfg)
    x = _data(tiny_cfg, 4)
    for _ in range(3):
        t.train_step(x[:2])
    p1, p2 = tmp_path / "a.crfg", tmp_path / "b.crfg"
    save_checkpoint(t, str(p1))
    save_checkpoint(t, str(p2))
    assert p1.read_bytes() == p2.read_bytes()


def test_save_load_save_byte_identical(tiny_cfg, tmp_path):
    t = _trainer(tiny_cfg)
    t.train_step(_data(tiny_cfg, 2))
    p1, p2 = tmp_path / "a.crfg", tmp_path / "b.crfg"
    save_checkpoint(t, str(p1))
    restored = load_checkpoint(str(p1))
    save_checkpoint(restored, str(p2))
    assert p1.read_bytes() == p2.read_bytes()


def test_load_restores_every_array(tiny_cfg, tmp_path):
    t = _trainer(tiny_cfg)
    t.train_step(_data(tiny_cfg, 2))
    path = tmp_path / "c.crfg"
    save_checkpoint(t, str(path))
    restored = load_checkpoint(str(path))

    want = _param_state(t)
    got = _param_state(restored)
    assert set(want) == set(got)
    for name in want:
        np.testing.assert_array_equal(want[name], got[name], err_msg=name)
    for name, buf in t.bundle.buffers().items():
        np.testing.assert_array_equal(buf, restored.bundle.buffers()[name])
    for gname, opt in t.optimizers.items():
        ostate = restored.optimizers[gname].state_arrays()
        for key, arr in opt.state_arrays().items():
            np.testing.assert_array_equal(arr, ostate[key], err_msg=key)
    assert restored.step_count == t.step_count
    assert restored.rng.bit_generator.state == t.rng.bit_generator.state
    assert [bd.to_dict() for bd in restored.history] == \
           [bd.to_dict() for bd in t.history]


def test_broken_resume_matches_unbroken_run(tiny_cfg, tmp_path):
    """4 steps + save/load + 4 steps must equal 8 straight steps bit-exactly."""
    data = _data(tiny_cfg, 2, seed=5)

    straight = _trainer(tiny_cfg)
    for _ in range(8):
        straight.train_step(data)

    broken = _trainer(tiny_cfg)
    for _ in range(4):
        broken.train_step(data)
    path = tmp_path / "mid.crfg"
    save_checkpoint(broken, str(path))
    resumed = load_checkpoint(str(path))
    for _ in range(4):
        resumed.train_step(data)

    assert resumed.step_count == straight.step_count == 8
    hs = [bd.to_dict() for bd in straight.history]
    hr = [bd.to_dict() for bd in resumed.history]
    assert hr == hs
    ws, wr = _param_state(straight), _param_state(resumed)
    for name in ws:
        np.testing.assert_array_equal(ws[name], wr[name], err_msg=name)


def test_precision_expectation_is_enforced(tiny_cfg, tmp_path):
    t = _trainer(tiny_cfg)
    path = tmp_path / "p.crfg"
    save_checkpoint(t, str(path))
    assert load_checkpoint(str(path), precision="float32") is not None
    with pytest.raises(CheckpointError):
        load_checkpoint(str(path), precision="float64")


def test_corrupt_magic_rejected(tiny_cfg, tmp_path):
    t = _trainer(tiny_cfg)
    path = tmp_path / "m.crfg"
    save_checkpoint(t, str(path))
    blob = bytearray(path.read_bytes())
    blob[:4] = b"XXXX"
    path.write_bytes(bytes(blob))
    with pytest.raises(CheckpointError):
        read_manifest(str(path))


def test_unsupported_version_rejected(tiny_cfg, tmp_path):
    t = _trainer(tiny_cfg)
    path = tmp_path / "v.crfg"
    save_checkpoint(t, str(path))
    blob = bytearray(path.read_bytes())
    assert blob[:4] == MAGIC
    blob[4:8] = np.array([99], dtype="<u4").tobytes()
    path.write_bytes(bytes(blob))
    with pytest.raises(CheckpointError):
        read_manifest(str(path))


def test_truncated_payload_rejected(tiny_cfg, tmp_path):
    t = _trainer(tiny_cfg)
    path = tmp_path / "t.crfg"
    save_checkpoint(t, str(path))
    blob = path.read_bytes()
    path.write_bytes(blob[:len(blob) - 64])
    with pytest.raises(CheckpointError):
        load_checkpoint(str(path))


def test_truncated_manifest_rejected(tiny_cfg, tmp_path):
    t = _trainer(tiny_cfg)
    path = tmp_path / "tm.crfg"
    save_checkpoint(t, str(path))
    path.write_bytes(path.read_bytes()[:40])
    with pytest.raises(CheckpointError):
        read_manifest(str(path))


def test_not_a_checkpoint_file(tmp_path):
    path = tmp_path / "junk.crfg"
    path.write_bytes(b"hello")
    with pytest.raises(CheckpointError):
        read_manifest(str(path))


def test_baseline_round_trip(tiny_cfg, tmp_path):
    tcfg = TrainConfig(batch_size=2, steps=1, seed=0)
    t = Trainer(make_bundle(tiny_cfg, 0, baseline=True), tcfg)
    t.train_step(_data(tiny_cfg, 2))
    path = tmp_path / "b.crfg"
    save_checkpoint(t, str(path))
    restored = load_checkpoint(str(path))
    assert restored.bundle.kind == "baseline"
    want, got = _param_state(t), _param_state(restored)
    assert set(want) == set(got)
    for name in want:
        np.testing.assert_array_equal(want[name], got[name], err_msg=name)
