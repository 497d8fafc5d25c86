# Copyright 2026 The msvsr Authors
# SPDX-License-Identifier: Apache-2.0

import math

import numpy as np
import pytest

import msvsr


def test_named_configs_and_stats():
    assert set(msvsr.named_config_ids()) >= {"tiny", "pp-msvsr", "pp-msvsr-l"}
    cfg = msvsr.named_config("tiny")
    stats = msvsr.model_stats(cfg)
    assert stats["param_count"] == sum(stats["per_module"].values())
    off = dict(cfg, use_ram=False, use_lfm=False, use_aux_loss=False)
    assert msvsr.model_stats(off)["param_count"] < stats["param_count"]
    with pytest.raises(msvsr.Error, match="ConfigError"):
        msvsr.named_config("nope")


def test_schedule_endpoints():
    cfg = msvsr.full_scale_train_config()
    assert msvsr.lr_at(0, cfg) == 2e-4
    assert msvsr.lr_at(cfg["total_iters"], cfg) == 2e-7
    assert msvsr.lr_at(2499, cfg, "flow") == 0.0


def test_degrade_and_metrics():
    data = msvsr.Dataset.synthetic(clips=1, frames=3, hr_size=32, motion=2, seed=5)
    assert len(data) == 1
    clip_id, hr, lr = data.clip(0)
    assert clip_id == "clip000"
    assert hr.shape == (3, 3, 32, 32) and lr.shape == (3, 3, 8, 8)
    np.testing.assert_allclose(msvsr.degrade(hr), lr, atol=1e-6)
    assert math.isinf(msvsr.psnr(hr[0], hr[0]))
    assert msvsr.ssim(hr[0], hr[0], mode="rgb") == 1.0
    up = msvsr.resize_bicubic(lr)
    assert up.shape == hr.shape
    assert 0 < msvsr.psnr(up[0], hr[0]) < 100


def test_warp_zero_flow_is_identity():
    rng = np.random.default_rng(0)
    src = rng.random((1, 4, 6, 5), dtype=np.float32)
    out = msvsr.warp(src, np.zeros((1, 2, 6, 5), np.float32))
    assert np.array_equal(out, src)


def test_forward_shapes():
    model = msvsr.Model(msvsr.named_config("tiny"), seed=1)
    lr = np.random.default_rng(1).random((3, 3, 8, 8), dtype=np.float32)
    sr, aux = model.forward(lr)
    assert sr.shape == (3, 3, 32, 32) and aux.shape == sr.shape
    assert sr.min() >= 0 and sr.max() <= 1


def test_train_evaluate_and_reload(tmp_path):
    data = msvsr.Dataset.synthetic(clips=2, frames=4, hr_size=32, motion=4, seed=7)
    tc = msvsr.desk_train_config()
    tc.update(total_iters=3, batch_size=1, patch_size=8, n_frames=3, flow_freeze_iters=1, seed=2)
    history, model = msvsr.train(msvsr.named_config("tiny"), tc, data, out_dir=tmp_path)
    assert [r["iter"] for r in history] == [0, 1, 2]
    assert all(math.isfinite(r["loss_total"]) for r in history)
    report = msvsr.evaluate(model, data)
    assert report["channel_mode"] == "Y"
    reloaded = msvsr.Model.load(tmp_path / "final.ckpt")
    lr = data.clip(0)[2]
    assert np.array_equal(model.forward(lr)[0], reloaded.forward(lr)[0])
