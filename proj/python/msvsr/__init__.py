# Copyright 2026 The msvsr Authors
# SPDX-License-Identifier: Apache-2.0

"""Python bindings for the msvsr video super-resolution core.

Configs cross the boundary as plain dicts; frames are float32 numpy arrays
shaped (N, 3, H, W) with values in [0, 1].
"""

import json

from . import _msvsr
from ._msvsr import Dataset, Error, degrade, psnr, resize_bicubic, rgb_to_y, ssim, warp

__all__ = [
    "Dataset",
    "Error",
    "Model",
    "degrade",
    "desk_train_config",
    "evaluate",
    "lr_at",
    "model_stats",
    "named_config",
    "named_config_ids",
    "full_scale_train_config",
    "psnr",
    "resize_bicubic",
    "rgb_to_y",
    "ssim",
    "train",
    "warp",
]


def named_config(name):
    return json.loads(_msvsr.named_config(name))


def named_config_ids():
    return list(_msvsr.named_config_ids())


def model_stats(config):
    total, per_module = _msvsr.model_stats(json.dumps(config))
    return {"param_count": total, "per_module": dict(per_module)}


def desk_train_config():
    return json.loads(_msvsr.desk_train_config())


def full_scale_train_config():
    return json.loads(_msvsr.full_scale_train_config())


def lr_at(iteration, config, group="main"):
    return _msvsr.lr_at(iteration, json.dumps(config), group)


class Model:
    """Network with weights, built from a config dict or loaded from a checkpoint."""

    def __init__(self, config, seed=0, _impl=None):
        self._impl = _impl if _impl is not None else _msvsr.Model(json.dumps(config), seed)

    @classmethod
    def load(cls, path):
        return cls(None, _impl=_msvsr.Model.load(str(path)))

    @property
    def config(self):
        return json.loads(self._impl.config)

    @property
    def param_count(self):
        return self._impl.param_count

    def forward(self, lr):
        """Returns (sr, aux); aux is None unless the auxiliary head is enabled."""
        return self._impl.forward(lr)


def train(model_config, train_config, data, out_dir=None):
    """Returns (loss history, trained Model)."""
    history, impl = _msvsr.train(
        json.dumps(model_config), json.dumps(train_config), data, None if out_dir is None else str(out_dir)
    )
    return history, Model(None, _impl=impl)


def evaluate(model, data, mode="y", crop_border=0):
    return json.loads(_msvsr.evaluate(model._impl, data, mode, crop_border))
