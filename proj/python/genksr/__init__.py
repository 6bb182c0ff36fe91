# Copyright 2026 The genksr Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Krylov ground-state estimation with simulated shots and a generative model."""

import json

from ._core import (
    Instance,
    NumericError,
    ValidationError,
    build_heisenberg_1d,
    build_j1j2_2d,
    build_xxz_chain,
    ground_state,
    instance_from_json,
    kqd_exact_curve,
    kqd_shadow_curve,
    sample_complexity,
    sample_instances,
    skqd_curve,
)
from . import _core


def default_config():
    """Default experiment config as a dict."""
    return json.loads(_core.default_config())


def _text(config):
    return config if isinstance(config, str) else json.dumps(config)


def gen_data(config):
    _core.gen_data(_text(config))


def train(config, resume=False):
    return _core.train(_text(config), resume)


def generate(config):
    _core.generate(_text(config))


def evaluate(config):
    return _core.evaluate(_text(config))


def report(config):
    return _core.report(_text(config))


__all__ = [
    "Instance",
    "NumericError",
    "ValidationError",
    "build_heisenberg_1d",
    "build_j1j2_2d",
    "build_xxz_chain",
    "default_config",
    "evaluate",
    "gen_data",
    "generate",
    "ground_state",
    "instance_from_json",
    "kqd_exact_curve",
    "kqd_shadow_curve",
    "report",
    "sample_complexity",
    "sample_instances",
    "skqd_curve",
    "train",
]
