# Copyright 2026 The dprewrite Authors
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

"""Smoke tests of the Python bindings (no training runs)."""

import json
import math

import pytest

import dprewrite


def test_calibrate_matches_reference_arithmetic():
    out = dprewrite.calibrate(
        dimension=15360, clip_c=0.1, epsilon="500", delta=1e-5,
        mechanism="gaussian", variant="clv")
    assert out["l1_sensitivity"] == pytest.approx(2 * 0.1 * 15360)
    assert out["l2_sensitivity"] == pytest.approx(24.79, abs=0.005)
    assert out["noise_scale"] == pytest.approx(0.2402, abs=1e-4)
    assert out["noise_variance"] == pytest.approx(out["noise_scale"] ** 2)

    pruned = dprewrite.calibrate(
        dimension=3640, clip_c=0.1, epsilon="500", delta=1e-5,
        mechanism="gaussian", variant="clv")
    assert pruned["l2_sensitivity"] == pytest.approx(12.07, abs=0.005)
    assert pruned["noise_scale"] == pytest.approx(0.1169, abs=1e-4)
    assert pruned["noise_scale"] / out["noise_scale"] < 0.5


def test_infinite_epsilon_short_circuits_noise():
    out = dprewrite.calibrate(dimension=100, epsilon="inf",
                              mechanism="laplace", variant="clv")
    assert out["noise_scale"] == 0.0


def test_clipping():
    assert dprewrite.clip_by_value([0.35, -0.05, -0.9], 0.1) == pytest.approx(
        [0.1, -0.05, -0.1])
    clipped = dprewrite.clip_by_norm([6.0, 8.0], 5.0)
    assert clipped == pytest.approx([3.0, 4.0])
    inside = dprewrite.clip_by_norm([3.0, 4.0], 5.0)
    assert inside == pytest.approx([3.0, 4.0])


def test_estimate_clip_rules():
    values = [0.2, -0.2] * 500
    out = dprewrite.estimate_clip(values, rule="half_sigma")
    assert out["mu"] == pytest.approx(0.0)
    assert out["sigma"] == pytest.approx(0.2)
    assert out["recommended_c"] == pytest.approx(0.1)
    two = dprewrite.estimate_clip(values, rule="two_sigma")
    assert two["recommended_c"] == pytest.approx(0.4)


def test_sample_noise_reproducible():
    a = dprewrite.sample_noise("laplace", 2.0, 16, seed=5)
    b = dprewrite.sample_noise("laplace", 2.0, 16, seed=5)
    c = dprewrite.sample_noise("laplace", 2.0, 16, seed=6)
    assert a == b
    assert a != c
    assert len(a) == 16


def test_privatize_shapes_and_determinism():
    z = [0.5, -0.5, 0.25, 0.0]
    out1 = dprewrite.privatize(z, clip_c=0.1, epsilon="1", seed=3)
    out2 = dprewrite.privatize(z, clip_c=0.1, epsilon="1", seed=3)
    assert out1 == out2
    assert len(out1) == len(z)
    noiseless = dprewrite.privatize(z, clip_c=0.1, epsilon="inf", seed=3)
    assert noiseless == pytest.approx([0.1, -0.1, 0.1, 0.0])


def test_corpus_bleu_identity_and_mismatch():
    refs = ["the cat sat on the mat", "a quick brown fox"]
    assert dprewrite.corpus_bleu(refs, refs)["score"] == pytest.approx(100.0)
    other = ["entirely different words here now", "nothing shared at all"]
    assert dprewrite.corpus_bleu(refs, other)["score"] < 1.0


def test_macro_f1_closed_form():
    gold = ["a", "a", "b", "b"]
    predicted = ["a", "a", "a", "a"]
    assert dprewrite.macro_f1(gold, predicted, ["a", "b"]) == pytest.approx(
        1.0 / 3.0)


def test_default_config_round_trips():
    config = json.loads(dprewrite.default_config())
    assert config["variant"] == "clv"
    assert config["beam_width"] == 10
    assert config["privacy"]["mechanism"] in ("laplace", "gaussian")
    assert math.isfinite(config["clip_c"])
