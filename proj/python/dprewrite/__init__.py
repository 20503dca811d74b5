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

"""Local differential privacy for text via latent-space rewriting."""

from dprewrite._core import (
    calibrate,
    clip_by_norm,
    clip_by_value,
    corpus_bleu,
    default_config,
    estimate_clip,
    macro_f1,
    privatize,
    rewrite_texts,
    run_experiment,
    sample_noise,
)

__all__ = [
    "calibrate",
    "clip_by_norm",
    "clip_by_value",
    "corpus_bleu",
    "default_config",
    "estimate_clip",
    "macro_f1",
    "privatize",
    "rewrite_texts",
    "run_experiment",
    "sample_noise",
]

__version__ = "0.1.0"
