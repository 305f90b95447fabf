# Copyright 2026 The HiRoPE Lab Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Hierarchical rotary position embeddings for source code."""

from ._hirope import (
    InvalidArgument,
    ParseError,
    __version__,
    edit_similarity,
    extract_symbols,
    hier_positions,
    hirope_score,
    parse_model_output_symbols,
    recall,
    reliable_split,
    rope_score,
    segments,
    thetas,
    windowed_score,
)

__all__ = [
    "InvalidArgument",
    "ParseError",
    "__version__",
    "edit_similarity",
    "extract_symbols",
    "hier_positions",
    "hirope_score",
    "parse_model_output_symbols",
    "recall",
    "reliable_split",
    "rope_score",
    "segments",
    "thetas",
    "windowed_score",
]
