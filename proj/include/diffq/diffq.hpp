// Copyright 2026 The diffq Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

// Umbrella header.

#ifndef DIFFQ_DIFFQ_HPP
#define DIFFQ_DIFFQ_HPP

#include "diffq/analysis.hpp"
#include "diffq/codec.hpp"
#include "diffq/combination.hpp"
#include "diffq/config.hpp"
#include "diffq/error.hpp"
#include "diffq/experiment.hpp"
#include "diffq/graph.hpp"
#include "diffq/learning.hpp"
#include "diffq/linalg.hpp"
#include "diffq/quantizer.hpp"
#include "diffq/rng.hpp"
#include "diffq/subspace.hpp"

#endif  // DIFFQ_DIFFQ_HPP
