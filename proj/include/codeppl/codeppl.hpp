// Copyright 2026 The codeppl Authors.
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

#pragma once

#include "codeppl/dataset.hpp"
#include "codeppl/detectors.hpp"
#include "codeppl/error.hpp"
#include "codeppl/evaluation.hpp"
#include "codeppl/ngram_model.hpp"
#include "codeppl/perturbation.hpp"
#include "codeppl/remote.hpp"
#include "codeppl/rng.hpp"
#include "codeppl/token_scoring.hpp"
