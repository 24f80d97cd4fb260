// Copyright 2026 The proknow Authors.
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

#include "proknow/ablation.hpp"
#include "proknow/agreement.hpp"
#include "proknow/bridge.hpp"
#include "proknow/config.hpp"
#include "proknow/corpus.hpp"
#include "proknow/error.hpp"
#include "proknow/generator.hpp"
#include "proknow/metrics.hpp"
#include "proknow/ngram.hpp"
#include "proknow/scoring.hpp"
#include "proknow/stats.hpp"
#include "proknow/text.hpp"
#include "proknow/vectors.hpp"
