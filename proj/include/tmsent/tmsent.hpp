// Copyright 2026 The tmsent Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "tmsent/common.hpp"
#include "tmsent/config.hpp"
#include "tmsent/monomial.hpp"
#include "tmsent/observables.hpp"
#include "tmsent/parallel.hpp"
#include "tmsent/quantumness.hpp"
#include "tmsent/sampling.hpp"
#include "tmsent/sdp.hpp"
#include "tmsent/spin_tensor.hpp"
#include "tmsent/statistics.hpp"
#include "tmsent/svg.hpp"
#include "tmsent/symmetric_operators.hpp"
#include "tmsent/tms.hpp"
#include "tmsent/witnesses.hpp"

namespace tmsent {

inline constexpr const char *kVersion = "1.0.0";

}  // namespace tmsent
