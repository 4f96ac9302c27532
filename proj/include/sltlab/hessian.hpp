// Copyright 2026 The sltlab Authors
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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>

#include "sltlab/common.hpp"
#include "sltlab/nn.hpp"

namespace sltlab {

enum class ProbeKind { gaussian, rademacher };

ProbeKind probe_kind_from_string(const std::string& name);
std::string to_string(ProbeKind p);

struct HutchinsonConfig {
  std::size_t num_probes = 10000;
  ProbeKind probe = ProbeKind::gaussian;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TraceEstimate {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean over probes
  std::size_t num_probes = 0;
};

using HvpFn = std::function<ParamVector(const ParamVector&)>;

/// Randomized trace estimate: mean over probes of v^T (H v), with E[v v^T] = I.
/// Probe k uses its own derived seed, so the estimate is independent of
/// evaluation order and reproducible for a fixed config.
TraceEstimate hutchinson_trace(const HvpFn& hvp_fn, std::size_t dim,
                               const HutchinsonConfig& config);

/// Trace of the loss Hessian at the model's current parameters on the batch.
TraceEstimate hessian_trace(const MlpModel& model, const Batch& batch,
                            const HutchinsonConfig& config);

}  // namespace sltlab
