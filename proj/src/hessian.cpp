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

#include "sltlab/hessian.hpp"

#include <cmath>
#include <random>

#include "sltlab/linalg.hpp"

namespace sltlab {

ProbeKind probe_kind_from_string(const std::string& name) {
  if (name == "gaussian") return ProbeKind::gaussian;
  if (name == "rademacher") return ProbeKind::rademacher;
  throw ConfigError("unknown probe kind '" + name +
                    "' (want gaussian or rademacher)");
}

std::string to_string(ProbeKind p) {
  return p == ProbeKind::gaussian ? "gaussian" : "rademacher";
}

void HutchinsonConfig::validate() const {
  if (num_probes == 0)
    throw ConfigError("hutchinson num_probes must be > 0");
}

TraceEstimate hutchinson_trace(const HvpFn& hvp_fn, std::size_t dim,
                               const HutchinsonConfig& config) {
  config.validate();
  if (dim == 0) throw ConfigError("hutchinson_trace needs dim > 0");

  std::vector<double> samples(config.num_probes);
  ParamVector v(dim);
  for (std::size_t k = 0; k < config.num_probes; ++k) {
    auto rng = make_rng(derive_seed(config.seed, k));
    if (config.probe == ProbeKind::gaussian) {
      std::normal_distribution<double> n(0.0, 1.0);
      for (std::size_t i = 0; i < dim; ++i) v[i] = n(rng);
    } else {
      std::bernoulli_distribution b(0.5);
      for (std::size_t i = 0; i < dim; ++i) v[i] = b(rng) ? 1.0 : -1.0;
    }
    const ParamVector hv = hvp_fn(v);
    if (hv.size() != dim)
      throw NumericError("hvp callback returned wrong dimension");
    samples[k] = la::dot(v, hv);
    if (!std::isfinite(samples[k]))
      throw NumericError("hutchinson probe produced non-finite value");
  }

  TraceEstimate est;
  est.num_probes = config.num_probes;
  double acc = 0.0;
  for (double s : samples) acc += s;
  est.mean = acc / static_cast<double>(samples.size());
  if (samples.size() > 1) {
    double ss = 0.0;
    for (double s : samples) {
      const double d = s - est.mean;
      ss += d * d;
    }
    const double var = ss / static_cast<double>(samples.size() - 1);
    est.se = std::sqrt(var / static_cast<double>(samples.size()));
  }
  return est;
}

TraceEstimate hessian_trace(const MlpModel& model, const Batch& batch,
                            const HutchinsonConfig& config) {
  auto fn = [&model, &batch](const ParamVector& v) {
    return hvp(model, batch, v);
  };
  return hutchinson_trace(fn, model.dim(), config);
}

}  // namespace sltlab
