// Copyright 2026 The grbmamp Authors.
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

// Recovers a sparse Gaussian signal with AMP and the matching
// spike-and-slab prior, at a few measurement rates.

#include <cstdio>

#include "grbmamp.hpp"

int main() {
  using namespace grbmamp;
  const Eigen::Index n = 1000;
  const double rho = 0.2;
  Rng rng = make_stream(42);
  const SignalSet signals = synth_sparse(n, rho, {0.0, 1.0, std::nullopt}, 1, rng);
  const Eigen::VectorXd x = signals.signal(0);

  SolverOptions options;
  options.prior = FactorizedPrior{{GaussBernoulli{rho, 0.0, 1.0}}};
  std::printf("N = %lld, K = %d\n", static_cast<long long>(n), signals.sparsity[0]);
  std::printf("%6s %6s %10s %12s %6s\n", "alpha", "M", "mse_db", "correlation", "iters");
  for (double alpha : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}) {
    Rng inst_rng = make_stream(42, {static_cast<std::uint64_t>(alpha * 100)});
    const auto inst = make_instance(x, alpha, 1e-8, MatrixScaling::kUnitRow, inst_rng);
    const auto r = reconstruct(inst, options);
    std::printf("%6.2f %6lld %10.2f %12.6f %6d\n", alpha, static_cast<long long>(inst.num_measurements()),
                mse_db(x, r.a), correlation(x, r.a).value, r.diagnostics.iterations);
  }
  return 0;
}
