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

// TAP marginals of a small random GRBM as the couplings grow, and the
// text form of the model.

#include <cstdio>

#include "grbmamp.hpp"

int main() {
  using namespace grbmamp;
  const int n = 6, h = 3;
  Rng rng = make_stream(7);
  NormalSampler normal;
  Eigen::MatrixXd w0(n, h);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < h; ++j) w0(i, j) = normal(rng);
  }
  const std::vector<Prior> visible(n, TruncGaussBernoulli{0.4, 0.5, 0.1, 0.0, 1.0});
  const std::vector<Prior> hidden(h, Bernoulli{-0.5});

  for (double s : {0.0, 0.1, 0.3, 0.6}) {
    const Grbm model(s * w0, visible, hidden);
    const auto r = marginals(model);
    std::printf("scale %.1f: %d sweeps, visible means", s, r.sweeps);
    for (int i = 0; i < n; ++i) std::printf(" %.4f", r.state.visible_a[i]);
    std::printf("\n");
  }
  std::printf("\n%s", encode_model_text(Grbm(0.1 * w0, visible, hidden)).c_str());
  return 0;
}
