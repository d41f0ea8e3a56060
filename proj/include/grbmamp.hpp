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

#pragma once

#include "grbmamp/amp.hpp"
#include "grbmamp/data.hpp"
#include "grbmamp/errors.hpp"
#include "grbmamp/experiment.hpp"
#include "grbmamp/grbm.hpp"
#include "grbmamp/metrics.hpp"
#include "grbmamp/model_io.hpp"
#include "grbmamp/prior.hpp"
#include "grbmamp/rng.hpp"
#include "grbmamp/tap.hpp"
#include "grbmamp/training.hpp"
