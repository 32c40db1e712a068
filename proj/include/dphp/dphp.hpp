// Copyright 2026 The dphp Authors
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

// Umbrella header.

#ifndef DPHP_DPHP_HPP_
#define DPHP_DPHP_HPP_

#include "dphp/autodiff.hpp"
#include "dphp/dataeval.hpp"
#include "dphp/embedding.hpp"
#include "dphp/error.hpp"
#include "dphp/experiment.hpp"
#include "dphp/featuremaps.hpp"
#include "dphp/generator.hpp"
#include "dphp/hermite.hpp"
#include "dphp/json_io.hpp"
#include "dphp/privacy.hpp"
#include "dphp/rng.hpp"

#endif  // DPHP_DPHP_HPP_
