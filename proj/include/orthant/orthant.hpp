// Copyright 2026 The Orthant SMC Authors
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

#ifndef ORTHANT_ORTHANT_HPP
#define ORTHANT_ORTHANT_HPP

#include "orthant/estimators.hpp"
#include "orthant/expectations.hpp"
#include "orthant/gauss.hpp"
#include "orthant/linalg.hpp"
#include "orthant/moves.hpp"
#include "orthant/problem.hpp"
#include "orthant/rng.hpp"
#include "orthant/student.hpp"

#endif  // ORTHANT_ORTHANT_HPP
