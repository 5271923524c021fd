// Copyright 2026 The dpolab Authors.
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

#ifndef DPOLAB_STATS_H_
#define DPOLAB_STATS_H_

#include <cstddef>
#include <optional>
#include <span>

namespace dpolab {

double Mean(std::span<const double> values);

// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double SampleStd(std::span<const double> values);

struct WelchResult {
  double t_statistic = 0.0;
  double degrees_of_freedom = 0.0;
  double p_value = 1.0;  // two-sided
};

// Welch's unequal-variance t-test. Empty when undefined: either sample has
// fewer than two values, or both sample variances are zero.
std::optional<WelchResult> WelchTest(std::span<const double> a,
                                     std::span<const double> b);

}  // namespace dpolab

#endif  // DPOLAB_STATS_H_
