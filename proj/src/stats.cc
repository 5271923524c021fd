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

#include "dpolab/stats.h"

#include <cmath>

#include <boost/math/distributions/students_t.hpp>

namespace dpolab {

double Mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double SampleStd(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double mean = Mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

std::optional<WelchResult> WelchTest(std::span<const double> a,
                                     std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) return std::nullopt;
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double va = SampleStd(a) * SampleStd(a) / na;
  const double vb = SampleStd(b) * SampleStd(b) / nb;
  const double se2 = va + vb;
  if (!(se2 > 0.0)) return std::nullopt;

  WelchResult r;
  r.t_statistic = (Mean(a) - Mean(b)) / std::sqrt(se2);
  // Welch-Satterthwaite; a zero-variance side contributes nothing.
  double denom = 0.0;
  if (va > 0.0) denom += va * va / (na - 1.0);
  if (vb > 0.0) denom += vb * vb / (nb - 1.0);
  r.degrees_of_freedom = se2 * se2 / denom;
  const boost::math::students_t dist(r.degrees_of_freedom);
  r.p_value = 2.0 * boost::math::cdf(boost::math::complement(
                        dist, std::abs(r.t_statistic)));
  return r;
}

}  // namespace dpolab
