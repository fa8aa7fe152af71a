/******************************************************************************
 * Copyright 2026 The coperc Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *****************************************************************************/
#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace coperc {

using Rng = std::mt19937_64;

// Mixes a base seed with a sequence of keys (frame index, CAV id, ...) so
// that every stream in a run is independent of evaluation order.
std::uint64_t DeriveSeed(std::uint64_t base,
                         std::initializer_list<std::uint64_t> keys);

// Uniform draw in the open interval (0, 1).
double OpenUniform(Rng& rng);

// Normal distribution truncated to [0, inf), parameterized so that the
// truncated distribution itself has the requested mean and standard
// deviation. When the requested coefficient of variation is not reachable
// (sd >= mean), the underlying scale is fixed to `sd` and only the mean is
// matched.
class TruncatedNormal {
 public:
  TruncatedNormal() = default;

  // Throws kCalibrationError on nonpositive mean or sd.
  static TruncatedNormal Matching(double mean, double sd);
  // Underlying (untruncated) location and scale.
  static TruncatedNormal FromUnderlying(double loc, double scale);

  // Quantile of the truncated distribution; u in (0, 1).
  double Quantile(double u) const;
  double operator()(Rng& rng) const { return Quantile(OpenUniform(rng)); }

  double Mean() const;
  double StdDev() const;
  double loc() const { return loc_; }
  double scale() const { return scale_; }

 private:
  TruncatedNormal(double loc, double scale) : loc_(loc), scale_(scale) {}

  double loc_ = 0.0;
  double scale_ = 1.0;
};

}  // namespace coperc
