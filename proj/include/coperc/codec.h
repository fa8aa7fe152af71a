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

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "coperc/geometry.h"

namespace coperc {

inline constexpr std::size_t kResamplePoints = 1024;
inline constexpr std::size_t kDescriptorOverheadBytes = 128;
inline constexpr std::size_t kRawObjectBytes = kResamplePoints * 3 * sizeof(float);

// Ratio between the resampled input dimension and the latent dimension.
class RepresentationFactor {
 public:
  static constexpr std::array<int, 5> kDefaultSet = {4, 8, 16, 32, 64};
  static constexpr int kMin = 4;
  static constexpr int kMax = 64;

  RepresentationFactor() = default;
  // Throws kInvalidArgument unless `value` is in the default set.
  explicit RepresentationFactor(int value);

  int value() const { return value_; }
  int Log2() const;
  std::size_t LatentLength() const { return kResamplePoints / static_cast<std::size_t>(value_); }
  // Anchor triplets that fit alongside the scale scalar.
  std::size_t AnchorCount() const { return (LatentLength() - 1) / 3; }

  auto operator<=>(const RepresentationFactor&) const = default;

 private:
  int value_ = kMin;
};

struct Latent {
  RepresentationFactor rf;
  std::vector<float> payload;
  int source_point_count = 0;
};

// Anchors (farthest-point subset) followed by one jitter scale, zero padded.
// Throws kSizeMismatch unless the cloud has exactly kResamplePoints points.
Latent Encode(const PointCloud& cloud, RepresentationFactor rf, int source_point_count = 0);

// Replicates anchors evenly and adds isotropic Gaussian jitter whose mean
// radius equals the stored scale. Throws kDecodeError on malformed input.
PointCloud Decode(const Latent& latent, std::uint64_t seed);

// Latent payload size only; the descriptor header is kDescriptorOverheadBytes.
std::size_t PayloadBytes(RepresentationFactor rf);

// Payload bytes for a continuous factor (2^log2_rf), used by the optimizer.
double PayloadBytesContinuous(double log2_rf);

}  // namespace coperc
