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
#include "coperc/codec.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "coperc/errors.h"
#include "coperc/kdtree.h"
#include "coperc/random.h"

namespace coperc {

RepresentationFactor::RepresentationFactor(int value) : value_(value) {
  if (std::find(kDefaultSet.begin(), kDefaultSet.end(), value) == kDefaultSet.end()) {
    throw Error(ErrorCode::kInvalidArgument,
                "representation factor " + std::to_string(value) + " is not in the RF set");
  }
}

int RepresentationFactor::Log2() const {
  int l = 0;
  for (int v = value_; v > 1; v >>= 1) ++l;
  return l;
}

Latent Encode(const PointCloud& cloud, RepresentationFactor rf, int source_point_count) {
  if (cloud.size() != kResamplePoints) {
    throw Error(ErrorCode::kSizeMismatch, "encode expects a cloud resampled to 1024 points");
  }
  const std::size_t anchor_count = rf.AnchorCount();
  std::vector<Point3> anchors;
  anchors.reserve(anchor_count);
  for (std::size_t idx : FarthestPointIndices(cloud.points, anchor_count)) {
    anchors.push_back(cloud.points[idx]);
  }
  const KdTree3 tree(anchors);
  double scale = 0.0;
  for (const auto& p : cloud.points) scale += std::sqrt(tree.Nearest(p).second);
  scale /= static_cast<double>(cloud.size());

  Latent latent;
  latent.rf = rf;
  latent.source_point_count = source_point_count;
  latent.payload.assign(rf.LatentLength(), 0.0f);
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    for (int axis = 0; axis < 3; ++axis) {
      latent.payload[3 * a + axis] = static_cast<float>(anchors[a][axis]);
    }
  }
  latent.payload[3 * anchor_count] = static_cast<float>(scale);
  return latent;
}

PointCloud Decode(const Latent& latent, std::uint64_t seed) {
  const std::size_t anchor_count = latent.rf.AnchorCount();
  if (latent.payload.size() != latent.rf.LatentLength()) {
    throw Error(ErrorCode::kDecodeError, "latent payload length does not match its RF");
  }
  for (float v : latent.payload) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kDecodeError, "latent payload is not finite");
  }
  const double scale = latent.payload[3 * anchor_count];
  if (scale < 0.0) throw Error(ErrorCode::kDecodeError, "negative jitter scale");

  // E|N(0, s^2 I_3)| = 2 s sqrt(2/pi).
  const double sigma = scale / (2.0 * std::sqrt(2.0 / std::numbers::pi));
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  PointCloud out;
  out.points.reserve(kResamplePoints);
  for (std::size_t i = 0; i < kResamplePoints; ++i) {
    const std::size_t a = i * anchor_count / kResamplePoints;
    Point3 p(latent.payload[3 * a], latent.payload[3 * a + 1], latent.payload[3 * a + 2]);
    if (sigma > 0.0) {
      p.x() += sigma * noise(rng);
      p.y() += sigma * noise(rng);
      p.z() += sigma * noise(rng);
    }
    out.points.push_back(p);
  }
  return out;
}

std::size_t PayloadBytes(RepresentationFactor rf) { return rf.LatentLength() * sizeof(float); }

double PayloadBytesContinuous(double log2_rf) {
  return static_cast<double>(kResamplePoints) * sizeof(float) / std::exp2(log2_rf);
}

}  // namespace coperc
