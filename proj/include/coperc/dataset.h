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

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "coperc/codec.h"
#include "coperc/geometry.h"
#include "coperc/random.h"

namespace coperc {

struct MeasurementSample {
  double loss = 0.0;
  double encode_ms = 0.0;
  double decode_ms = 0.0;
};

struct DatasetKey {
  int rf = 4;
  int bucket = 0;
  auto operator<=>(const DatasetKey&) const = default;
};

// Edges over raw point counts; bucket i covers [edges[i], edges[i+1]).
std::vector<double> DefaultBucketEdges();

// Offline (RF, point-count bucket) -> samples of loss and codec time.
class MeasurementDataset {
 public:
  explicit MeasurementDataset(std::vector<double> bucket_edges = DefaultBucketEdges());

  const std::vector<double>& bucket_edges() const { return edges_; }
  int BucketCount() const { return static_cast<int>(edges_.size()) - 1; }
  int BucketOf(double raw_point_count) const;

  void Add(DatasetKey key, MeasurementSample sample);
  bool Has(DatasetKey key) const { return entries_.count(key) != 0; }
  // Throws kDatasetMiss for absent keys.
  const std::vector<MeasurementSample>& Samples(DatasetKey key) const;
  double MeanLoss(DatasetKey key) const;
  std::vector<DatasetKey> Keys() const;
  std::size_t TotalSamples() const;

  std::vector<DatasetKey> MissingKeys(std::span<const int> rf_set, std::size_t min_samples) const;
  // Throws kProfileIncomplete naming each key below `min_samples`.
  void RequireComplete(std::span<const int> rf_set, std::size_t min_samples) const;

  // Concatenates samples; associative, and commutative up to sample order.
  void Merge(const MeasurementDataset& other);

  void Save(const std::filesystem::path& path) const;
  static MeasurementDataset Load(const std::filesystem::path& path);

 private:
  struct Entry {
    std::vector<MeasurementSample> samples;
    double loss_sum = 0.0;
  };

  std::vector<double> edges_;
  std::map<DatasetKey, Entry> entries_;
};

inline constexpr std::size_t kMinSamplesPerKey = 30;

// Produces a raw cloud whose point count falls in `bucket`.
using CloudGenerator = std::function<PointCloud(int bucket, Rng& rng)>;

// Visible surface of a random car-sized box seen from a random viewpoint.
CloudGenerator DefaultCloudGenerator(std::vector<double> bucket_edges = DefaultBucketEdges());

struct ProfileOptions {
  std::vector<int> rf_set{RepresentationFactor::kDefaultSet.begin(),
                          RepresentationFactor::kDefaultSet.end()};
  std::vector<double> bucket_edges = DefaultBucketEdges();
  std::size_t clouds_per_bucket = 50;
  std::size_t min_samples = kMinSamplesPerKey;
  double beta = kDefaultLossBeta;
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

// Measures reconstruction loss and wall-clock codec time for every cloud
// and RF. Throws kProfileIncomplete if any key ends below min_samples.
MeasurementDataset ProfileCodec(const CloudGenerator& generator, const ProfileOptions& options);

// Per-RF truncated-normal parameters (mean/sd of the truncated law).
struct RfCalibration {
  int rf = 4;
  double loss_mean = 0.0;
  double loss_sd = 0.0;
  double encode_mean_ms = 1.72;
  double encode_sd_ms = 0.53;
  double decode_mean_ms = 1.72;
  double decode_sd_ms = 0.53;
};

std::vector<RfCalibration> DefaultCalibration();

// Synthetic dataset drawn from the calibration, identical law per bucket.
// Throws kCalibrationError on nonpositive moments.
MeasurementDataset SurrogateDataset(const std::vector<RfCalibration>& calibration,
                                    std::size_t samples_per_key, std::uint64_t seed,
                                    std::vector<double> bucket_edges = DefaultBucketEdges());

}  // namespace coperc
