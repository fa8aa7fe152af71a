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
#include "coperc/dataset.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include "coperc/errors.h"

namespace coperc {
namespace {

constexpr char kDatasetMagic[] = "# coperc measurement dataset v1";

std::string FormatDouble(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double ParseDouble(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument(s);
  return v;
}

std::string KeyList(const std::vector<DatasetKey>& keys) {
  std::string out;
  for (const auto& k : keys) {
    if (!out.empty()) out += ", ";
    out += "(rf=" + std::to_string(k.rf) + ", bucket=" + std::to_string(k.bucket) + ")";
  }
  return out;
}

}  // namespace

std::vector<double> DefaultBucketEdges() {
  return {0.0, 128.0, 256.0, 512.0, 1024.0, 2048.0, 4096.0,
          std::numeric_limits<double>::infinity()};
}

MeasurementDataset::MeasurementDataset(std::vector<double> bucket_edges)
    : edges_(std::move(bucket_edges)) {
  if (edges_.size() < 2 || !std::is_sorted(edges_.begin(), edges_.end()) ||
      std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end()) {
    throw Error(ErrorCode::kInvalidArgument, "bucket edges must be strictly increasing");
  }
}

int MeasurementDataset::BucketOf(double raw_point_count) const {
  const auto it = std::upper_bound(edges_.begin(), edges_.end(), raw_point_count);
  const int idx = static_cast<int>(it - edges_.begin()) - 1;
  return std::clamp(idx, 0, BucketCount() - 1);
}

void MeasurementDataset::Add(DatasetKey key, MeasurementSample sample) {
  if (key.bucket < 0 || key.bucket >= BucketCount()) {
    throw Error(ErrorCode::kInvalidArgument, "bucket index out of range");
  }
  if (!(sample.loss >= 0.0) || !(sample.encode_ms >= 0.0) || !(sample.decode_ms >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "dataset samples must be nonnegative");
  }
  Entry& e = entries_[key];
  e.samples.push_back(sample);
  e.loss_sum += sample.loss;
}

const std::vector<MeasurementSample>& MeasurementDataset::Samples(DatasetKey key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) {
    throw Error(ErrorCode::kDatasetMiss, "no samples for " + KeyList({key}));
  }
  return it->second.samples;
}

double MeasurementDataset::MeanLoss(DatasetKey key) const {
  const auto& samples = Samples(key);
  return entries_.at(key).loss_sum / static_cast<double>(samples.size());
}

std::vector<DatasetKey> MeasurementDataset::Keys() const {
  std::vector<DatasetKey> keys;
  for (const auto& [k, e] : entries_) keys.push_back(k);
  return keys;
}

std::size_t MeasurementDataset::TotalSamples() const {
  std::size_t n = 0;
  for (const auto& [k, e] : entries_) n += e.samples.size();
  return n;
}

std::vector<DatasetKey> MeasurementDataset::MissingKeys(std::span<const int> rf_set,
                                                        std::size_t min_samples) const {
  std::vector<DatasetKey> missing;
  for (int rf : rf_set) {
    for (int b = 0; b < BucketCount(); ++b) {
      const auto it = entries_.find({rf, b});
      if (it == entries_.end() || it->second.samples.size() < min_samples) {
        missing.push_back({rf, b});
      }
    }
  }
  return missing;
}

void MeasurementDataset::RequireComplete(std::span<const int> rf_set,
                                         std::size_t min_samples) const {
  const auto missing = MissingKeys(rf_set, min_samples);
  if (!missing.empty()) {
    throw Error(ErrorCode::kProfileIncomplete,
                "fewer than " + std::to_string(min_samples) + " samples for " + KeyList(missing));
  }
}

void MeasurementDataset::Merge(const MeasurementDataset& other) {
  if (other.edges_ != edges_) {
    throw Error(ErrorCode::kInvalidArgument, "cannot merge datasets with different buckets");
  }
  for (const auto& [k, e] : other.entries_) {
    Entry& mine = entries_[k];
    mine.samples.insert(mine.samples.end(), e.samples.begin(), e.samples.end());
    mine.loss_sum += e.loss_sum;
  }
}

void MeasurementDataset::Save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  out << kDatasetMagic << "\n# bucket_edges";
  for (double e : edges_) out << ' ' << FormatDouble(e);
  out << "\nrf,bucket,loss,t_enc_ms,t_dec_ms\n";
  for (const auto& [k, e] : entries_) {
    for (const auto& s : e.samples) {
      out << k.rf << ',' << k.bucket << ',' << FormatDouble(s.loss) << ','
          << FormatDouble(s.encode_ms) << ',' << FormatDouble(s.decode_ms) << '\n';
    }
  }
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path.string());
}

MeasurementDataset MeasurementDataset::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::string line;
  std::vector<double> edges;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::kParseError,
                path.string() + ":" + std::to_string(line_no) + ": " + why);
  };
  std::optional<MeasurementDataset> ds;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.rfind("# bucket_edges", 0) == 0) {
      std::istringstream ss(line.substr(14));
      std::string tok;
      try {
        while (ss >> tok) edges.push_back(ParseDouble(tok));
      } catch (const std::exception&) {
        fail("bad bucket edge");
      }
      ds.emplace(edges);
      continue;
    }
    if (line[0] == '#' || line.rfind("rf,", 0) == 0) continue;
    if (!ds) ds.emplace(DefaultBucketEdges());
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 5) fail("expected 5 fields");
    try {
      const DatasetKey key{std::stoi(fields[0]), std::stoi(fields[1])};
      ds->Add(key, {ParseDouble(fields[2]), ParseDouble(fields[3]), ParseDouble(fields[4])});
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      fail("malformed record");
    }
  }
  if (!ds) return MeasurementDataset();
  return std::move(*ds);
}

CloudGenerator DefaultCloudGenerator(std::vector<double> bucket_edges) {
  return [edges = std::move(bucket_edges)](int bucket, Rng& rng) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double lo = std::max(edges[bucket], 16.0);
    double hi = edges[bucket + 1];
    if (std::isinf(hi)) hi = 2.0 * std::max(lo, 1.0);
    const auto n = static_cast<std::size_t>(std::floor(lo + u01(rng) * (hi - lo)));

    Bbox3 box;
    box.extent = Eigen::Vector3d(3.8 + 1.2 * u01(rng), 1.6 + 0.4 * u01(rng), 1.4 + 0.4 * u01(rng));
    box.center = Point3(0.0, 0.0, 0.5 * box.extent.z());
    box.yaw = WrapAngle(2.0 * std::numbers::pi * u01(rng));
    const double bearing = 2.0 * std::numbers::pi * u01(rng);
    const double range = 5.0 + 35.0 * u01(rng);
    const Point3 viewpoint(range * std::cos(bearing), range * std::sin(bearing), 2.5);
    return SampleVisibleSurface(box, viewpoint, std::max<std::size_t>(n, 1), rng());
  };
}

MeasurementDataset ProfileCodec(const CloudGenerator& generator, const ProfileOptions& options) {
  struct Task {
    int bucket;
    std::size_t index;
  };
  MeasurementDataset probe(options.bucket_edges);
  std::vector<Task> tasks;
  for (int b = 0; b < probe.BucketCount(); ++b) {
    for (std::size_t c = 0; c < options.clouds_per_bucket; ++c) tasks.push_back({b, c});
  }
  std::vector<RepresentationFactor> rfs;
  for (int rf : options.rf_set) rfs.emplace_back(rf);

  // Generating is cheap next to the codec, so find short buckets first.
  std::vector<std::size_t> per_bucket(static_cast<std::size_t>(probe.BucketCount()), 0);
  for (const auto& t : tasks) {
    Rng rng(DeriveSeed(options.seed, {static_cast<std::uint64_t>(t.bucket), t.index}));
    ++per_bucket[static_cast<std::size_t>(
        probe.BucketOf(static_cast<double>(generator(t.bucket, rng).size())))];
  }
  std::vector<DatasetKey> short_keys;
  for (int rf : options.rf_set) {
    for (int b = 0; b < probe.BucketCount(); ++b) {
      if (per_bucket[static_cast<std::size_t>(b)] < options.min_samples) short_keys.push_back({rf, b});
    }
  }
  if (!short_keys.empty()) {
    throw Error(ErrorCode::kProfileIncomplete, "fewer than " + std::to_string(options.min_samples) +
                                                   " samples for " + KeyList(short_keys));
  }

  const unsigned workers = std::max(1u, std::min<unsigned>(options.workers, tasks.size()));
  std::vector<MeasurementDataset> partial(tasks.size(), MeasurementDataset(options.bucket_edges));
  auto run = [&](unsigned worker) {
    for (std::size_t t = worker; t < tasks.size(); t += workers) {
      Rng rng(DeriveSeed(options.seed, {static_cast<std::uint64_t>(tasks[t].bucket),
                                        tasks[t].index}));
      const PointCloud raw = generator(tasks[t].bucket, rng);
      const int bucket = probe.BucketOf(static_cast<double>(raw.size()));
      const PointCloud original = Resample(raw, kResamplePoints);
      for (RepresentationFactor rf : rfs) {
        using Clock = std::chrono::steady_clock;
        const auto t0 = Clock::now();
        const Latent latent = Encode(original, rf, static_cast<int>(raw.size()));
        const auto t1 = Clock::now();
        const PointCloud decoded = Decode(latent, rng());
        const auto t2 = Clock::now();
        MeasurementSample s;
        s.loss = ReconstructionLoss(original, decoded, options.beta);
        s.encode_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        s.decode_ms = std::chrono::duration<double, std::milli>(t2 - t1).count();
        partial[t].Add({rf.value(), bucket}, s);
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(run, w);
  run(0);
  for (auto& th : pool) th.join();

  MeasurementDataset out(options.bucket_edges);
  for (const auto& p : partial) out.Merge(p);
  out.RequireComplete(options.rf_set, options.min_samples);
  return out;
}

std::vector<RfCalibration> DefaultCalibration() {
  const std::array<double, 5> means = {0.26, 0.32, 0.38, 0.46, 0.48};
  const std::array<double, 5> sds = {0.1, 0.1, 0.3, 0.3, 0.4};
  std::vector<RfCalibration> out;
  for (std::size_t i = 0; i < RepresentationFactor::kDefaultSet.size(); ++i) {
    RfCalibration c;
    c.rf = RepresentationFactor::kDefaultSet[i];
    c.loss_mean = means[i];
    c.loss_sd = sds[i];
    out.push_back(c);
  }
  return out;
}

MeasurementDataset SurrogateDataset(const std::vector<RfCalibration>& calibration,
                                    std::size_t samples_per_key, std::uint64_t seed,
                                    std::vector<double> bucket_edges) {
  MeasurementDataset out(std::move(bucket_edges));
  for (const auto& c : calibration) {
    const auto loss = TruncatedNormal::Matching(c.loss_mean, c.loss_sd);
    const auto enc = TruncatedNormal::Matching(c.encode_mean_ms, c.encode_sd_ms);
    const auto dec = TruncatedNormal::Matching(c.decode_mean_ms, c.decode_sd_ms);
    for (int b = 0; b < out.BucketCount(); ++b) {
      Rng rng(DeriveSeed(seed, {static_cast<std::uint64_t>(c.rf), static_cast<std::uint64_t>(b)}));
      for (std::size_t i = 0; i < samples_per_key; ++i) {
        MeasurementSample s;
        s.loss = loss(rng);
        s.encode_ms = enc(rng);
        s.decode_ms = dec(rng);
        out.Add({c.rf, b}, s);
      }
    }
  }
  return out;
}

}  // namespace coperc
