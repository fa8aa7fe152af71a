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
#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"

#include "coperc/codec.h"
#include "coperc/dataset.h"
#include "coperc/errors.h"

namespace coperc {
namespace {

PointCloud CarCloud(std::uint64_t seed, std::size_t raw = 1500) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Bbox3 box;
  box.extent = Eigen::Vector3d(4.0 + u(rng), 1.7 + 0.3 * u(rng), 1.5);
  box.yaw = 6.0 * u(rng) - 3.0;
  const double b = 6.28 * u(rng);
  return Resample(SampleVisibleSurface(box, Point3(20 * std::cos(b), 20 * std::sin(b), 2), raw,
                                       rng()),
                  kResamplePoints);
}

TEST_SUITE("codec") {

TEST_CASE("latent sizes") {
  const auto cloud = CarCloud(1);
  for (int rf : RepresentationFactor::kDefaultSet) {
    const auto lat = Encode(cloud, RepresentationFactor(rf));
    CHECK(lat.payload.size() == 1024u / static_cast<unsigned>(rf));
    for (float v : lat.payload) CHECK(std::isfinite(v));
  }
  CHECK(RepresentationFactor(4).AnchorCount() == 85);
  CHECK(RepresentationFactor(64).AnchorCount() == 5);
  CHECK(PayloadBytes(RepresentationFactor(4)) == 1024);
  CHECK(PayloadBytes(RepresentationFactor(64)) == 64);
  CHECK(kRawObjectBytes == 12288);
  CHECK(PayloadBytesContinuous(2.0) == doctest::Approx(1024.0));
  CHECK(RepresentationFactor(16).Log2() == 4);
  CHECK_THROWS_AS(RepresentationFactor(12), Error);
}

TEST_CASE("encode and decode are deterministic") {
  const auto cloud = CarCloud(2);
  const auto a = Encode(cloud, RepresentationFactor(8));
  const auto b = Encode(cloud, RepresentationFactor(8));
  CHECK(a.payload == b.payload);
  CHECK(Decode(a, 5).points == Decode(b, 5).points);
  CHECK(Decode(a, 5).size() == 1024);
  CHECK_THROWS_AS(Encode(Resample(cloud, 100), RepresentationFactor(8)), Error);
}

TEST_CASE("degenerate latent decodes to copies of the anchor") {
  Latent lat;
  lat.rf = RepresentationFactor(64);
  lat.payload.assign(16, 0.0f);
  for (std::size_t a = 0; a < 5; ++a) {
    lat.payload[3 * a] = 1.5f;
    lat.payload[3 * a + 1] = -2.0f;
    lat.payload[3 * a + 2] = 0.25f;
  }
  const auto out = Decode(lat, 9);
  REQUIRE(out.size() == 1024);
  for (const auto& p : out.points) CHECK((p - Point3(1.5, -2.0, 0.25)).norm() == 0.0);
}

TEST_CASE("malformed latents are rejected") {
  Latent lat;
  lat.rf = RepresentationFactor(32);
  lat.payload.assign(10, 0.0f);
  CHECK_THROWS_AS(Decode(lat, 1), Error);
  lat.payload.assign(32, 0.0f);
  lat.payload[3] = std::nanf("");
  CHECK_THROWS_AS(Decode(lat, 1), Error);
  lat.payload.assign(32, 0.0f);
  lat.payload[3 * lat.rf.AnchorCount()] = -1.0f;
  CHECK_THROWS_AS(Decode(lat, 1), Error);
}

TEST_CASE("loss grows with compression") {
  // Paired over 100 clouds; sign test on RF 4 against RF 64, and
  // non-decreasing means along the RF set.
  std::array<double, 5> mean{};
  int wins = 0;
  const int n = 100;
  for (int i = 0; i < n; ++i) {
    const auto cloud = CarCloud(100 + i);
    std::array<double, 5> loss{};
    for (std::size_t r = 0; r < 5; ++r) {
      const RepresentationFactor rf(RepresentationFactor::kDefaultSet[r]);
      loss[r] = ReconstructionLoss(cloud, Decode(Encode(cloud, rf), 7 + i));
      mean[r] += loss[r] / n;
    }
    wins += loss[0] < loss[4] ? 1 : 0;
  }
  for (std::size_t r = 1; r < 5; ++r) CHECK(mean[r] >= mean[r - 1]);
  // P(wins >= 70 | fair coin, n = 100) < 1e-4
  CHECK(wins >= 70);
}

TEST_CASE("decode keeps the centroid") {
  int ok = 0;
  const int trials = 100;
  for (int i = 0; i < trials; ++i) {
    const auto cloud = CarCloud(300 + i);
    const RepresentationFactor rf(RepresentationFactor::kDefaultSet[i % 5]);
    const auto lat = Encode(cloud, rf);
    const double scale = lat.payload[3 * rf.AnchorCount()];
    const auto out = Decode(lat, i);
    ok += (out.Centroid() - cloud.Centroid()).norm() <= 3.0 * scale ? 1 : 0;
  }
  CHECK(ok >= 95);
}

}  // TEST_SUITE

TEST_SUITE("dataset") {

TEST_CASE("buckets") {
  const MeasurementDataset ds;
  CHECK(ds.BucketCount() == 7);
  CHECK(ds.BucketOf(0) == 0);
  CHECK(ds.BucketOf(127) == 0);
  CHECK(ds.BucketOf(128) == 1);
  CHECK(ds.BucketOf(5000) == 6);
}

TEST_CASE("surrogate calibration") {
  const auto ds = SurrogateDataset(DefaultCalibration(), 10000, 3);
  const std::array<double, 5> means = {0.26, 0.32, 0.38, 0.46, 0.48};
  for (std::size_t r = 0; r < 5; ++r) {
    const int rf = RepresentationFactor::kDefaultSet[r];
    for (int b = 0; b < ds.BucketCount(); ++b) {
      CHECK(std::abs(ds.MeanLoss({rf, b}) - means[r]) <= 0.02);
    }
    for (const auto& s : ds.Samples({rf, 0})) {
      CHECK(s.loss >= 0.0);
      CHECK(s.encode_ms >= 0.0);
      CHECK(s.decode_ms >= 0.0);
    }
  }
  auto bad = DefaultCalibration();
  bad[0].loss_sd = 0.0;
  CHECK_THROWS_AS(SurrogateDataset(bad, 10, 1), Error);
}

TEST_CASE("surrogate timing matches calibration") {
  const auto ds = SurrogateDataset(DefaultCalibration(), 20000, 4);
  double sum = 0.0, sq = 0.0;
  const auto& s = ds.Samples({16, 3});
  for (const auto& x : s) {
    sum += x.decode_ms;
    sq += x.decode_ms * x.decode_ms;
  }
  const double m = sum / s.size();
  CHECK(m == doctest::Approx(1.72).epsilon(0.02));
  CHECK(std::sqrt(sq / s.size() - m * m) == doctest::Approx(0.53).epsilon(0.05));
}

TEST_CASE("profile one RF and one bucket") {
  ProfileOptions opt;
  opt.rf_set = {8};
  opt.bucket_edges = {0.0, std::numeric_limits<double>::infinity()};
  opt.clouds_per_bucket = 30;
  const auto ds = ProfileCodec(DefaultCloudGenerator(opt.bucket_edges), opt);
  REQUIRE(ds.Keys().size() == 1);
  CHECK(ds.Keys()[0].rf == 8);
  for (const auto& s : ds.Samples({8, 0})) CHECK(s.loss >= 0.0);
}

TEST_CASE("profiling reports missing keys") {
  ProfileOptions opt;
  opt.rf_set = {4, 64};
  opt.clouds_per_bucket = 5;
  try {
    (void)ProfileCodec(DefaultCloudGenerator(), opt);
    FAIL("expected ProfileIncomplete");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kProfileIncomplete);
    CHECK(std::string(e.what()).find("rf=64") != std::string::npos);
  }
}

TEST_CASE("default generator profile: loss non-decreasing in RF") {
  ProfileOptions opt;
  opt.bucket_edges = {0.0, 512.0, 2048.0, std::numeric_limits<double>::infinity()};
  opt.clouds_per_bucket = 30;
  opt.workers = 1;
  const auto ds = ProfileCodec(DefaultCloudGenerator(opt.bucket_edges), opt);
  CHECK(ds.MissingKeys(opt.rf_set, 30).empty());
  for (std::size_t r = 1; r < 5; ++r) {
    double lo = 0.0, hi = 0.0;
    for (int b = 0; b < ds.BucketCount(); ++b) {
      lo += ds.MeanLoss({RepresentationFactor::kDefaultSet[r - 1], b});
      hi += ds.MeanLoss({RepresentationFactor::kDefaultSet[r], b});
    }
    CHECK(hi >= lo);
  }
}

TEST_CASE("save, load and merge") {
  auto a = SurrogateDataset(DefaultCalibration(), 40, 1);
  const auto path = std::filesystem::temp_directory_path() / "coperc_dataset_test.txt";
  a.Save(path);
  const auto b = MeasurementDataset::Load(path);
  std::filesystem::remove(path);
  REQUIRE(b.Keys() == a.Keys());
  for (const auto& k : a.Keys()) {
    REQUIRE(b.Samples(k).size() == a.Samples(k).size());
    for (std::size_t i = 0; i < a.Samples(k).size(); ++i) {
      CHECK(b.Samples(k)[i].loss == a.Samples(k)[i].loss);
      CHECK(b.Samples(k)[i].decode_ms == a.Samples(k)[i].decode_ms);
    }
  }
  const auto c = SurrogateDataset(DefaultCalibration(), 10, 2);
  const auto d = SurrogateDataset(DefaultCalibration(), 20, 3);
  MeasurementDataset left = a, right = c;
  left.Merge(c);
  left.Merge(d);
  right.Merge(d);
  MeasurementDataset assoc = a;
  assoc.Merge(right);
  for (const auto& k : left.Keys()) {
    CHECK(left.Samples(k).size() == assoc.Samples(k).size());
    CHECK(left.MeanLoss(k) == doctest::Approx(assoc.MeanLoss(k)).epsilon(1e-12));
  }
  CHECK_THROWS_AS((void)a.Samples({4, 99}), Error);
}

}  // TEST_SUITE

}  // namespace
}  // namespace coperc
