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
#include "coperc/random.h"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "coperc/errors.h"

namespace coperc {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double Pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

// Upper tail probability 1 - Phi(z), accurate far into the tail.
double UpperTail(double z) { return 0.5 * std::erfc(z * kInvSqrt2); }

// Inverse Mills ratio phi(alpha) / (1 - Phi(alpha)).
double Mills(double alpha) {
  if (alpha > 30.0) return alpha + 1.0 / alpha;
  return Pdf(alpha) / UpperTail(alpha);
}

// Standardized mean and sd of N(0,1) truncated below at alpha, expressed
// relative to the underlying scale, after shifting by -alpha.
double ScaledMean(double alpha) { return Mills(alpha) - alpha; }
double ScaledSd(double alpha) {
  const double m = Mills(alpha);
  return std::sqrt(std::max(0.0, 1.0 + alpha * m - m * m));
}

double TruncatedMean(double loc, double scale) {
  return scale * ScaledMean(-loc / scale);
}

}  // namespace

std::uint64_t DeriveSeed(std::uint64_t base,
                         std::initializer_list<std::uint64_t> keys) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(base);
  for (std::uint64_t k : keys) h = mix(h ^ mix(k + 0x632be59bd9b4e019ULL));
  return h;
}

double OpenUniform(Rng& rng) {
  // 53 random bits mapped to the midpoints of a 2^-53 grid.
  const std::uint64_t bits = rng() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

TruncatedNormal TruncatedNormal::Matching(double mean, double sd) {
  if (!(mean > 0.0) || !(sd > 0.0) || !std::isfinite(mean) ||
      !std::isfinite(sd)) {
    throw Error(ErrorCode::kCalibrationError,
                "truncated normal needs positive mean and sd");
  }
  const double cv = sd / mean;
  // The coefficient of variation of a zero-truncated normal increases
  // monotonically with alpha = -loc/scale and tends to 1 from below.
  if (cv < 0.999) {
    double lo = -40.0, hi = 30.0;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (ScaledSd(mid) / ScaledMean(mid) < cv) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    const double alpha = 0.5 * (lo + hi);
    const double scale = mean / ScaledMean(alpha);
    return TruncatedNormal(-alpha * scale, scale);
  }
  // Mean-only match with the underlying scale pinned to sd.
  double lo = -60.0 * sd, hi = mean + 10.0 * sd;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (TruncatedMean(mid, sd) < mean) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return TruncatedNormal(0.5 * (lo + hi), sd);
}

TruncatedNormal TruncatedNormal::FromUnderlying(double loc, double scale) {
  if (!(scale > 0.0) || !std::isfinite(loc)) {
    throw Error(ErrorCode::kCalibrationError,
                "truncated normal needs a positive scale");
  }
  return TruncatedNormal(loc, scale);
}

double TruncatedNormal::Quantile(double u) const {
  static const boost::math::normal_distribution<double> kStd(0.0, 1.0);
  const double alpha = -loc_ / scale_;
  // Sample through the upper tail so that heavily truncated shapes keep
  // their precision.
  const double tail = (1.0 - u) * UpperTail(alpha);
  if (!(tail > 0.0)) return std::max(0.0, loc_ + scale_ * alpha);
  const double z = boost::math::quantile(boost::math::complement(kStd, tail));
  return std::max(0.0, loc_ + scale_ * z);
}

double TruncatedNormal::Mean() const { return TruncatedMean(loc_, scale_); }

double TruncatedNormal::StdDev() const {
  return scale_ * ScaledSd(-loc_ / scale_);
}

}  // namespace coperc
