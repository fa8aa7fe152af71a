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
#include "coperc/geometry.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>

#include "coperc/assignment.h"
#include "coperc/errors.h"
#include "coperc/kdtree.h"
#include "coperc/random.h"

namespace coperc {

Point3 PointCloud::Centroid() const {
  Point3 sum = Point3::Zero();
  for (const auto& p : points) sum += p;
  return points.empty() ? sum : Point3(sum / static_cast<double>(size()));
}

void PointCloud::Validate() const {
  for (const auto& p : points) {
    if (!p.allFinite()) {
      throw Error(ErrorCode::kInvalidArgument, "point cloud has non-finite coordinates");
    }
  }
}

Point3 Bbox3::ToBoxFrame(const Point3& p) const {
  const double c = std::cos(yaw), s = std::sin(yaw);
  const Point3 d = p - center;
  return {c * d.x() + s * d.y(), -s * d.x() + c * d.y(), d.z()};
}

Point3 Bbox3::FromBoxFrame(const Point3& q) const {
  const double c = std::cos(yaw), s = std::sin(yaw);
  return center + Point3(c * q.x() - s * q.y(), s * q.x() + c * q.y(), q.z());
}

bool Bbox3::Contains(const Point3& p, double tol) const {
  const Point3 q = ToBoxFrame(p);
  return std::abs(q.x()) <= 0.5 * extent.x() + tol &&
         std::abs(q.y()) <= 0.5 * extent.y() + tol &&
         std::abs(q.z()) <= 0.5 * extent.z() + tol;
}

void Bbox3::Validate() const {
  if (!(extent.array() > 0.0).all() || !extent.allFinite() ||
      !center.allFinite() || !std::isfinite(yaw)) {
    throw Error(ErrorCode::kInvalidArgument, "bbox needs finite fields and positive extents");
  }
}

double WrapAngle(double a) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double w = std::fmod(a + std::numbers::pi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  w -= std::numbers::pi;
  return w >= std::numbers::pi ? -std::numbers::pi : w;
}

TransformMatrix::TransformMatrix(const Eigen::Matrix4d& m, double tol) : m_(m) {
  if (!IsRigid(m, tol)) {
    throw Error(ErrorCode::kInvalidArgument, "matrix is not a rigid transform");
  }
}

bool TransformMatrix::IsRigid(const Eigen::Matrix4d& m, double tol) {
  if (!m.allFinite()) return false;
  const Eigen::RowVector4d bottom(0.0, 0.0, 0.0, 1.0);
  if ((m.row(3) - bottom).cwiseAbs().maxCoeff() > tol) return false;
  const Eigen::Matrix3d r = m.topLeftCorner<3, 3>();
  if ((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > tol) {
    return false;
  }
  return std::abs(r.determinant() - 1.0) <= tol;
}

TransformMatrix TransformMatrix::Inverse() const {
  Eigen::Matrix4d inv = Eigen::Matrix4d::Identity();
  const Eigen::Matrix3d rt = Rotation().transpose();
  inv.topLeftCorner<3, 3>() = rt;
  inv.topRightCorner<3, 1>() = -rt * Translation();
  TransformMatrix out;
  out.m_ = inv;
  return out;
}

TransformMatrix BuildTransform(const Pose& pose) {
  const double cp = std::cos(pose.pitch), sp = std::sin(pose.pitch);
  const double cr = std::cos(pose.roll), sr = std::sin(pose.roll);
  const double cy = std::cos(pose.yaw), sy = std::sin(pose.yaw);
  Eigen::Matrix4d m;
  m << cp * cy, -cr * sy + cy * sp * sr, cr * cy * sp + sr * sy, pose.position.x(),
       cp * sy, cr * cy + sp * sr * sy, cr * sp * sy - cy * sr, pose.position.y(),
       -sp, cp * sr, cp * cr, pose.position.z(),
       0.0, 0.0, 0.0, 1.0;
  return TransformMatrix(m, 1e-9);
}

Point3 ToGlobal(const Point3& p_local, const TransformMatrix& t) {
  return t.Apply(p_local);
}

Point3 ToLocal(const Point3& p_global, const TransformMatrix& t) {
  return t.Rotation().transpose() * (p_global - t.Translation());
}

PointCloud ToGlobal(const PointCloud& cloud, const TransformMatrix& t) {
  PointCloud out;
  out.frame = FrameLabel::Global();
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) out.points.push_back(t.Apply(p));
  return out;
}

std::vector<std::size_t> FarthestPointIndices(const std::vector<Point3>& points,
                                              std::size_t count) {
  const std::size_t n = points.size();
  count = std::min(count, n);
  std::vector<std::size_t> picked;
  if (count == 0) return picked;
  picked.reserve(count);

  Point3 centroid = Point3::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(n);
  std::size_t start = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double d2 = (points[i] - centroid).squaredNorm();
    if (d2 < best) {
      best = d2;
      start = i;
    }
  }

  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  std::size_t current = start;
  for (std::size_t k = 0; k < count; ++k) {
    picked.push_back(current);
    min_d2[current] = -1.0;
    std::size_t next = 0;
    double far = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (min_d2[i] < 0.0) continue;
      const double d2 = (points[i] - points[current]).squaredNorm();
      if (d2 < min_d2[i]) min_d2[i] = d2;
      if (min_d2[i] > far) {
        far = min_d2[i];
        next = i;
      }
    }
    current = next;
  }
  return picked;
}

PointCloud Resample(const PointCloud& cloud, std::size_t n) {
  if (cloud.empty()) throw Error(ErrorCode::kEmptyCloud, "cannot resample an empty cloud");
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "resample target must be >= 1");
  PointCloud out;
  out.frame = cloud.frame;
  if (cloud.size() == n) {
    out.points = cloud.points;
  } else if (cloud.size() > n) {
    out.points.reserve(n);
    for (std::size_t idx : FarthestPointIndices(cloud.points, n)) {
      out.points.push_back(cloud.points[idx]);
    }
  } else {
    out.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.points.push_back(cloud.points[i % cloud.size()]);
  }
  return out;
}

namespace {

double MeanNearestSquared(const PointCloud& from, const KdTree3& to) {
  double sum = 0.0;
  for (const auto& p : from.points) sum += to.Nearest(p).second;
  return sum / static_cast<double>(from.size());
}

Eigen::MatrixXd DistanceMatrix(const PointCloud& a, const PointCloud& b) {
  const auto n = static_cast<Eigen::Index>(a.size());
  Eigen::MatrixXd cost(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) cost(i, j) = (a.points[i] - b.points[j]).norm();
  }
  return cost;
}

void CheckEmdInputs(const PointCloud& a, const PointCloud& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kSizeMismatch, "EMD needs clouds of equal size");
  }
  if (a.empty()) throw Error(ErrorCode::kEmptyCloud, "EMD of empty clouds");
}

}  // namespace

double ChamferDistance(const PointCloud& a, const PointCloud& b) {
  if (a.empty() || b.empty()) {
    throw Error(ErrorCode::kEmptyCloud, "chamfer distance needs non-empty clouds");
  }
  const KdTree3 tree_a(a.points);
  const KdTree3 tree_b(b.points);
  return MeanNearestSquared(a, tree_b) + MeanNearestSquared(b, tree_a);
}

double EarthMoversDistanceExact(const PointCloud& a, const PointCloud& b) {
  CheckEmdInputs(a, b);
  const Eigen::MatrixXd cost = DistanceMatrix(a, b);
  return AssignmentCost(cost, HungarianAssignment(cost)) / static_cast<double>(a.size());
}

double EarthMoversDistanceAuction(const PointCloud& a, const PointCloud& b) {
  CheckEmdInputs(a, b);
  const Eigen::MatrixXd cost = DistanceMatrix(a, b);
  return AssignmentCost(cost, AuctionAssignment(cost)) / static_cast<double>(a.size());
}

double EarthMoversDistance(const PointCloud& a, const PointCloud& b) {
  CheckEmdInputs(a, b);
  return a.size() <= kExactEmdLimit ? EarthMoversDistanceExact(a, b)
                                    : EarthMoversDistanceAuction(a, b);
}

double ReconstructionLoss(const PointCloud& original, const PointCloud& reconstructed,
                          double beta) {
  const double cd = ChamferDistance(original, reconstructed);
  if (beta == 0.0) return cd;
  return cd + beta * EarthMoversDistance(original, reconstructed);
}

std::array<double, kBoxFaceCount> ProjectedFaceAreas(const Bbox3& box,
                                                     const Point3& viewpoint) {
  box.Validate();
  const Point3 q = box.ToBoxFrame(viewpoint);
  const Eigen::Vector3d half = 0.5 * box.extent;
  if ((q.cwiseAbs() - half).maxCoeff() <= 0.0) {
    throw Error(ErrorCode::kInvalidViewpoint, "viewpoint lies inside the box");
  }
  const Eigen::Vector3d u = q.normalized();
  const double lx = box.extent.x(), wy = box.extent.y(), hz = box.extent.z();
  const std::array<double, 3> face_area = {wy * hz, lx * hz, lx * wy};
  std::array<double, kBoxFaceCount> out{};
  for (int axis = 0; axis < 3; ++axis) {
    if (q[axis] > half[axis]) out[2 * axis] = face_area[axis] * u[axis];
    if (q[axis] < -half[axis]) out[2 * axis + 1] = -face_area[axis] * u[axis];
  }
  return out;
}

PointCloud SampleVisibleSurface(const Bbox3& box, const Point3& viewpoint, std::size_t n,
                                std::uint64_t seed) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "sample count must be >= 1");
  const auto areas = ProjectedFaceAreas(box, viewpoint);
  std::array<double, kBoxFaceCount> cumulative{};
  double total = 0.0;
  for (int f = 0; f < kBoxFaceCount; ++f) {
    total += areas[f];
    cumulative[f] = total;
  }
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  const Eigen::Vector3d& e = box.extent;
  PointCloud out;
  out.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pick = OpenUniform(rng) * total;
    int face = 0;
    while (face < kBoxFaceCount - 1 && (areas[face] <= 0.0 || pick > cumulative[face])) ++face;
    const int axis = face / 2;
    const double sign = (face % 2 == 0) ? 0.5 : -0.5;
    Point3 q(unit(rng) * e.x(), unit(rng) * e.y(), unit(rng) * e.z());
    q[axis] = sign * e[axis];
    out.points.push_back(box.FromBoxFrame(q));
  }
  return out;
}

std::array<Bbox3, kQuadrantCount> SubspacePartition(const Bbox3& box) {
  box.Validate();
  std::array<Bbox3, kQuadrantCount> out;
  const double ql = 0.25 * box.extent.x(), qw = 0.25 * box.extent.y();
  const std::array<std::pair<double, double>, kQuadrantCount> signs = {
      {{1.0, 1.0}, {1.0, -1.0}, {-1.0, 1.0}, {-1.0, -1.0}}};
  for (int k = 0; k < kQuadrantCount; ++k) {
    out[k].center = box.FromBoxFrame(Point3(signs[k].first * ql, signs[k].second * qw, 0.0));
    out[k].extent = Eigen::Vector3d(0.5 * box.extent.x(), 0.5 * box.extent.y(), box.extent.z());
    out[k].yaw = box.yaw;
  }
  return out;
}

int QuadrantOf(const Bbox3& box, const Point3& p) {
  const Point3 q = box.ToBoxFrame(p);
  return (q.x() >= 0.0 ? 0 : 2) + (q.y() >= 0.0 ? 0 : 1);
}

namespace {

std::uint32_t ToLittleEndian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
  return v;
}

}  // namespace

void WriteCloudBinary(const PointCloud& cloud, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  for (const auto& p : cloud.points) {
    for (int axis = 0; axis < 3; ++axis) {
      const float f = static_cast<float>(p[axis]);
      const std::uint32_t le = ToLittleEndian(std::bit_cast<std::uint32_t>(f));
      out.write(reinterpret_cast<const char*>(&le), sizeof(le));
    }
  }
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path.string());
}

PointCloud ReadCloudBinary(const std::filesystem::path& path, FrameLabel frame) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % 12 != 0) {
    throw Error(ErrorCode::kParseError, path.string() + ": length is not a multiple of 12");
  }
  PointCloud cloud;
  cloud.frame = frame;
  cloud.points.reserve(bytes.size() / 12);
  for (std::size_t off = 0; off < bytes.size(); off += 12) {
    Point3 p;
    for (int axis = 0; axis < 3; ++axis) {
      std::uint32_t raw;
      std::memcpy(&raw, bytes.data() + off + 4 * axis, sizeof(raw));
      p[axis] = std::bit_cast<float>(ToLittleEndian(raw));
    }
    cloud.points.push_back(p);
  }
  cloud.Validate();
  return cloud;
}

}  // namespace coperc
