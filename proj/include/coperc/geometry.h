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
#include <filesystem>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace coperc {

using Point3 = Eigen::Vector3d;

// Which coordinate system a cloud's points live in.
struct FrameLabel {
  enum class Kind { kLocal, kGlobal };
  Kind kind = Kind::kGlobal;
  int cav_id = -1;  // only meaningful for kLocal

  static FrameLabel Global() { return {Kind::kGlobal, -1}; }
  static FrameLabel Local(int cav_id) { return {Kind::kLocal, cav_id}; }
  bool operator==(const FrameLabel&) const = default;
};

struct PointCloud {
  std::vector<Point3> points;
  FrameLabel frame = FrameLabel::Global();

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  Point3 Centroid() const;
  // Throws kInvalidArgument if any coordinate is not finite.
  void Validate() const;
};

// Oriented box; yaw rotates the length axis away from +x about +z.
struct Bbox3 {
  Point3 center = Point3::Zero();
  Eigen::Vector3d extent = Eigen::Vector3d::Ones();  // length, width, height
  double yaw = 0.0;

  double Volume() const { return extent.prod(); }
  // Expresses a global point in the box frame (origin at center).
  Point3 ToBoxFrame(const Point3& p) const;
  Point3 FromBoxFrame(const Point3& q) const;
  bool Contains(const Point3& p, double tol = 0.0) const;
  void Validate() const;
};

// Wraps an angle into [-pi, pi).
double WrapAngle(double a);

struct Pose {
  Point3 position = Point3::Zero();
  double pitch = 0.0;
  double roll = 0.0;
  double yaw = 0.0;
};

// Rigid local-to-global transform applied to column vectors.
class TransformMatrix {
 public:
  TransformMatrix() : m_(Eigen::Matrix4d::Identity()) {}
  // Throws kInvalidArgument unless `m` is rigid within `tol`.
  explicit TransformMatrix(const Eigen::Matrix4d& m, double tol = 1e-9);

  const Eigen::Matrix4d& matrix() const { return m_; }
  Eigen::Matrix3d Rotation() const { return m_.topLeftCorner<3, 3>(); }
  Eigen::Vector3d Translation() const { return m_.topRightCorner<3, 1>(); }
  TransformMatrix Inverse() const;
  Point3 Apply(const Point3& p) const {
    return m_.topLeftCorner<3, 3>() * p + m_.topRightCorner<3, 1>();
  }

  static bool IsRigid(const Eigen::Matrix4d& m, double tol = 1e-9);

 private:
  Eigen::Matrix4d m_;
};

TransformMatrix BuildTransform(const Pose& pose);
Point3 ToGlobal(const Point3& p_local, const TransformMatrix& t);
// Inverse map of ToGlobal for the same transform.
Point3 ToLocal(const Point3& p_global, const TransformMatrix& t);
PointCloud ToGlobal(const PointCloud& cloud, const TransformMatrix& t);

// Farthest-point sampling seeded at the point nearest the centroid. Returns
// indices into `points`; ties resolve to the lowest index.
std::vector<std::size_t> FarthestPointIndices(const std::vector<Point3>& points,
                                              std::size_t count);

// Exactly n points: a farthest-point subset when the cloud has at least n
// points, otherwise the input repeated cyclically.
PointCloud Resample(const PointCloud& cloud, std::size_t n);

// Sum of both directional mean squared nearest-neighbor distances.
double ChamferDistance(const PointCloud& a, const PointCloud& b);

// Clouds up to this size get an exact assignment; larger ones use the
// epsilon-scaled auction solver.
inline constexpr std::size_t kExactEmdLimit = 256;

// Mean Euclidean distance under the optimal bijection.
double EarthMoversDistance(const PointCloud& a, const PointCloud& b);
double EarthMoversDistanceExact(const PointCloud& a, const PointCloud& b);
double EarthMoversDistanceAuction(const PointCloud& a, const PointCloud& b);

inline constexpr double kDefaultLossBeta = 1e-4;

// CD + beta * EMD.
double ReconstructionLoss(const PointCloud& original,
                          const PointCloud& reconstructed,
                          double beta = kDefaultLossBeta);

// Face order used throughout: +x, -x, +y, -y, +z, -z in the box frame.
inline constexpr int kBoxFaceCount = 6;

// Orthographic projected area of each box face as seen from `viewpoint`
// (zero for faces turned away). Throws kInvalidViewpoint when the
// viewpoint is inside or on the box.
std::array<double, kBoxFaceCount> ProjectedFaceAreas(const Bbox3& box,
                                                     const Point3& viewpoint);

// Points drawn uniformly on the viewer-facing faces, the face chosen per
// point with probability proportional to its projected area.
PointCloud SampleVisibleSurface(const Bbox3& box, const Point3& viewpoint,
                                std::size_t n, std::uint64_t seed);

// Quadrant order: (+l,+w), (+l,-w), (-l,+w), (-l,-w).
inline constexpr int kQuadrantCount = 4;
std::array<Bbox3, kQuadrantCount> SubspacePartition(const Bbox3& box);
int QuadrantOf(const Bbox3& box, const Point3& p);

// Little-endian float32 xyz triplets, no header.
void WriteCloudBinary(const PointCloud& cloud,
                      const std::filesystem::path& path);
PointCloud ReadCloudBinary(const std::filesystem::path& path,
                           FrameLabel frame = FrameLabel::Global());

}  // namespace coperc
