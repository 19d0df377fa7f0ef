#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "mos/labels.hpp"

namespace mos {

/// One LiDAR return. Coordinates in meters, remission is the sensor
/// intensity in [0, 1] (KITTI convention). Stored in double; scan files
/// on disk are float32.
struct Point {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double remission = 0.0;
};

/// Rigid-body transform as a homogeneous 4x4 matrix, double precision.
/// Construction validates orthonormality (1e-6), det(R) = +1 and an exact
/// (0,0,0,1) bottom row, so a Pose in hand is always usable.
class Pose {
 public:
  Pose() : matrix_(Eigen::Matrix4d::Identity()) {}

  static Pose identity() { return Pose(); }
  /// Throws std::invalid_argument if the matrix is not a rigid transform.
  static Pose from_matrix(const Eigen::Matrix4d& m);
  /// Builds from R and t without re-validation beyond the R checks.
  static Pose from_rt(const Eigen::Matrix3d& r, const Eigen::Vector3d& t);
  static Pose translation(double x, double y, double z);
  static Pose rotation_z(double yaw);
  static Pose rotation_y(double pitch);
  static Pose rotation_x(double roll);

  const Eigen::Matrix4d& matrix() const { return matrix_; }
  Eigen::Matrix3d rotation() const { return matrix_.topLeftCorner<3, 3>(); }
  Eigen::Vector3d translation_part() const { return matrix_.topRightCorner<3, 1>(); }

  Pose inverse() const;
  Pose operator*(const Pose& rhs) const;

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const;
  Point apply(const Point& p) const;

  bool approx_equal(const Pose& other, double tol = 1e-9) const;

 private:
  explicit Pose(const Eigen::Matrix4d& m) : matrix_(m) {}
  Eigen::Matrix4d matrix_;
};

/// One LiDAR revolution. labels is empty or has exactly points.size()
/// entries.
struct Scan {
  std::vector<Point> points;
  std::vector<MovingLabel> labels;
  std::int64_t frame_index = -1;

  bool has_labels() const { return !labels.empty(); }
  std::size_t size() const { return points.size(); }
  /// Throws std::invalid_argument on a label/point count mismatch or a
  /// non-finite coordinate.
  void validate() const;
};

/// Chains relative poses into T^l_k, the transform taking frame-k
/// coordinates into frame l. rel[j] maps frame j+1 into frame j, so
/// T^l_k = rel[l] * rel[l+1] * ... * rel[k-1]. Requires l <= k <= rel.size();
/// compose_relative(rel, k, k) is the identity.
/// Throws std::out_of_range on violated bounds.
Pose compose_relative(std::span<const Pose> rel, std::size_t k, std::size_t l);

/// Maps every point through T. Remission, labels and point order are
/// preserved.
Scan transform_scan(const Scan& scan, const Pose& t);

/// Converts a camera-frame pose into the LiDAR frame using the
/// camera-from-LiDAR calibration Tr: returns Tr^-1 * pose_cam * Tr.
Pose camera_to_lidar_frame(const Pose& pose_cam, const Pose& tr);

/// Adds uniform noise of magnitude units*0.1 m to x and y and units*1 deg
/// to yaw (each component drawn from the symmetric interval, seeded).
/// units = 0 returns the pose unchanged.
Pose perturb_pose(const Pose& pose, int units, std::uint64_t seed);

inline double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace mos
