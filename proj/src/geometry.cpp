#include "mos/geometry.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace mos {

namespace {

void check_rigid(const Eigen::Matrix4d& m) {
  const Eigen::Matrix3d r = m.topLeftCorner<3, 3>();
  const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity())
                           .cwiseAbs()
                           .maxCoeff();
  if (ortho >= 1e-6) {
    std::ostringstream msg;
    msg << "rotation block not orthonormal (||R'R - I||_inf = " << ortho << ")";
    throw std::invalid_argument(msg.str());
  }
  if (std::abs(r.determinant() - 1.0) >= 1e-6) {
    throw std::invalid_argument("rotation block determinant is not +1");
  }
  if (m(3, 0) != 0.0 || m(3, 1) != 0.0 || m(3, 2) != 0.0 || m(3, 3) != 1.0) {
    throw std::invalid_argument("bottom row must be exactly (0, 0, 0, 1)");
  }
  if (!m.allFinite()) {
    throw std::invalid_argument("transform contains non-finite entries");
  }
}

}  // namespace

Pose Pose::from_matrix(const Eigen::Matrix4d& m) {
  check_rigid(m);
  return Pose(m);
}

Pose Pose::from_rt(const Eigen::Matrix3d& r, const Eigen::Vector3d& t) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = r;
  m.topRightCorner<3, 1>() = t;
  check_rigid(m);
  return Pose(m);
}

Pose Pose::translation(double x, double y, double z) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m(0, 3) = x;
  m(1, 3) = y;
  m(2, 3) = z;
  return Pose(m);
}

Pose Pose::rotation_z(double yaw) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() =
      Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  return Pose(m);
}

Pose Pose::rotation_y(double pitch) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() =
      Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()).toRotationMatrix();
  return Pose(m);
}

Pose Pose::rotation_x(double roll) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() =
      Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()).toRotationMatrix();
  return Pose(m);
}

Pose Pose::inverse() const {
  // Rigid structure: inv([R t; 0 1]) = [R' -R't; 0 1].
  const Eigen::Matrix3d rt = rotation().transpose();
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rt;
  m.topRightCorner<3, 1>() = -rt * translation_part();
  return Pose(m);
}

Pose Pose::operator*(const Pose& rhs) const {
  Eigen::Matrix4d m = matrix_ * rhs.matrix_;
  m.row(3) << 0.0, 0.0, 0.0, 1.0;
  return Pose(m);
}

Eigen::Vector3d Pose::apply(const Eigen::Vector3d& p) const {
  return rotation() * p + translation_part();
}

Point Pose::apply(const Point& p) const {
  const Eigen::Vector3d q = apply(Eigen::Vector3d(p.x, p.y, p.z));
  return Point{q.x(), q.y(), q.z(), p.remission};
}

bool Pose::approx_equal(const Pose& other, double tol) const {
  return (matrix_ - other.matrix_).cwiseAbs().maxCoeff() <= tol;
}

void Scan::validate() const {
  if (!labels.empty() && labels.size() != points.size()) {
    std::ostringstream msg;
    msg << "label count " << labels.size() << " does not match point count "
        << points.size();
    throw std::invalid_argument(msg.str());
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Point& p = points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z) ||
        !std::isfinite(p.remission)) {
      std::ostringstream msg;
      msg << "non-finite coordinate at point " << i;
      throw std::invalid_argument(msg.str());
    }
  }
}

Pose compose_relative(std::span<const Pose> rel, std::size_t k, std::size_t l) {
  if (l > k || k > rel.size()) {
    std::ostringstream msg;
    msg << "compose_relative: need l <= k <= " << rel.size() << ", got l=" << l
        << " k=" << k;
    throw std::out_of_range(msg.str());
  }
  Pose result;
  for (std::size_t j = l; j < k; ++j) {
    result = result * rel[j];
  }
  return result;
}

Scan transform_scan(const Scan& scan, const Pose& t) {
  Scan out;
  out.points.reserve(scan.points.size());
  const Eigen::Matrix3d r = t.rotation();
  const Eigen::Vector3d tr = t.translation_part();
  for (const Point& p : scan.points) {
    const Eigen::Vector3d q = r * Eigen::Vector3d(p.x, p.y, p.z) + tr;
    out.points.push_back(Point{q.x(), q.y(), q.z(), p.remission});
  }
  out.labels = scan.labels;
  out.frame_index = scan.frame_index;
  return out;
}

Pose camera_to_lidar_frame(const Pose& pose_cam, const Pose& tr) {
  return tr.inverse() * pose_cam * tr;
}

Pose perturb_pose(const Pose& pose, int units, std::uint64_t seed) {
  if (units < 0) {
    throw std::invalid_argument("perturb_pose: units must be >= 0");
  }
  if (units == 0) {
    return pose;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double dx = unit(rng) * units * 0.1;
  const double dy = unit(rng) * units * 0.1;
  const double dyaw = unit(rng) * units * deg2rad(1.0);

  Eigen::Matrix4d m = pose.matrix();
  m.topLeftCorner<3, 3>() =
      Eigen::AngleAxisd(dyaw, Eigen::Vector3d::UnitZ()).toRotationMatrix() *
      m.topLeftCorner<3, 3>();
  m(0, 3) += dx;
  m(1, 3) += dy;
  return Pose::from_matrix(m);
}

}  // namespace mos
