#include <random>

#include "doctest.h"
#include "mos/geometry.hpp"

using namespace mos;

namespace {

Pose random_pose(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(-3.0, 3.0);
  std::uniform_real_distribution<double> shift(-10.0, 10.0);
  const Eigen::Matrix3d r =
      (Eigen::AngleAxisd(angle(rng), Eigen::Vector3d::UnitZ()) *
       Eigen::AngleAxisd(angle(rng), Eigen::Vector3d::UnitY()) *
       Eigen::AngleAxisd(angle(rng), Eigen::Vector3d::UnitX()))
          .toRotationMatrix();
  return Pose::from_rt(r, Eigen::Vector3d(shift(rng), shift(rng), shift(rng)));
}

}  // namespace

TEST_CASE("pose composition matches the homogeneous matrix product") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const Pose a = random_pose(rng);
    const Pose b = random_pose(rng);
    const Eigen::Matrix4d oracle = a.matrix() * b.matrix();
    CHECK((a * b).matrix().isApprox(oracle, 1e-12));
  }
}

TEST_CASE("pose inverse against the matrix inverse") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 200; ++i) {
    const Pose p = random_pose(rng);
    const Eigen::Matrix4d oracle = p.matrix().inverse();
    CHECK(p.inverse().matrix().isApprox(oracle, 1e-9));
    CHECK((p * p.inverse()).approx_equal(Pose::identity(), 1e-9));
  }
}

TEST_CASE("apply matches direct matrix-vector arithmetic") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> coord(-50.0, 50.0);
  for (int i = 0; i < 100; ++i) {
    const Pose p = random_pose(rng);
    const Eigen::Vector3d v(coord(rng), coord(rng), coord(rng));
    const Eigen::Vector4d h = p.matrix() * Eigen::Vector4d(v.x(), v.y(), v.z(), 1.0);
    CHECK(p.apply(v).isApprox(h.head<3>(), 1e-12));
  }
}

TEST_CASE("from_matrix rejects non-rigid input") {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m(0, 0) = 2.0;
  CHECK_THROWS_AS(Pose::from_matrix(m), std::invalid_argument);

  m = Eigen::Matrix4d::Identity();
  m(3, 0) = 0.5;
  CHECK_THROWS_AS(Pose::from_matrix(m), std::invalid_argument);

  // reflection: orthonormal but det -1
  m = Eigen::Matrix4d::Identity();
  m(0, 0) = -1.0;
  CHECK_THROWS_AS(Pose::from_matrix(m), std::invalid_argument);
}

TEST_CASE("compose_relative equals the absolute-pose oracle") {
  std::mt19937_64 rng(10);
  std::vector<Pose> abs;
  abs.push_back(Pose::identity());
  for (int i = 0; i < 8; ++i) abs.push_back(abs.back() * random_pose(rng));

  std::vector<Pose> rel;  // rel[i] maps frame i+1 into frame i
  for (std::size_t i = 0; i + 1 < abs.size(); ++i)
    rel.push_back(abs[i].inverse() * abs[i + 1]);

  for (std::size_t k = 0; k < abs.size(); ++k) {
    for (std::size_t l = 0; l <= k; ++l) {
      const Eigen::Matrix4d oracle = abs[l].matrix().inverse() * abs[k].matrix();
      CHECK(compose_relative(rel, k, l).matrix().isApprox(oracle, 1e-9));
    }
  }
  CHECK_THROWS_AS(compose_relative(rel, 3, 5), std::out_of_range);
  CHECK_THROWS_AS(compose_relative(rel, rel.size() + 1, 0), std::out_of_range);
}

TEST_CASE("transform_scan maps every point and keeps metadata") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> coord(-20.0, 20.0);
  Scan scan;
  for (int i = 0; i < 500; ++i) {
    scan.points.push_back({coord(rng), coord(rng), coord(rng), 0.25});
    scan.labels.push_back(i % 3 == 0 ? MovingLabel::Moving : MovingLabel::Static);
  }
  scan.frame_index = 42;

  const Pose t = random_pose(rng);
  const Scan moved = transform_scan(scan, t);
  REQUIRE(moved.size() == scan.size());
  CHECK(moved.labels == scan.labels);
  CHECK(moved.frame_index == 42);
  for (std::size_t i = 0; i < scan.size(); ++i) {
    const Point& p = scan.points[i];
    const Eigen::Vector3d q = t.apply(Eigen::Vector3d(p.x, p.y, p.z));
    CHECK(moved.points[i].x == doctest::Approx(q.x()).epsilon(1e-12));
    CHECK(moved.points[i].y == doctest::Approx(q.y()).epsilon(1e-12));
    CHECK(moved.points[i].z == doctest::Approx(q.z()).epsilon(1e-12));
    CHECK(moved.points[i].remission == p.remission);
  }
}

TEST_CASE("camera_to_lidar_frame conjugates by the calibration") {
  std::mt19937_64 rng(12);
  const Pose cam = random_pose(rng);
  const Pose tr = random_pose(rng);
  const Eigen::Matrix4d oracle =
      tr.matrix().inverse() * cam.matrix() * tr.matrix();
  CHECK(camera_to_lidar_frame(cam, tr).matrix().isApprox(oracle, 1e-9));
}

TEST_CASE("perturb_pose is seeded, bounded and identity at zero units") {
  const Pose base = Pose::from_rt(
      Eigen::AngleAxisd(0.4, Eigen::Vector3d::UnitZ()).toRotationMatrix(),
      Eigen::Vector3d(1.0, 2.0, 3.0));

  CHECK(perturb_pose(base, 0, 99).matrix() == base.matrix());
  CHECK(perturb_pose(base, 5, 99).matrix() ==
        perturb_pose(base, 5, 99).matrix());
  CHECK_FALSE(perturb_pose(base, 5, 99).matrix().isApprox(
      perturb_pose(base, 5, 100).matrix(), 1e-12));
  CHECK_THROWS_AS(perturb_pose(base, -1, 0), std::invalid_argument);

  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Pose noisy = perturb_pose(base, 3, seed);
    const Eigen::Vector3d dt = noisy.translation_part() - base.translation_part();
    CHECK(std::abs(dt.x()) <= 3 * 0.1 + 1e-12);
    CHECK(std::abs(dt.y()) <= 3 * 0.1 + 1e-12);
    CHECK(dt.z() == 0.0);
    const Eigen::Matrix3d dr = noisy.rotation() * base.rotation().transpose();
    const double dyaw = std::atan2(dr(1, 0), dr(0, 0));
    CHECK(std::abs(dyaw) <= deg2rad(3.0) + 1e-12);
  }
}

TEST_CASE("scan validate flags bad label counts and non-finite points") {
  Scan scan;
  scan.points.push_back({1.0, 2.0, 3.0, 0.0});
  scan.validate();

  scan.labels.push_back(MovingLabel::Static);
  scan.labels.push_back(MovingLabel::Moving);
  CHECK_THROWS_AS(scan.validate(), std::invalid_argument);

  scan.labels.pop_back();
  scan.points.push_back({std::numeric_limits<double>::quiet_NaN(), 0, 0, 0});
  scan.labels.push_back(MovingLabel::Static);
  CHECK_THROWS_AS(scan.validate(), std::invalid_argument);
}
