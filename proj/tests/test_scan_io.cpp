#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>

#include "doctest.h"
#include "mos/scan_io.hpp"

using namespace mos;
namespace fs = std::filesystem;

namespace {

fs::path test_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mos_scan_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Scan random_scan(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> coord(-80.0f, 80.0f);
  std::uniform_real_distribution<float> rem(0.0f, 1.0f);
  Scan scan;
  for (std::size_t i = 0; i < n; ++i)
    scan.points.push_back({double(coord(rng)), double(coord(rng)),
                           double(coord(rng)), double(rem(rng))});
  return scan;
}

}  // namespace

TEST_CASE("scan bin files round-trip through float32") {
  const fs::path dir = test_dir("bin");
  const Scan scan = random_scan(1000, 3);
  write_scan_bin(dir / "scan.bin", scan);

  CHECK(fs::file_size(dir / "scan.bin") == 1000 * 16);
  const Scan back = read_scan_bin(dir / "scan.bin");
  REQUIRE(back.size() == scan.size());
  for (std::size_t i = 0; i < scan.size(); ++i) {
    CHECK(back.points[i].x == double(float(scan.points[i].x)));
    CHECK(back.points[i].y == double(float(scan.points[i].y)));
    CHECK(back.points[i].z == double(float(scan.points[i].z)));
    CHECK(back.points[i].remission == double(float(scan.points[i].remission)));
  }
}

TEST_CASE("scan bin reader reports bad sizes and bad values") {
  const fs::path dir = test_dir("badbin");
  {
    std::ofstream out(dir / "short.bin", std::ios::binary);
    const char junk[10] = {};
    out.write(junk, sizeof(junk));
  }
  CHECK_THROWS_AS(read_scan_bin(dir / "short.bin"), std::runtime_error);
  CHECK_THROWS_AS(read_scan_bin(dir / "missing.bin"), std::runtime_error);

  {
    std::ofstream out(dir / "nan.bin", std::ios::binary);
    const float vals[4] = {std::numeric_limits<float>::quiet_NaN(), 0, 0, 0};
    out.write(reinterpret_cast<const char*>(vals), sizeof(vals));
  }
  CHECK_THROWS_AS(read_scan_bin(dir / "nan.bin"), std::invalid_argument);
}

TEST_CASE("semantic label read masks the instance bits") {
  const fs::path dir = test_dir("labels");
  const std::uint32_t raw[] = {
      252u | (7u << 16),  // moving car with instance id
      9u,                 // road
      0u,                 // unlabeled
      251u,               // moving aggregate
      40u | (1u << 16),   // static with instance id
  };
  {
    std::ofstream out(dir / "f.label", std::ios::binary);
    out.write(reinterpret_cast<const char*>(raw), sizeof(raw));
  }
  const ClassMap map = ClassMap::semantic_kitti();
  const std::vector<MovingLabel> labels = read_semantic_labels(dir / "f.label", 5, map);
  CHECK(labels == std::vector<MovingLabel>{MovingLabel::Moving, MovingLabel::Static,
                                           MovingLabel::Ignore, MovingLabel::Moving,
                                           MovingLabel::Static});

  CHECK_THROWS_AS(read_semantic_labels(dir / "f.label", 4, map),
                  std::runtime_error);
}

TEST_CASE("prediction writer uses output codes and never emits ignore") {
  const fs::path dir = test_dir("pred");
  const ClassMap map = ClassMap::semantic_kitti();
  const std::vector<MovingLabel> labels = {MovingLabel::Moving, MovingLabel::Static,
                                           MovingLabel::Ignore};
  write_prediction_labels(dir / "p.label", labels, map);

  std::ifstream in(dir / "p.label", std::ios::binary);
  std::uint32_t raw[3];
  in.read(reinterpret_cast<char*>(raw), sizeof(raw));
  REQUIRE(bool(in));
  CHECK(raw[0] == 251u);
  CHECK(raw[1] == 9u);
  CHECK(raw[2] == 9u);

  const std::vector<MovingLabel> back = read_semantic_labels(dir / "p.label", 3, map);
  CHECK(back[0] == MovingLabel::Moving);
  CHECK(back[1] == MovingLabel::Static);
  CHECK(back[2] == MovingLabel::Static);
}

TEST_CASE("class map files round-trip") {
  const fs::path dir = test_dir("classmap");
  ClassMap map;
  map.entries[10] = MovingLabel::Moving;
  map.entries[11] = MovingLabel::Ignore;
  map.output_moving = 77;
  map.output_static = 3;
  map.save(dir / "map.txt");

  const ClassMap back = ClassMap::load(dir / "map.txt");
  CHECK(back.output_moving == 77);
  CHECK(back.output_static == 3);
  CHECK(back.classify(10) == MovingLabel::Moving);
  CHECK(back.classify(11) == MovingLabel::Ignore);
  CHECK(back.classify(12) == MovingLabel::Static);

  {
    std::ofstream out(dir / "bad.txt");
    out << "10 jogging\n";
  }
  CHECK_THROWS_AS(ClassMap::load(dir / "bad.txt"), std::runtime_error);
}

TEST_CASE("poses round-trip exactly and conjugate through the calib") {
  const fs::path dir = test_dir("poses");
  std::vector<Pose> poses;
  poses.push_back(Pose::identity());
  poses.push_back(Pose::from_rt(
      Eigen::AngleAxisd(0.3, Eigen::Vector3d::UnitZ()).toRotationMatrix(),
      Eigen::Vector3d(1.5, -2.25, 0.125)));
  poses.push_back(poses[1] * poses[1]);

  write_poses(dir / "poses.txt", poses);
  write_calib_identity(dir / "calib.txt");
  const std::vector<Pose> back = read_poses(dir / "poses.txt", dir / "calib.txt");
  REQUIRE(back.size() == poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i)
    CHECK(back[i].matrix() == poses[i].matrix());  // %.17g round-trips doubles

  // a real calib conjugates: written poses are camera-frame
  const Pose tr = Pose::from_rt(
      Eigen::AngleAxisd(-0.5 * std::numbers::pi, Eigen::Vector3d::UnitX())
          .toRotationMatrix(),
      Eigen::Vector3d(0.1, 0.0, -0.05));
  {
    std::ofstream out(dir / "calib2.txt");
    out << "P0: 1 0 0 0 0 1 0 0 0 0 1 0\nTr:";
    out << std::setprecision(17);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) out << ' ' << tr.matrix()(r, c);
    out << "\n";
  }
  const std::vector<Pose> lidar = read_poses(dir / "poses.txt", dir / "calib2.txt");
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const Eigen::Matrix4d oracle =
        tr.matrix().inverse() * poses[i].matrix() * tr.matrix();
    CHECK(lidar[i].matrix().isApprox(oracle, 1e-9));
  }
}

TEST_CASE("load_sequence wires files, poses and labels together") {
  const fs::path dir = test_dir("seq");
  const fs::path seq = dir / "sequences" / "00";
  fs::create_directories(seq / "velodyne");
  fs::create_directories(seq / "labels");

  const ClassMap map = ClassMap::semantic_kitti();
  std::vector<Pose> poses;
  for (int f = 0; f < 3; ++f) {
    const Scan scan = random_scan(50 + f, 100 + std::uint64_t(f));
    char name[16];
    std::snprintf(name, sizeof(name), "%06d", f);
    write_scan_bin(seq / "velodyne" / (std::string(name) + ".bin"), scan);
    std::vector<MovingLabel> labels(scan.size(), MovingLabel::Static);
    labels[0] = MovingLabel::Moving;
    write_prediction_labels(seq / "labels" / (std::string(name) + ".label"),
                            labels, map);
    poses.push_back(Pose::translation(double(f), 0, 0));
  }
  write_poses(seq / "poses.txt", poses);
  write_calib_identity(seq / "calib.txt");

  const DatasetSequence loaded = load_sequence(dir, "00");
  CHECK(loaded.size() == 3);
  CHECK(loaded.has_labels);
  REQUIRE(loaded.poses_relative.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    const Eigen::Matrix4d oracle =
        poses[i].matrix().inverse() * poses[i + 1].matrix();
    CHECK(loaded.poses_relative[i].matrix().isApprox(oracle, 1e-12));
  }
  const Scan scan1 = loaded.read_scan(1);
  CHECK(scan1.size() == 51);
  CHECK(scan1.frame_index == 1);
  const std::vector<MovingLabel> labels1 = loaded.read_labels(1, map);
  CHECK(labels1.size() == 51);
  CHECK(labels1[0] == MovingLabel::Moving);

  // pose count mismatch must fail loudly
  poses.push_back(Pose::identity());
  write_poses(seq / "poses.txt", poses);
  CHECK_THROWS_AS(load_sequence(dir, "00"), std::runtime_error);
}
