#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mos/projection.hpp"
#include "mos/scan_io.hpp"

namespace mos {

/// Axis-aligned rectangle. axis is the normal (0 x, 1 y, 2 z); the extents
/// cover the remaining axes in ascending order (axis 0 -> y,z; axis 1 ->
/// x,z; axis 2 -> x,y).
struct PlaneSpec {
  int axis = 0;
  double offset = 0.0;
  double lo1 = 0.0, hi1 = 0.0;
  double lo2 = 0.0, hi2 = 0.0;
  double remission = 0.5;
};

/// Axis-aligned box translating at constant velocity (meters per frame).
struct BoxSpec {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();  // at frame 0
  Eigen::Vector3d half = Eigen::Vector3d::Ones();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  double remission = 0.5;

  bool is_moving() const { return velocity.squaredNorm() > 0.0; }
};

struct SceneSpec {
  ProjectionConfig proj;
  std::vector<PlaneSpec> planes;
  std::vector<BoxSpec> boxes;
  std::vector<Pose> sensor_poses;  // absolute, LiDAR frame, one per frame
  double max_range = 120.0;

  int frames() const { return int(sensor_poses.size()); }
  void validate() const;
};

/// Casts one ray per pixel center (the exact inverse of the projection
/// mapping) from the frame's sensor pose and keeps the nearest hit within
/// max_range. Points are in the sensor frame, ordered row-major by pixel;
/// labels are Moving for boxes with nonzero velocity, Static otherwise.
Scan render_frame(const SceneSpec& scene, int frame);
std::vector<Scan> render_sequence(const SceneSpec& scene);

std::vector<std::string> preset_names();

/// Presets: static-room, convex-room, approach, crossing-box,
/// busy-intersection. The seed only matters where a preset randomizes
/// object placement. Throws std::invalid_argument on an unknown name.
SceneSpec make_preset(const std::string& name, std::uint64_t seed);

/// Writes sequences/<id>/{velodyne,labels,poses.txt,calib.txt} under
/// dataset_root, using the map's output codes for the labels.
void write_sequence(const std::filesystem::path& dataset_root,
                    const std::string& id, const SceneSpec& scene,
                    std::span<const Scan> frames, const ClassMap& map);

}  // namespace mos
