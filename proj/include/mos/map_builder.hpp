#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mos/geometry.hpp"
#include "mos/labels.hpp"

namespace mos {

/// World-frame map point with provenance.
struct MapPoint {
  double x = 0.0, y = 0.0, z = 0.0;
  float remission = 0.0f;
  std::int32_t frame = -1;
  std::int32_t index = -1;
};

struct MapCloud {
  std::vector<MapPoint> points;
};

struct MapBuildResult {
  MapCloud cloud;
  std::int64_t removed_moving = 0;
};

/// Accumulates every non-moving point in the world frame. Points labeled
/// Ignore are kept: absent evidence of motion they stay in the map.
MapBuildResult build_map(std::span<const Scan> scans,
                         std::span<const Pose> poses_absolute,
                         std::span<const std::vector<MovingLabel>> labels);

/// One representative per voxel: the point nearest its voxel center, ties
/// broken by (frame, index). Output is sorted by provenance, so the result
/// is independent of input order and a second pass is a no-op.
MapCloud voxel_downsample(const MapCloud& cloud, double voxel_size);

void export_ply(const std::filesystem::path& path, const MapCloud& cloud,
                bool binary = true);

}  // namespace mos
