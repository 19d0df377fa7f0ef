#include "mos/map_builder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace mos {

MapBuildResult build_map(std::span<const Scan> scans,
                         std::span<const Pose> poses_absolute,
                         std::span<const std::vector<MovingLabel>> labels) {
  if (scans.size() != poses_absolute.size() || scans.size() != labels.size())
    throw std::invalid_argument("build_map: " + std::to_string(scans.size()) +
                                " scans, " + std::to_string(poses_absolute.size()) +
                                " poses, " + std::to_string(labels.size()) +
                                " label sets");
  MapBuildResult result;
  for (std::size_t f = 0; f < scans.size(); ++f) {
    const Scan& scan = scans[f];
    if (labels[f].size() != scan.size())
      throw std::invalid_argument("build_map: frame " + std::to_string(f) + " has " +
                                  std::to_string(labels[f].size()) + " labels for " +
                                  std::to_string(scan.size()) + " points");
    const Pose& pose = poses_absolute[f];
    for (std::size_t i = 0; i < scan.size(); ++i) {
      if (labels[f][i] == MovingLabel::Moving) {
        ++result.removed_moving;
        continue;
      }
      const Point& p = scan.points[i];
      const Eigen::Vector3d world = pose.apply(Eigen::Vector3d(p.x, p.y, p.z));
      result.cloud.points.push_back({world.x(), world.y(), world.z(),
                                     float(p.remission), std::int32_t(f),
                                     std::int32_t(i)});
    }
  }
  return result;
}

namespace {

struct VoxelKey {
  std::int64_t x, y, z;
  bool operator==(const VoxelKey&) const = default;
};

struct VoxelHash {
  std::size_t operator()(const VoxelKey& k) const {
    std::size_t h = std::size_t(k.x) * 0x9E3779B97F4A7C15ull;
    h ^= std::size_t(k.y) * 0xC2B2AE3D27D4EB4Full + (h << 6);
    h ^= std::size_t(k.z) * 0x165667B19E3779F9ull + (h >> 3);
    return h;
  }
};

}  // namespace

MapCloud voxel_downsample(const MapCloud& cloud, double voxel_size) {
  if (!(voxel_size > 0.0))
    throw std::invalid_argument("voxel_downsample: voxel size must be > 0");

  struct Best {
    double dist2;
    std::size_t point;
  };
  std::unordered_map<VoxelKey, Best, VoxelHash> best;
  best.reserve(cloud.points.size());

  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const MapPoint& p = cloud.points[i];
    const VoxelKey key{std::int64_t(std::floor(p.x / voxel_size)),
                       std::int64_t(std::floor(p.y / voxel_size)),
                       std::int64_t(std::floor(p.z / voxel_size))};
    const double cx = (double(key.x) + 0.5) * voxel_size;
    const double cy = (double(key.y) + 0.5) * voxel_size;
    const double cz = (double(key.z) + 0.5) * voxel_size;
    const double d2 = (p.x - cx) * (p.x - cx) + (p.y - cy) * (p.y - cy) +
                      (p.z - cz) * (p.z - cz);
    auto [it, inserted] = best.try_emplace(key, Best{d2, i});
    if (inserted) continue;
    const MapPoint& q = cloud.points[it->second.point];
    if (d2 < it->second.dist2 ||
        (d2 == it->second.dist2 &&
         std::pair(p.frame, p.index) < std::pair(q.frame, q.index)))
      it->second = {d2, i};
  }

  MapCloud out;
  out.points.reserve(best.size());
  for (const auto& [key, b] : best) out.points.push_back(cloud.points[b.point]);
  std::sort(out.points.begin(), out.points.end(),
            [](const MapPoint& a, const MapPoint& b) {
              return std::pair(a.frame, a.index) < std::pair(b.frame, b.index);
            });
  return out;
}

void export_ply(const std::filesystem::path& path, const MapCloud& cloud,
                bool binary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("export_ply: cannot open " + path.string());

  out << "ply\n";
  out << (binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n");
  out << "element vertex " << cloud.points.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  out << "property float remission\n";
  out << "end_header\n";

  if (binary) {
    for (const MapPoint& p : cloud.points) {
      const float row[4] = {float(p.x), float(p.y), float(p.z), p.remission};
      out.write(reinterpret_cast<const char*>(row), sizeof(row));
    }
  } else {
    out << std::setprecision(9);
    for (const MapPoint& p : cloud.points)
      out << float(p.x) << ' ' << float(p.y) << ' ' << float(p.z) << ' '
          << p.remission << '\n';
  }
  if (!out) throw std::runtime_error("export_ply: write failed for " + path.string());
}

}  // namespace mos
