#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mos/execution.hpp"
#include "mos/geometry.hpp"
#include "mos/grid.hpp"
#include "mos/labels.hpp"

namespace mos {

/// Spherical projection geometry. fov_up/fov_down are positive magnitudes
/// in radians; the sensor sees elevations in [-fov_down, +fov_up].
struct ProjectionConfig {
  int height = 64;
  int width = 2048;
  double fov_up = deg2rad(3.0);
  double fov_down = deg2rad(25.0);

  double fov() const { return fov_up + fov_down; }
  void validate() const;  // throws std::invalid_argument
  bool operator==(const ProjectionConfig&) const = default;
};

/// Pixel assignment for one retained point.
struct PointPixel {
  std::int32_t point = -1;
  std::int32_t u = 0;
  std::int32_t v = 0;
};

struct ProjectionStats {
  std::int64_t dropped_zero_range = 0;
  std::int64_t dropped_out_of_fov = 0;
};

/// Range image: per pixel the winning point's range, coordinates,
/// remission and source index. Invalid pixels hold range -1 and index -1;
/// a pixel is valid iff range > 0.
struct RangeImage {
  ProjectionConfig cfg;
  Grid<float> range;
  Grid<float> x, y, z, remission;
  Grid<std::int32_t> index;

  bool valid(int v, int u) const { return range(v, u) > 0.0f; }
};

struct Projection {
  RangeImage image;
  std::vector<PointPixel> point_pixels;  // ascending point index
  ProjectionStats stats;
};

/// Projects a scan through the spherical model: u = (1/2)(1 - yaw/pi) w,
/// v = (1 - (pitch + fov_down)/fov) h, floored then clamped. Points with
/// zero range or elevation outside [-fov_down, fov_up] are dropped and
/// counted. On a pixel collision the point with the smaller range wins,
/// ties broken by the smaller point index, so serial and parallel paths
/// agree bitwise.
Projection project_scan(const Scan& scan, const ProjectionConfig& cfg,
                        Exec exec = Exec::Parallel);

/// Continuous image coordinates of a direction, before floor/clamp.
/// Exposed so the synthesizer can invert the exact same mapping.
void project_angles(double yaw, double pitch, const ProjectionConfig& cfg,
                    double& u, double& v);

/// Transfers a per-pixel label grid back to points: each retained point
/// receives its pixel's label, dropped points receive Ignore.
std::vector<MovingLabel> unproject_labels(const Grid<MovingLabel>& image_labels,
                                          std::span<const PointPixel> point_pixels,
                                          std::size_t point_count);

struct KnnParams {
  int k = 5;
  int window = 5;       // odd
  double cutoff = 1.0;  // meters
  void validate() const;
};

/// Range-image accelerated kNN label vote. For each retained point the
/// candidates are itself plus the stored points of the other valid pixels
/// in the window around its pixel (azimuth wraps); candidates farther than
/// cutoff in |delta range| are discarded, the k nearest by |delta range|
/// vote, and a tie keeps the point's raw label. Dropped points keep their
/// raw label.
std::vector<MovingLabel> knn_clean(const Scan& scan,
                                   std::span<const PointPixel> point_pixels,
                                   const RangeImage& image,
                                   std::span<const MovingLabel> raw_labels,
                                   const KnnParams& params,
                                   Exec exec = Exec::Parallel);

/// Debug dump: one text line "h w channels\n" followed by channel-planar
/// row-major little-endian float32 planes.
void dump_planar(const std::filesystem::path& path,
                 const std::vector<const Grid<float>*>& planes);
void dump_range_image(const std::filesystem::path& path, const RangeImage& img);

}  // namespace mos
