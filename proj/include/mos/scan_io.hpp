#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mos/geometry.hpp"
#include "mos/labels.hpp"

namespace mos {

/// Maps raw SemanticKITTI semantic ids onto {moving, static, ignore} and
/// pins the output codes the prediction writer uses. The built-in table
/// follows the dataset's class map: ids 252-259 (and the 251 aggregate)
/// are moving, 0/1 are ignore, everything else is static.
class ClassMap {
 public:
  static ClassMap semantic_kitti();
  /// Text format: one "<id> <moving|static|ignore>" per line, plus optional
  /// "output_moving <id>" / "output_static <id>" directives. '#' comments.
  static ClassMap load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  MovingLabel classify(std::uint32_t semantic_id) const;
  std::uint32_t output_code(MovingLabel label) const;

  std::uint32_t output_moving = 251;
  std::uint32_t output_static = 9;
  std::unordered_map<std::uint32_t, MovingLabel> entries;
};

/// Reads a KITTI velodyne .bin file: little-endian float32 (x, y, z, e)
/// quadruples. Throws std::runtime_error on a size not divisible by 16
/// (reporting the byte offset) and std::invalid_argument on non-finite
/// coordinates (reporting the point index).
Scan read_scan_bin(const std::filesystem::path& path);

/// Writes the same format; doubles are narrowed to float32.
void write_scan_bin(const std::filesystem::path& path, const Scan& scan);

/// Reads a .label file (little-endian uint32 per point, lower 16 bits
/// semantic id) and maps ids through the class map. File size must be
/// exactly 4 * point_count bytes.
std::vector<MovingLabel> read_semantic_labels(const std::filesystem::path& path,
                                              std::size_t point_count,
                                              const ClassMap& map);

/// Writes per-point predictions using the class map's output codes.
/// Ignore is never emitted; it is written as the static code.
void write_prediction_labels(const std::filesystem::path& path,
                             std::span<const MovingLabel> labels,
                             const ClassMap& map);

/// Parses the "Tr:" camera-from-LiDAR row of a KITTI calib.txt.
Pose read_calib_tr(const std::filesystem::path& calib_path);

/// Reads poses.txt (12 floats per line, row-major 3x4, camera frame) and
/// conjugates every pose into the LiDAR frame via the calib Tr.
std::vector<Pose> read_poses(const std::filesystem::path& poses_path,
                             const std::filesystem::path& calib_path);

/// Writes poses.txt rows from LiDAR-frame poses, assuming Tr = identity.
void write_poses(const std::filesystem::path& path, std::span<const Pose> poses);
void write_calib_identity(const std::filesystem::path& path);

/// One dataset sequence: scan file list plus poses, lazily streamed.
struct DatasetSequence {
  std::string id;
  std::filesystem::path root;  // <dataset>/sequences/<id>
  std::vector<std::filesystem::path> scan_files;
  std::vector<Pose> poses_absolute;  // LiDAR frame
  std::vector<Pose> poses_relative;  // rel[i] maps frame i+1 into frame i
  bool has_labels = false;

  std::size_t size() const { return scan_files.size(); }
  std::filesystem::path label_file(std::size_t frame) const;
  Scan read_scan(std::size_t frame) const;
  std::vector<MovingLabel> read_labels(std::size_t frame,
                                       const ClassMap& map) const;
};

/// Loads sequence metadata from <dataset_root>/sequences/<id>. Fails
/// loudly when the pose count does not match the scan count or any scan
/// file size is not divisible by 16.
DatasetSequence load_sequence(const std::filesystem::path& dataset_root,
                              const std::string& id);

}  // namespace mos
