#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mos/projection.hpp"

namespace mos {

/// Transforms a past scan into the current frame and projects it,
/// returning the resulting range image ranges (-1 where empty).
Grid<float> reproject_ranges(const Scan& past, const Pose& t_current_from_past,
                             const ProjectionConfig& cfg, Exec exec = Exec::Parallel);

/// Normalized range residual: |r_cur - r_past| / r_cur where both pixels
/// are valid (> 0), zero elsewhere.
Grid<float> gen_residual(const Grid<float>& current_ranges,
                         const Grid<float>& past_ranges);

/// N residual channels for one frame, newest history first. Channels past
/// the available history are all-zero and their past_ranges all-invalid.
struct ResidualStack {
  int n = 0;
  std::vector<Grid<float>> channels;
  std::vector<Grid<float>> past_ranges;
};

ResidualStack build_stack(const Grid<float>& current_ranges,
                          std::span<const Scan> history,
                          std::span<const Pose> t_current_from_past, int n,
                          const ProjectionConfig& cfg, Exec exec = Exec::Parallel);

/// Per-channel affine normalization for the fused input.
struct NormalizationSpec {
  std::vector<double> mean;
  std::vector<double> scale;

  int channels() const { return int(mean.size()); }
  void validate() const;
  bool operator==(const NormalizationSpec&) const = default;
};

NormalizationSpec identity_normalization(int channels);

/// Accumulates mean / standard deviation of each fused channel over the
/// valid pixels of the frames it is fed.
class NormalizationEstimator {
 public:
  explicit NormalizationEstimator(int n_residual);
  void add(const RangeImage& image, const ResidualStack& stack);
  NormalizationSpec finalize() const;  // throws if nothing was added

 private:
  int n_;
  std::vector<double> sum_, sum_sq_;
  std::int64_t count_ = 0;
};

/// Fused classifier input: channels x, y, z, range, remission, d1..dN,
/// each mapped through (value - mean) / scale. Invalid pixels contribute
/// raw zeros before normalization.
struct FusedInput {
  ProjectionConfig cfg;
  int n = 0;
  NormalizationSpec norm;
  std::vector<Grid<float>> channels;  // 5 + n
  Grid<std::uint8_t> valid;
};

FusedInput fuse(const RangeImage& image, const ResidualStack& stack,
                const NormalizationSpec& norm);

void dump_stack(const std::filesystem::path& path, const ResidualStack& stack);

}  // namespace mos
