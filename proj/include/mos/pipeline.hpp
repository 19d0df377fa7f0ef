#pragma once

#include <deque>
#include <optional>
#include <string>

#include "mos/heuristic.hpp"
#include "mos/mlp.hpp"
#include "mos/projection.hpp"
#include "mos/residual.hpp"

namespace mos {

struct PipelineConfig {
  ProjectionConfig proj;
  int n_residual = 1;
  std::string method = "residual-rg";  // residual | residual-rg | learned
  HeuristicParams heuristic;
  KnnParams knn;
  bool apply_knn = false;
  int noise_units = 0;
  std::uint64_t noise_seed = 1;
  Exec exec = Exec::Parallel;

  void validate() const;
};

struct FrameTimings {
  double project_ms = 0.0;
  double residual_ms = 0.0;
  double segment_ms = 0.0;
  double post_ms = 0.0;
  double total_ms = 0.0;
};

/// Streams the scans of one sequence in order and segments each against
/// the n_residual previous ones. The first frames run with a zero-padded
/// history. Per-frame odometry noise (perturb_pose units) is applied to
/// the incoming relative poses before composition.
class Pipeline {
 public:
  Pipeline(PipelineConfig cfg, std::optional<Model> model = std::nullopt);

  /// rel_prev_from_cur maps current-frame coordinates into the previous
  /// frame; pass nullptr only for the first frame of a sequence.
  std::vector<MovingLabel> process(const Scan& scan,
                                   const Pose* rel_prev_from_cur,
                                   FrameTimings* timings = nullptr);
  void reset();

  const PipelineConfig& config() const { return cfg_; }
  const Projection& last_projection() const { return last_projection_; }
  const ResidualStack& last_stack() const { return last_stack_; }
  const Grid<MovingLabel>& last_image_labels() const { return last_image_labels_; }

 private:
  PipelineConfig cfg_;
  std::optional<Model> model_;
  std::int64_t frame_count_ = 0;
  std::deque<Scan> history_;          // newest first
  std::deque<Pose> t_cur_from_past_;  // aligned with history_
  Projection last_projection_;
  ResidualStack last_stack_;
  Grid<MovingLabel> last_image_labels_;
};

}  // namespace mos
