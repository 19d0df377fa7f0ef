#include "mos/pipeline.hpp"

#include <chrono>
#include <stdexcept>

namespace mos {

void PipelineConfig::validate() const {
  proj.validate();
  heuristic.validate();
  if (apply_knn) knn.validate();
  if (n_residual < 0)
    throw std::invalid_argument("PipelineConfig: n_residual must be >= 0");
  if (noise_units < 0)
    throw std::invalid_argument("PipelineConfig: noise_units must be >= 0");
  if (method != "residual" && method != "residual-rg" && method != "learned")
    throw std::invalid_argument(
        "PipelineConfig: method must be residual, residual-rg or learned, got '" +
        method + "'");
}

namespace {

std::uint64_t noise_stream(std::uint64_t seed, std::int64_t frame) {
  return seed ^ (0x9E3779B97F4A7C15ull * std::uint64_t(frame + 1));
}

double ms_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

Pipeline::Pipeline(PipelineConfig cfg, std::optional<Model> model)
    : cfg_(std::move(cfg)), model_(std::move(model)) {
  cfg_.validate();
  if (cfg_.method == "learned") {
    if (!model_)
      throw std::invalid_argument("Pipeline: learned method needs a model");
    model_->spec.validate();
    if (model_->spec.channels != 5 + cfg_.n_residual)
      throw std::invalid_argument("Pipeline: model expects " +
                                  std::to_string(model_->spec.channels - 5) +
                                  " residual channels, config has " +
                                  std::to_string(cfg_.n_residual));
  }
}

void Pipeline::reset() {
  frame_count_ = 0;
  history_.clear();
  t_cur_from_past_.clear();
}

std::vector<MovingLabel> Pipeline::process(const Scan& scan,
                                           const Pose* rel_prev_from_cur,
                                           FrameTimings* timings) {
  const auto t_start = std::chrono::steady_clock::now();

  if (frame_count_ > 0 && rel_prev_from_cur == nullptr)
    throw std::invalid_argument(
        "Pipeline: a relative pose is required after the first frame");
  if (frame_count_ > 0 && cfg_.n_residual > 0) {
    Pose rel = *rel_prev_from_cur;
    if (cfg_.noise_units > 0)
      rel = perturb_pose(rel, cfg_.noise_units,
                         noise_stream(cfg_.noise_seed, frame_count_));
    const Pose to_cur = rel.inverse();
    for (Pose& t : t_cur_from_past_) t = to_cur * t;
    t_cur_from_past_.push_front(to_cur);
    while (int(history_.size()) > cfg_.n_residual) {
      history_.pop_back();
      t_cur_from_past_.pop_back();
    }
  }

  const auto t_project = std::chrono::steady_clock::now();
  last_projection_ = project_scan(scan, cfg_.proj, cfg_.exec);
  const double project_ms = ms_since(t_project);

  const auto t_residual = std::chrono::steady_clock::now();
  std::vector<Scan> history_vec(history_.begin(), history_.end());
  std::vector<Pose> pose_vec(t_cur_from_past_.begin(), t_cur_from_past_.end());
  last_stack_ = build_stack(last_projection_.image.range, history_vec, pose_vec,
                            cfg_.n_residual, cfg_.proj, cfg_.exec);
  const double residual_ms = ms_since(t_residual);

  const auto t_segment = std::chrono::steady_clock::now();
  if (cfg_.method == "residual") {
    last_image_labels_ =
        segment_residual(last_projection_.image, last_stack_, cfg_.heuristic);
  } else if (cfg_.method == "residual-rg") {
    last_image_labels_ =
        segment_residual_rg(last_projection_.image, last_stack_, cfg_.heuristic);
  } else {
    const FusedInput fused =
        fuse(last_projection_.image, last_stack_, model_->norm);
    last_image_labels_ = predict_image(*model_, fused, cfg_.exec);
  }
  const double segment_ms = ms_since(t_segment);

  const auto t_post = std::chrono::steady_clock::now();
  std::vector<MovingLabel> labels = unproject_labels(
      last_image_labels_, last_projection_.point_pixels, scan.size());
  if (cfg_.apply_knn)
    labels = knn_clean(scan, last_projection_.point_pixels, last_projection_.image,
                       labels, cfg_.knn, cfg_.exec);
  // points that never reached a pixel carry no evidence; call them static
  for (MovingLabel& l : labels)
    if (l == MovingLabel::Ignore) l = MovingLabel::Static;
  const double post_ms = ms_since(t_post);

  if (cfg_.n_residual > 0) history_.push_front(scan);
  ++frame_count_;

  if (timings) {
    timings->project_ms = project_ms;
    timings->residual_ms = residual_ms;
    timings->segment_ms = segment_ms;
    timings->post_ms = post_ms;
    timings->total_ms = ms_since(t_start);
  }
  return labels;
}

}  // namespace mos
