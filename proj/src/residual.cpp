#include "mos/residual.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mos {

Grid<float> reproject_ranges(const Scan& past, const Pose& t_current_from_past,
                             const ProjectionConfig& cfg, Exec exec) {
  Scan moved = transform_scan(past, t_current_from_past);
  return project_scan(moved, cfg, exec).image.range;
}

Grid<float> gen_residual(const Grid<float>& current_ranges,
                         const Grid<float>& past_ranges) {
  if (!current_ranges.same_shape(past_ranges))
    throw std::invalid_argument("gen_residual: shape mismatch");
  Grid<float> d(current_ranges.height(), current_ranges.width(), 0.0f);
  const std::size_t total = d.size();
  for (std::size_t c = 0; c < total; ++c) {
    const float rc = current_ranges.data()[c];
    const float rp = past_ranges.data()[c];
    if (rc > 0.0f && rp > 0.0f)
      d.data()[c] = std::abs(rc - rp) / rc;
  }
  return d;
}

ResidualStack build_stack(const Grid<float>& current_ranges,
                          std::span<const Scan> history,
                          std::span<const Pose> t_current_from_past, int n,
                          const ProjectionConfig& cfg, Exec exec) {
  if (n < 0) throw std::invalid_argument("build_stack: n must be >= 0");
  if (history.size() != t_current_from_past.size())
    throw std::invalid_argument("build_stack: " + std::to_string(history.size()) +
                                " scans vs " +
                                std::to_string(t_current_from_past.size()) +
                                " poses");
  ResidualStack stack;
  stack.n = n;
  stack.channels.reserve(std::size_t(n));
  stack.past_ranges.reserve(std::size_t(n));
  for (int j = 0; j < n; ++j) {
    if (std::size_t(j) < history.size()) {
      stack.past_ranges.push_back(
          reproject_ranges(history[std::size_t(j)],
                           t_current_from_past[std::size_t(j)], cfg, exec));
      stack.channels.push_back(gen_residual(current_ranges, stack.past_ranges.back()));
    } else {
      stack.past_ranges.emplace_back(cfg.height, cfg.width, -1.0f);
      stack.channels.emplace_back(cfg.height, cfg.width, 0.0f);
    }
  }
  return stack;
}

void NormalizationSpec::validate() const {
  if (mean.empty() || mean.size() != scale.size())
    throw std::invalid_argument("NormalizationSpec: mean/scale size mismatch");
  for (double s : scale)
    if (!(s > 0.0) || !std::isfinite(s))
      throw std::invalid_argument("NormalizationSpec: scales must be finite and > 0");
  for (double m : mean)
    if (!std::isfinite(m))
      throw std::invalid_argument("NormalizationSpec: means must be finite");
}

NormalizationSpec identity_normalization(int channels) {
  if (channels < 1) throw std::invalid_argument("identity_normalization: channels < 1");
  NormalizationSpec spec;
  spec.mean.assign(std::size_t(channels), 0.0);
  spec.scale.assign(std::size_t(channels), 1.0);
  return spec;
}

NormalizationEstimator::NormalizationEstimator(int n_residual) : n_(n_residual) {
  if (n_residual < 0)
    throw std::invalid_argument("NormalizationEstimator: n_residual < 0");
  sum_.assign(std::size_t(5 + n_), 0.0);
  sum_sq_.assign(std::size_t(5 + n_), 0.0);
}

void NormalizationEstimator::add(const RangeImage& image, const ResidualStack& stack) {
  if (stack.n != n_)
    throw std::invalid_argument("NormalizationEstimator: stack has " +
                                std::to_string(stack.n) + " channels, expected " +
                                std::to_string(n_));
  const std::size_t total = image.range.size();
  for (std::size_t c = 0; c < total; ++c) {
    if (!(image.range.data()[c] > 0.0f)) continue;
    double vals[5] = {image.x.data()[c], image.y.data()[c], image.z.data()[c],
                      image.range.data()[c], image.remission.data()[c]};
    for (int ch = 0; ch < 5; ++ch) {
      sum_[std::size_t(ch)] += vals[ch];
      sum_sq_[std::size_t(ch)] += vals[ch] * vals[ch];
    }
    for (int j = 0; j < n_; ++j) {
      const double d = stack.channels[std::size_t(j)].data()[c];
      sum_[std::size_t(5 + j)] += d;
      sum_sq_[std::size_t(5 + j)] += d * d;
    }
    ++count_;
  }
}

NormalizationSpec NormalizationEstimator::finalize() const {
  if (count_ == 0)
    throw std::runtime_error("NormalizationEstimator: no valid pixels seen");
  NormalizationSpec spec;
  spec.mean.resize(sum_.size());
  spec.scale.resize(sum_.size());
  for (std::size_t ch = 0; ch < sum_.size(); ++ch) {
    const double mean = sum_[ch] / double(count_);
    const double var = std::max(0.0, sum_sq_[ch] / double(count_) - mean * mean);
    spec.mean[ch] = mean;
    spec.scale[ch] = std::max(std::sqrt(var), 1e-6);
  }
  return spec;
}

FusedInput fuse(const RangeImage& image, const ResidualStack& stack,
                const NormalizationSpec& norm) {
  norm.validate();
  if (norm.channels() != 5 + stack.n)
    throw std::invalid_argument("fuse: normalization has " +
                                std::to_string(norm.channels()) +
                                " channels, stack needs " +
                                std::to_string(5 + stack.n));
  FusedInput fused;
  fused.cfg = image.cfg;
  fused.n = stack.n;
  fused.norm = norm;
  fused.channels.reserve(std::size_t(5 + stack.n));
  fused.valid = Grid<std::uint8_t>(image.cfg.height, image.cfg.width, 0);
  for (std::size_t c = 0; c < image.range.size(); ++c)
    fused.valid.data()[c] = image.range.data()[c] > 0.0f ? 1 : 0;

  const std::size_t total = image.range.size();
  auto normalized = [&](const Grid<float>& src, int ch) {
    Grid<float> out(image.cfg.height, image.cfg.width);
    const double m = norm.mean[std::size_t(ch)];
    const double s = norm.scale[std::size_t(ch)];
    for (std::size_t c = 0; c < total; ++c) {
      const double v = image.range.data()[c] > 0.0f ? double(src.data()[c]) : 0.0;
      out.data()[c] = float((v - m) / s);
    }
    return out;
  };

  fused.channels.push_back(normalized(image.x, 0));
  fused.channels.push_back(normalized(image.y, 1));
  fused.channels.push_back(normalized(image.z, 2));
  fused.channels.push_back(normalized(image.range, 3));
  fused.channels.push_back(normalized(image.remission, 4));
  for (int j = 0; j < stack.n; ++j)
    fused.channels.push_back(normalized(stack.channels[std::size_t(j)], 5 + j));
  return fused;
}

void dump_stack(const std::filesystem::path& path, const ResidualStack& stack) {
  std::vector<const Grid<float>*> planes;
  planes.reserve(stack.channels.size());
  for (const Grid<float>& g : stack.channels) planes.push_back(&g);
  dump_planar(path, planes);
}

}  // namespace mos
