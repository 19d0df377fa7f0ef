#include "mos/heuristic.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace mos {

void HeuristicParams::validate() const {
  if (!(tau >= 0.0)) throw std::invalid_argument("HeuristicParams: tau must be >= 0");
  if (min_votes < 1) throw std::invalid_argument("HeuristicParams: min_votes must be >= 1");
  if (!(free_space_margin >= 0.0))
    throw std::invalid_argument("HeuristicParams: free_space_margin must be >= 0");
  if (!(grow_tolerance > 0.0))
    throw std::invalid_argument("HeuristicParams: grow_tolerance must be > 0");
  if (min_region < 1)
    throw std::invalid_argument("HeuristicParams: min_region must be >= 1");
}

namespace {

void check_shapes(const RangeImage& image, const Grid<MovingLabel>& g,
                  const char* who) {
  if (g.height() != image.cfg.height || g.width() != image.cfg.width)
    throw std::invalid_argument(std::string(who) + ": grid shape mismatch");
}

}  // namespace

Grid<MovingLabel> segment_residual(const RangeImage& image,
                                   const ResidualStack& stack,
                                   const HeuristicParams& params) {
  params.validate();
  Grid<MovingLabel> out(image.cfg.height, image.cfg.width, MovingLabel::Ignore);
  const std::size_t total = out.size();
  for (std::size_t c = 0; c < total; ++c) {
    if (!(image.range.data()[c] > 0.0f)) continue;
    int votes = 0;
    for (int j = 0; j < stack.n; ++j)
      if (stack.channels[std::size_t(j)].data()[c] > params.tau) ++votes;
    out.data()[c] = votes >= params.min_votes ? MovingLabel::Moving
                                              : MovingLabel::Static;
  }
  return out;
}

Grid<MovingLabel> free_space_filter(const RangeImage& image,
                                    const Grid<float>& past_ranges,
                                    const Grid<MovingLabel>& seeds,
                                    const HeuristicParams& params) {
  params.validate();
  check_shapes(image, seeds, "free_space_filter");
  if (!past_ranges.same_shape(image.range))
    throw std::invalid_argument("free_space_filter: past range shape mismatch");
  Grid<MovingLabel> out = seeds;
  const std::size_t total = out.size();
  for (std::size_t c = 0; c < total; ++c) {
    if (out.data()[c] != MovingLabel::Moving) continue;
    const float cur = image.range.data()[c];
    const float past = past_ranges.data()[c];
    if (!(past > 0.0f) || !(double(past) > double(cur) + params.free_space_margin))
      out.data()[c] = MovingLabel::Static;
  }
  return out;
}

Grid<MovingLabel> region_grow(const RangeImage& image,
                              const Grid<MovingLabel>& seeds,
                              const HeuristicParams& params) {
  params.validate();
  check_shapes(image, seeds, "region_grow");
  const int h = image.cfg.height;
  const int w = image.cfg.width;

  Grid<MovingLabel> out(h, w, MovingLabel::Ignore);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
      if (image.valid(v, u)) out(v, u) = MovingLabel::Static;

  Grid<std::uint8_t> visited(h, w, 0);
  std::vector<std::int32_t> stack_px, region;

  for (int sv = 0; sv < h; ++sv) {
    for (int su = 0; su < w; ++su) {
      if (seeds(sv, su) != MovingLabel::Moving || visited(sv, su) ||
          !image.valid(sv, su))
        continue;
      region.clear();
      stack_px.clear();
      stack_px.push_back(sv * w + su);
      visited(sv, su) = 1;
      while (!stack_px.empty()) {
        const std::int32_t c = stack_px.back();
        stack_px.pop_back();
        region.push_back(c);
        const int v = c / w, u = c % w;
        const float r = image.range(v, u);
        const int nbs[4][2] = {{v - 1, u},
                               {v + 1, u},
                               {v, u == 0 ? w - 1 : u - 1},
                               {v, u == w - 1 ? 0 : u + 1}};
        for (const auto& nb : nbs) {
          const int nv = nb[0], nu = nb[1];
          if (nv < 0 || nv >= h || visited(nv, nu) || !image.valid(nv, nu))
            continue;
          if (std::abs(double(image.range(nv, nu)) - double(r)) >
              params.grow_tolerance)
            continue;
          visited(nv, nu) = 1;
          stack_px.push_back(nv * w + nu);
        }
      }
      if (int(region.size()) >= params.min_region)
        for (std::int32_t c : region)
          out.data()[std::size_t(c)] = MovingLabel::Moving;
    }
  }
  return out;
}

Grid<MovingLabel> segment_residual_rg(const RangeImage& image,
                                      const ResidualStack& stack,
                                      const HeuristicParams& params) {
  Grid<MovingLabel> seeds = segment_residual(image, stack, params);
  if (stack.n >= 1)
    seeds = free_space_filter(image, stack.past_ranges[0], seeds, params);
  return region_grow(image, seeds, params);
}

}  // namespace mos
