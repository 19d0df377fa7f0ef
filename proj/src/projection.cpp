#include "mos/projection.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mos {

static_assert(std::endian::native == std::endian::little,
              "raw dumps and scan files assume a little-endian host");

void ProjectionConfig::validate() const {
  if (height < 2 || width < 2)
    throw std::invalid_argument("ProjectionConfig: image must be at least 2x2, got " +
                                std::to_string(height) + "x" + std::to_string(width));
  if (fov_up < 0.0 || fov_down < 0.0 || !(fov() > 0.0))
    throw std::invalid_argument("ProjectionConfig: need fov_up >= 0, fov_down >= 0 "
                                "and fov_up + fov_down > 0");
}

void KnnParams::validate() const {
  if (k < 1) throw std::invalid_argument("KnnParams: k must be >= 1");
  if (window < 1 || window % 2 == 0)
    throw std::invalid_argument("KnnParams: window must be odd and >= 1, got " +
                                std::to_string(window));
  if (!(cutoff > 0.0)) throw std::invalid_argument("KnnParams: cutoff must be > 0");
}

void project_angles(double yaw, double pitch, const ProjectionConfig& cfg,
                    double& u, double& v) {
  u = 0.5 * (1.0 - yaw / std::numbers::pi) * cfg.width;
  v = (1.0 - (pitch + cfg.fov_down) / cfg.fov()) * cfg.height;
}

namespace {

struct PrepPoint {
  std::int32_t u = 0;
  std::int32_t v = 0;
  float r = -1.0f;  // < 0 means dropped
};

inline std::uint64_t pack_key(float r, std::int32_t index) {
  // positive finite floats order like their bit patterns
  return (std::uint64_t(std::bit_cast<std::uint32_t>(r)) << 32) |
         std::uint32_t(index);
}

PrepPoint prep_point(const Point& p, const ProjectionConfig& cfg) {
  PrepPoint out;
  const double r = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
  if (!(r > 0.0)) return out;  // r stays -1: zero range
  const double pitch = std::asin(std::clamp(p.z / r, -1.0, 1.0));
  if (pitch > cfg.fov_up || pitch < -cfg.fov_down) {
    out.r = -2.0f;  // out of fov
    return out;
  }
  double uc, vc;
  project_angles(std::atan2(p.y, p.x), pitch, cfg, uc, vc);
  out.u = std::clamp<std::int32_t>(std::int32_t(std::floor(uc)), 0, cfg.width - 1);
  out.v = std::clamp<std::int32_t>(std::int32_t(std::floor(vc)), 0, cfg.height - 1);
  out.r = float(r);
  return out;
}

inline void atomic_min_key(std::atomic<std::uint64_t>& slot, std::uint64_t key) {
  std::uint64_t cur = slot.load(std::memory_order_relaxed);
  while (key < cur &&
         !slot.compare_exchange_weak(cur, key, std::memory_order_relaxed)) {
  }
}

}  // namespace

Projection project_scan(const Scan& scan, const ProjectionConfig& cfg, Exec exec) {
  cfg.validate();
  const std::int64_t n = std::int64_t(scan.size());
  if (n > std::numeric_limits<std::int32_t>::max())
    throw std::invalid_argument("project_scan: scan too large for 32-bit point indices");

  Projection out;
  out.image.cfg = cfg;
  out.image.range = Grid<float>(cfg.height, cfg.width, -1.0f);
  out.image.x = Grid<float>(cfg.height, cfg.width, 0.0f);
  out.image.y = Grid<float>(cfg.height, cfg.width, 0.0f);
  out.image.z = Grid<float>(cfg.height, cfg.width, 0.0f);
  out.image.remission = Grid<float>(cfg.height, cfg.width, 0.0f);
  out.image.index = Grid<std::int32_t>(cfg.height, cfg.width, -1);

  std::vector<PrepPoint> prep(scan.size());
  std::int64_t zero_range = 0, out_of_fov = 0;

  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static) reduction(+ : zero_range, out_of_fov)
    for (std::int64_t i = 0; i < n; ++i) {
      prep[i] = prep_point(scan.points[i], cfg);
      if (prep[i].r == -1.0f) ++zero_range;
      else if (prep[i].r == -2.0f) ++out_of_fov;
    }
  } else {
    for (std::int64_t i = 0; i < n; ++i) {
      prep[i] = prep_point(scan.points[i], cfg);
      if (prep[i].r == -1.0f) ++zero_range;
      else if (prep[i].r == -2.0f) ++out_of_fov;
    }
  }
  out.stats.dropped_zero_range = zero_range;
  out.stats.dropped_out_of_fov = out_of_fov;

  const std::int64_t pixels = std::int64_t(cfg.height) * cfg.width;
  std::vector<std::int32_t> winner(std::size_t(pixels), -1);

  if (exec == Exec::Parallel) {
    std::vector<std::atomic<std::uint64_t>> slots(static_cast<std::size_t>(pixels));
#pragma omp parallel
    {
#pragma omp for schedule(static)
      for (std::int64_t c = 0; c < pixels; ++c)
        slots[c].store(std::numeric_limits<std::uint64_t>::max(),
                       std::memory_order_relaxed);
#pragma omp for schedule(static)
      for (std::int64_t i = 0; i < n; ++i) {
        const PrepPoint& pp = prep[i];
        if (pp.r < 0.0f) continue;
        atomic_min_key(slots[std::size_t(pp.v) * cfg.width + pp.u],
                       pack_key(pp.r, std::int32_t(i)));
      }
#pragma omp for schedule(static)
      for (std::int64_t c = 0; c < pixels; ++c) {
        const std::uint64_t key = slots[c].load(std::memory_order_relaxed);
        if (key != std::numeric_limits<std::uint64_t>::max())
          winner[c] = std::int32_t(key & 0xFFFFFFFFu);
      }
    }
  } else {
    std::vector<float> best(static_cast<std::size_t>(pixels));
    for (std::int64_t i = 0; i < n; ++i) {
      const PrepPoint& pp = prep[i];
      if (pp.r < 0.0f) continue;
      const std::size_t c = std::size_t(pp.v) * cfg.width + pp.u;
      if (winner[c] < 0 || pp.r < best[c]) {
        winner[c] = std::int32_t(i);
        best[c] = pp.r;
      }
      // equal range keeps the earlier (smaller) index
    }
  }

  for (std::int64_t c = 0; c < pixels; ++c) {
    const std::int32_t i = winner[c];
    if (i < 0) continue;
    const Point& p = scan.points[std::size_t(i)];
    out.image.range.data()[c] = prep[std::size_t(i)].r;
    out.image.x.data()[c] = float(p.x);
    out.image.y.data()[c] = float(p.y);
    out.image.z.data()[c] = float(p.z);
    out.image.remission.data()[c] = float(p.remission);
    out.image.index.data()[c] = i;
  }

  out.point_pixels.reserve(scan.size());
  for (std::int64_t i = 0; i < n; ++i)
    if (prep[std::size_t(i)].r >= 0.0f)
      out.point_pixels.push_back({std::int32_t(i), prep[std::size_t(i)].u,
                                  prep[std::size_t(i)].v});
  return out;
}

std::vector<MovingLabel> unproject_labels(const Grid<MovingLabel>& image_labels,
                                          std::span<const PointPixel> point_pixels,
                                          std::size_t point_count) {
  std::vector<MovingLabel> out(point_count, MovingLabel::Ignore);
  for (const PointPixel& pp : point_pixels) {
    if (pp.point < 0 || std::size_t(pp.point) >= point_count)
      throw std::out_of_range("unproject_labels: point index " +
                              std::to_string(pp.point) + " outside scan of " +
                              std::to_string(point_count));
    out[std::size_t(pp.point)] = image_labels(pp.v, pp.u);
  }
  return out;
}

namespace {

struct Candidate {
  double delta;
  int order;
  MovingLabel label;
};

MovingLabel vote_point(const Scan& scan, const PointPixel& pp,
                       const RangeImage& image,
                       std::span<const MovingLabel> raw_labels,
                       const KnnParams& params, std::vector<Candidate>& buf) {
  const Point& p = scan.points[std::size_t(pp.point)];
  const double r = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
  const int half = params.window / 2;
  const int w = image.cfg.width;

  buf.clear();
  int order = 0;
  for (int dv = -half; dv <= half; ++dv) {
    const int v = pp.v + dv;
    if (v < 0 || v >= image.cfg.height) {
      order += params.window;
      continue;
    }
    for (int du = -half; du <= half; ++du, ++order) {
      const int u = ((pp.u + du) % w + w) % w;  // azimuth wraps
      if (v == pp.v && u == pp.u) {
        buf.push_back({0.0, order, raw_labels[std::size_t(pp.point)]});
        continue;
      }
      if (!image.valid(v, u)) continue;
      const double delta = std::abs(r - double(image.range(v, u)));
      if (delta <= params.cutoff)
        buf.push_back({delta, order, raw_labels[std::size_t(image.index(v, u))]});
    }
  }

  std::sort(buf.begin(), buf.end(), [](const Candidate& a, const Candidate& b) {
    return a.delta != b.delta ? a.delta < b.delta : a.order < b.order;
  });
  const std::size_t take = std::min<std::size_t>(std::size_t(params.k), buf.size());
  int moving = 0, stat = 0;
  for (std::size_t j = 0; j < take; ++j) {
    if (buf[j].label == MovingLabel::Moving) ++moving;
    else if (buf[j].label == MovingLabel::Static) ++stat;
  }
  if (moving > stat) return MovingLabel::Moving;
  if (stat > moving) return MovingLabel::Static;
  return raw_labels[std::size_t(pp.point)];
}

}  // namespace

std::vector<MovingLabel> knn_clean(const Scan& scan,
                                   std::span<const PointPixel> point_pixels,
                                   const RangeImage& image,
                                   std::span<const MovingLabel> raw_labels,
                                   const KnnParams& params, Exec exec) {
  params.validate();
  if (raw_labels.size() != scan.size())
    throw std::invalid_argument("knn_clean: " + std::to_string(raw_labels.size()) +
                                " labels for " + std::to_string(scan.size()) +
                                " points");
  std::vector<MovingLabel> out(raw_labels.begin(), raw_labels.end());
  const std::int64_t n = std::int64_t(point_pixels.size());

  if (exec == Exec::Parallel) {
#pragma omp parallel
    {
      std::vector<Candidate> buf;
      buf.reserve(std::size_t(params.window) * params.window);
#pragma omp for schedule(static)
      for (std::int64_t i = 0; i < n; ++i)
        out[std::size_t(point_pixels[i].point)] =
            vote_point(scan, point_pixels[i], image, raw_labels, params, buf);
    }
  } else {
    std::vector<Candidate> buf;
    buf.reserve(std::size_t(params.window) * params.window);
    for (std::int64_t i = 0; i < n; ++i)
      out[std::size_t(point_pixels[i].point)] =
          vote_point(scan, point_pixels[i], image, raw_labels, params, buf);
  }
  return out;
}

void dump_planar(const std::filesystem::path& path,
                 const std::vector<const Grid<float>*>& planes) {
  if (planes.empty()) throw std::invalid_argument("dump_planar: no planes");
  const Grid<float>& first = *planes.front();
  for (const Grid<float>* g : planes)
    if (!g->same_shape(first))
      throw std::invalid_argument("dump_planar: plane shapes differ");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("dump_planar: cannot open " + path.string());
  out << first.height() << ' ' << first.width() << ' ' << planes.size() << '\n';
  for (const Grid<float>* g : planes)
    out.write(reinterpret_cast<const char*>(g->data()),
              std::streamsize(g->size() * sizeof(float)));
  if (!out) throw std::runtime_error("dump_planar: write failed for " + path.string());
}

void dump_range_image(const std::filesystem::path& path, const RangeImage& img) {
  dump_planar(path, {&img.range, &img.x, &img.y, &img.z, &img.remission});
}

}  // namespace mos
