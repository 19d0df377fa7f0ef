#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "mos/residual.hpp"

using namespace mos;

namespace {

ProjectionConfig small_cfg() {
  ProjectionConfig cfg;
  cfg.height = 16;
  cfg.width = 64;
  cfg.fov_up = deg2rad(15.0);
  cfg.fov_down = deg2rad(15.0);
  return cfg;
}

Scan shell_scan(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> yaw(-3.1, 3.1);
  std::uniform_real_distribution<double> pitch(-0.2, 0.2);
  std::uniform_real_distribution<double> radius(5.0, 40.0);
  std::uniform_real_distribution<double> rem(0.0, 1.0);
  Scan scan;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = radius(rng), y = yaw(rng), p = pitch(rng);
    scan.points.push_back({r * std::cos(p) * std::cos(y),
                           r * std::cos(p) * std::sin(y), r * std::sin(p),
                           rem(rng)});
  }
  return scan;
}

}  // namespace

TEST_CASE("a static scene under an identity motion has zero residual") {
  const ProjectionConfig cfg = small_cfg();
  const Scan scan = shell_scan(2000, 5);
  const Grid<float> cur = project_scan(scan, cfg, Exec::Serial).image.range;
  const Grid<float> past = reproject_ranges(scan, Pose::identity(), cfg, Exec::Serial);
  CHECK(cur == past);  // identity transform is exact in doubles

  const Grid<float> d = gen_residual(cur, past);
  for (std::size_t c = 0; c < d.size(); ++c) CHECK(d.data()[c] == 0.0f);
}

TEST_CASE("residual values follow |r_cur - r_past| / r_cur") {
  const ProjectionConfig cfg = small_cfg();
  Scan cur_scan;
  cur_scan.points.push_back({10.0, 0.0, 0.0, 0.0});
  Scan past_scan;
  past_scan.points.push_back({12.5, 0.0, 0.0, 0.0});

  const Projection cur = project_scan(cur_scan, cfg, Exec::Serial);
  const int v = cur.point_pixels[0].v, u = cur.point_pixels[0].u;

  SUBCASE("already in the current frame") {
    const Grid<float> past = reproject_ranges(past_scan, Pose::identity(), cfg,
                                              Exec::Serial);
    const Grid<float> d = gen_residual(cur.image.range, past);
    CHECK(d(v, u) == std::abs(10.0f - 12.5f) / 10.0f);
  }
  SUBCASE("brought in by the relative pose") {
    Scan far;
    far.points.push_back({13.5, 0.0, 0.0, 0.0});  // one meter further back
    const Grid<float> past =
        reproject_ranges(far, Pose::translation(-1.0, 0.0, 0.0), cfg, Exec::Serial);
    const Grid<float> d = gen_residual(cur.image.range, past);
    CHECK(d(v, u) == std::abs(10.0f - 12.5f) / 10.0f);
  }
}

TEST_CASE("residual is zero wherever either image is empty") {
  Grid<float> cur(2, 2, -1.0f), past(2, 2, -1.0f);
  cur(0, 0) = 10.0f;              // past empty
  past(0, 1) = 10.0f;             // current empty
  cur(1, 0) = 8.0f;
  past(1, 0) = 10.0f;             // both valid
  const Grid<float> d = gen_residual(cur, past);
  CHECK(d(0, 0) == 0.0f);
  CHECK(d(0, 1) == 0.0f);
  CHECK(d(1, 0) == 0.25f);
  CHECK(d(1, 1) == 0.0f);

  CHECK_THROWS_AS(gen_residual(cur, Grid<float>(3, 2, -1.0f)), std::invalid_argument);
}

TEST_CASE("build_stack zero-pads channels beyond the available history") {
  const ProjectionConfig cfg = small_cfg();
  const Scan scan = shell_scan(500, 9);
  const Grid<float> cur = project_scan(scan, cfg, Exec::Serial).image.range;

  const std::vector<Scan> history = {shell_scan(500, 10)};
  const std::vector<Pose> poses = {Pose::translation(0.1, 0.0, 0.0)};
  const ResidualStack stack = build_stack(cur, history, poses, 3, cfg, Exec::Serial);

  REQUIRE(stack.n == 3);
  REQUIRE(stack.channels.size() == 3);
  REQUIRE(stack.past_ranges.size() == 3);

  const Grid<float> want0 =
      gen_residual(cur, reproject_ranges(history[0], poses[0], cfg, Exec::Serial));
  CHECK(stack.channels[0] == want0);
  for (int j = 1; j < 3; ++j)
    for (std::size_t c = 0; c < cur.size(); ++c) {
      CHECK(stack.channels[std::size_t(j)].data()[c] == 0.0f);
      CHECK(stack.past_ranges[std::size_t(j)].data()[c] == -1.0f);
    }

  CHECK_THROWS_AS(build_stack(cur, history, {}, 1, cfg), std::invalid_argument);
  CHECK_THROWS_AS(build_stack(cur, history, poses, -1, cfg), std::invalid_argument);
}

TEST_CASE("normalization estimator matches two-pass statistics") {
  const ProjectionConfig cfg = small_cfg();
  const int n = 2;
  NormalizationEstimator est(n);

  std::vector<std::vector<double>> samples(std::size_t(5 + n));
  for (std::uint64_t seed : {21u, 22u, 23u}) {
    const Scan scan = shell_scan(1500, seed);
    const Projection proj = project_scan(scan, cfg, Exec::Serial);
    const std::vector<Scan> history = {shell_scan(1500, seed + 100),
                                       shell_scan(1500, seed + 200)};
    const std::vector<Pose> poses = {Pose::translation(0.2, 0.0, 0.0),
                                     Pose::translation(0.4, 0.0, 0.0)};
    const ResidualStack stack =
        build_stack(proj.image.range, history, poses, n, cfg, Exec::Serial);
    est.add(proj.image, stack);

    for (int v = 0; v < cfg.height; ++v)
      for (int u = 0; u < cfg.width; ++u) {
        if (!proj.image.valid(v, u)) continue;
        samples[0].push_back(proj.image.x(v, u));
        samples[1].push_back(proj.image.y(v, u));
        samples[2].push_back(proj.image.z(v, u));
        samples[3].push_back(proj.image.range(v, u));
        samples[4].push_back(proj.image.remission(v, u));
        for (int j = 0; j < n; ++j)
          samples[std::size_t(5 + j)].push_back(stack.channels[std::size_t(j)](v, u));
      }
  }

  const NormalizationSpec spec = est.finalize();
  REQUIRE(spec.channels() == 5 + n);
  for (std::size_t ch = 0; ch < samples.size(); ++ch) {
    const auto& vals = samples[ch];
    REQUIRE(!vals.empty());
    double mean = 0.0;
    for (double x : vals) mean += x;
    mean /= double(vals.size());
    double var = 0.0;
    for (double x : vals) var += (x - mean) * (x - mean);
    var /= double(vals.size());
    CHECK(spec.mean[ch] == doctest::Approx(mean).epsilon(1e-9));
    CHECK(spec.scale[ch] ==
          doctest::Approx(std::max(std::sqrt(var), 1e-6)).epsilon(1e-9));
  }

  CHECK_THROWS_AS(NormalizationEstimator(1).finalize(), std::runtime_error);
}

TEST_CASE("fuse applies the affine map and zeroes invalid pixels first") {
  const ProjectionConfig cfg = small_cfg();
  const Scan scan = shell_scan(800, 31);
  const Projection proj = project_scan(scan, cfg, Exec::Serial);
  const ResidualStack stack =
      build_stack(proj.image.range, {}, {}, 1, cfg, Exec::Serial);

  NormalizationSpec norm = identity_normalization(6);
  norm.mean = {1.0, -2.0, 0.5, 10.0, 0.25, 0.0};
  norm.scale = {2.0, 4.0, 1.0, 8.0, 0.5, 1e-2};

  const FusedInput fused = fuse(proj.image, stack, norm);
  REQUIRE(fused.channels.size() == 6);
  CHECK(fused.n == 1);
  CHECK(fused.norm == norm);

  const Grid<float>* raw[6] = {&proj.image.x,     &proj.image.y,
                               &proj.image.z,     &proj.image.range,
                               &proj.image.remission, &stack.channels[0]};
  for (int v = 0; v < cfg.height; ++v)
    for (int u = 0; u < cfg.width; ++u) {
      CHECK(fused.valid(v, u) == (proj.image.valid(v, u) ? 1 : 0));
      for (int ch = 0; ch < 6; ++ch) {
        const double x = proj.image.valid(v, u) ? double((*raw[ch])(v, u)) : 0.0;
        const float want = float((x - norm.mean[std::size_t(ch)]) /
                                 norm.scale[std::size_t(ch)]);
        CHECK(fused.channels[std::size_t(ch)](v, u) == want);
      }
    }

  // recover the raw value from a normalized one (valid pixels only)
  for (const PointPixel& pp : proj.point_pixels) {
    if (proj.image.index(pp.v, pp.u) != pp.point) continue;
    const double back =
        double(fused.channels[3](pp.v, pp.u)) * norm.scale[3] + norm.mean[3];
    CHECK(back == doctest::Approx(double(proj.image.range(pp.v, pp.u)))
                      .epsilon(1e-6));
  }

  CHECK_THROWS_AS(fuse(proj.image, stack, identity_normalization(5)),
                  std::invalid_argument);
  NormalizationSpec bad = identity_normalization(6);
  bad.scale[2] = 0.0;
  CHECK_THROWS_AS(fuse(proj.image, stack, bad), std::invalid_argument);
}
