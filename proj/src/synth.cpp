#include "mos/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace mos {

void SceneSpec::validate() const {
  proj.validate();
  if (sensor_poses.empty())
    throw std::invalid_argument("SceneSpec: at least one sensor pose required");
  if (!(max_range > 0.0))
    throw std::invalid_argument("SceneSpec: max_range must be > 0");
  for (const PlaneSpec& p : planes) {
    if (p.axis < 0 || p.axis > 2)
      throw std::invalid_argument("SceneSpec: plane axis must be 0, 1 or 2");
    if (!(p.lo1 < p.hi1) || !(p.lo2 < p.hi2))
      throw std::invalid_argument("SceneSpec: plane extents must be ordered");
  }
  for (const BoxSpec& b : boxes)
    if (!(b.half.minCoeff() > 0.0))
      throw std::invalid_argument("SceneSpec: box half extents must be > 0");
}

namespace {

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  double remission = 0.0;
  bool moving = false;
};

void hit_plane(const PlaneSpec& plane, const Eigen::Vector3d& o,
               const Eigen::Vector3d& d, Hit& best) {
  const double da = d[plane.axis];
  if (std::abs(da) < 1e-12) return;
  const double t = (plane.offset - o[plane.axis]) / da;
  if (t <= 1e-9 || t >= best.t) return;
  const int a1 = (plane.axis + 1) % 3;
  const int a2 = (plane.axis + 2) % 3;
  const double c1 = o[a1] + t * d[a1];
  const double c2 = o[a2] + t * d[a2];
  const double lo_a1 = plane.axis == 1 ? plane.lo2 : plane.lo1;
  const double hi_a1 = plane.axis == 1 ? plane.hi2 : plane.hi1;
  const double lo_a2 = plane.axis == 1 ? plane.lo1 : plane.lo2;
  const double hi_a2 = plane.axis == 1 ? plane.hi1 : plane.hi2;
  if (c1 < lo_a1 || c1 > hi_a1 || c2 < lo_a2 || c2 > hi_a2) return;
  best = {t, plane.remission, false};
}

void hit_box(const BoxSpec& box, const Eigen::Vector3d& center,
             const Eigen::Vector3d& o, const Eigen::Vector3d& d, Hit& best) {
  double tmin = 0.0, tmax = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double lo = center[a] - box.half[a];
    const double hi = center[a] + box.half[a];
    if (std::abs(d[a]) < 1e-12) {
      if (o[a] < lo || o[a] > hi) return;
      continue;
    }
    double t1 = (lo - o[a]) / d[a];
    double t2 = (hi - o[a]) / d[a];
    if (t1 > t2) std::swap(t1, t2);
    tmin = std::max(tmin, t1);
    tmax = std::min(tmax, t2);
    if (tmin > tmax) return;
  }
  if (tmin <= 1e-9 || tmin >= best.t) return;
  best = {tmin, box.remission, box.is_moving()};
}

}  // namespace

Scan render_frame(const SceneSpec& scene, int frame) {
  scene.validate();
  if (frame < 0 || frame >= scene.frames())
    throw std::out_of_range("render_frame: frame " + std::to_string(frame) +
                            " of " + std::to_string(scene.frames()));
  const ProjectionConfig& cfg = scene.proj;
  const Pose& pose = scene.sensor_poses[std::size_t(frame)];
  const Eigen::Matrix3d rot = pose.rotation();
  const Eigen::Vector3d origin = pose.translation_part();

  std::vector<Eigen::Vector3d> centers(scene.boxes.size());
  for (std::size_t b = 0; b < scene.boxes.size(); ++b)
    centers[b] = scene.boxes[b].center + double(frame) * scene.boxes[b].velocity;

  Scan scan;
  scan.frame_index = frame;
  scan.points.reserve(std::size_t(cfg.height) * std::size_t(cfg.width));
  const double fov = cfg.fov();

  for (int v = 0; v < cfg.height; ++v) {
    const double pitch = fov * (1.0 - (v + 0.5) / cfg.height) - cfg.fov_down;
    const double cp = std::cos(pitch), sp = std::sin(pitch);
    for (int u = 0; u < cfg.width; ++u) {
      const double yaw =
          std::numbers::pi * (1.0 - 2.0 * (u + 0.5) / cfg.width);
      const Eigen::Vector3d dir_sensor(cp * std::cos(yaw), cp * std::sin(yaw), sp);
      const Eigen::Vector3d dir_world = rot * dir_sensor;

      Hit best;
      for (const PlaneSpec& plane : scene.planes)
        hit_plane(plane, origin, dir_world, best);
      for (std::size_t b = 0; b < scene.boxes.size(); ++b)
        hit_box(scene.boxes[b], centers[b], origin, dir_world, best);
      if (!(best.t < scene.max_range)) continue;

      const Eigen::Vector3d p = dir_sensor * best.t;
      scan.points.push_back({p.x(), p.y(), p.z(), best.remission});
      scan.labels.push_back(best.moving ? MovingLabel::Moving
                                        : MovingLabel::Static);
    }
  }
  return scan;
}

std::vector<Scan> render_sequence(const SceneSpec& scene) {
  std::vector<Scan> out;
  out.reserve(std::size_t(scene.frames()));
  for (int k = 0; k < scene.frames(); ++k) out.push_back(render_frame(scene, k));
  return out;
}

namespace {

constexpr double kWallRemission = 0.15;

std::vector<PlaneSpec> square_walls(double half, double z_lo, double z_hi,
                                    double remission) {
  return {
      {0, +half, -half, half, z_lo, z_hi, remission},
      {0, -half, -half, half, z_lo, z_hi, remission},
      {1, +half, -half, half, z_lo, z_hi, remission},
      {1, -half, -half, half, z_lo, z_hi, remission},
  };
}

ProjectionConfig synth_proj(int height, int width) {
  ProjectionConfig cfg;
  cfg.height = height;
  cfg.width = width;
  cfg.fov_up = deg2rad(4.0);
  cfg.fov_down = deg2rad(4.0);
  return cfg;
}

SceneSpec preset_static_room() {
  SceneSpec scene;
  scene.proj = synth_proj(64, 8192);
  scene.planes = square_walls(20.0, -3.0, 3.0, kWallRemission);
  for (int k = 0; k < 12; ++k) {
    const double x = (k % 2 == 0) ? 0.0 : 0.5;  // 0.5 m per step
    const Eigen::Matrix3d rot =
        Eigen::AngleAxisd(deg2rad(double(k)), Eigen::Vector3d::UnitZ())
            .toRotationMatrix();
    scene.sensor_poses.push_back(Pose::from_rt(rot, Eigen::Vector3d(x, 0, 0)));
  }
  return scene;
}

SceneSpec preset_convex_room() {
  SceneSpec scene;
  scene.proj = synth_proj(64, 8192);
  scene.planes = square_walls(20.0, -3.0, 3.0, kWallRemission);
  // yaw step is exactly 128 pixels so ranges are preserved pixel-for-pixel
  const double step = 128.0 * 2.0 * std::numbers::pi / 8192.0;
  for (int k = 0; k < 12; ++k)
    scene.sensor_poses.push_back(Pose::rotation_z(step * double(k)));
  return scene;
}

SceneSpec preset_approach() {
  SceneSpec scene;
  scene.proj = synth_proj(64, 2048);
  BoxSpec box;
  box.center = {14.25, 0.0, 0.0};  // near face starts at x = 14
  box.half = {0.25, 4.0, 1.0};
  box.velocity = {-1.0, 0.0, 0.0};  // face reaches 10 m on frame 4
  box.remission = 0.5;
  scene.boxes.push_back(box);
  scene.sensor_poses.assign(5, Pose::identity());
  return scene;
}

SceneSpec preset_crossing_box() {
  SceneSpec scene;
  scene.proj = synth_proj(64, 1024);
  scene.planes = square_walls(30.0, -5.0, 5.0, kWallRemission);
  BoxSpec box;
  box.center = {10.0, -6.0, 0.0};
  box.half = {1.0, 1.0, 1.0};
  box.velocity = {0.0, 1.0, 0.0};
  box.remission = 0.8;
  scene.boxes.push_back(box);
  scene.sensor_poses.assign(13, Pose::identity());
  return scene;
}

// Eight 45-degree slots on two interleaved radius bands; a shuffle decides
// which four hold the movers, so neither angle nor radius predicts motion
// and only the residual channels can tell movers from their parked twins.
SceneSpec preset_busy_intersection(std::uint64_t seed) {
  SceneSpec scene;
  scene.proj = synth_proj(64, 768);
  scene.planes = square_walls(30.0, -6.0, 6.0, 0.1);
  const int frames = 10;
  scene.sensor_poses.assign(std::size_t(frames), Pose::identity());

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-8.0, 8.0);
  std::uniform_real_distribution<double> band_jitter(0.0, 0.3);
  std::uniform_real_distribution<double> spread(-1.125, 1.125);
  std::uniform_real_distribution<double> remission(0.3, 0.9);

  std::array<int, 8> slot = {0, 1, 2, 3, 4, 5, 6, 7};
  std::shuffle(slot.begin(), slot.end(), rng);
  const auto slot_radius = [&](int s) {
    // alternating bands keep same-band neighbors 90 degrees apart and the
    // bands far enough that region growing can never join across them
    return (s % 2 == 0 ? 9.0 : 15.5) + band_jitter(rng);
  };
  const auto slot_angle = [&](int s) { return deg2rad(45.0 * s + jitter(rng)); };

  std::vector<BoxSpec> boxes;
  for (int i = 0; i < 4; ++i) {  // movers
    const double phi = slot_angle(slot[std::size_t(i)]);
    const double r = slot_radius(slot[std::size_t(i)]);
    BoxSpec box;
    box.half = {1.0, 1.0, 1.0};
    box.remission = remission(rng);
    const Eigen::Vector3d radial(std::cos(phi), std::sin(phi), 0.0);
    const Eigen::Vector3d tangent(-std::sin(phi), std::cos(phi), 0.0);
    // fast tangential sweep seeds the heuristic at the leading edge; the
    // slow radial drift puts residual on every body pixel
    const double tangential = (rng() % 2) ? 0.8 : -0.8;
    const double radial_drift = (rng() % 2) ? 0.25 : -0.25;
    box.velocity = tangential * tangent + radial_drift * radial;
    // start upstream so the sweep stays centered on the slot
    box.center = r * radial - 0.5 * double(frames - 1) * box.velocity;
    boxes.push_back(box);
  }
  for (int i = 0; i < 4; ++i) {  // parked twins
    const double phi = slot_angle(slot[std::size_t(4 + i)]);
    // the spread matches the movers' swept radius band
    const double r = slot_radius(slot[std::size_t(4 + i)]) + spread(rng);
    BoxSpec box;
    box.half = {1.0, 1.0, 1.0};
    box.remission = boxes[std::size_t(i)].remission;  // twin of mover i
    box.center = r * Eigen::Vector3d(std::cos(phi), std::sin(phi), 0.0);
    boxes.push_back(box);
  }
  scene.boxes = std::move(boxes);
  return scene;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"static-room", "convex-room", "approach", "crossing-box",
          "busy-intersection"};
}

SceneSpec make_preset(const std::string& name, std::uint64_t seed) {
  if (name == "static-room") return preset_static_room();
  if (name == "convex-room") return preset_convex_room();
  if (name == "approach") return preset_approach();
  if (name == "crossing-box") return preset_crossing_box();
  if (name == "busy-intersection") return preset_busy_intersection(seed);
  std::string names;
  for (const std::string& n : preset_names()) names += " " + n;
  throw std::invalid_argument("make_preset: unknown preset '" + name +
                              "', valid:" + names);
}

void write_sequence(const std::filesystem::path& dataset_root,
                    const std::string& id, const SceneSpec& scene,
                    std::span<const Scan> frames, const ClassMap& map) {
  if (int(frames.size()) != scene.frames())
    throw std::invalid_argument("write_sequence: " + std::to_string(frames.size()) +
                                " rendered frames for " +
                                std::to_string(scene.frames()) + " poses");
  const std::filesystem::path seq_dir = dataset_root / "sequences" / id;
  std::filesystem::create_directories(seq_dir / "velodyne");
  std::filesystem::create_directories(seq_dir / "labels");

  char name[32];
  for (std::size_t k = 0; k < frames.size(); ++k) {
    std::snprintf(name, sizeof(name), "%06zu", k);
    write_scan_bin(seq_dir / "velodyne" / (std::string(name) + ".bin"), frames[k]);
    write_prediction_labels(seq_dir / "labels" / (std::string(name) + ".label"),
                            frames[k].labels, map);
  }
  write_poses(seq_dir / "poses.txt", scene.sensor_poses);
  write_calib_identity(seq_dir / "calib.txt");
}

}  // namespace mos
