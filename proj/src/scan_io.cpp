#include "mos/scan_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace mos {

namespace {

[[noreturn]] void fail(const fs::path& path, const std::string& what) {
  throw std::runtime_error(path.string() + ": " + what);
}

std::vector<char> read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    fail(path, "cannot open file");
  }
  in.seekg(0, std::ios::end);
  const std::streamoff size = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<char> buf(static_cast<std::size_t>(size));
  if (size > 0 && !in.read(buf.data(), size)) {
    fail(path, "short read");
  }
  return buf;
}

MovingLabel parse_label_name(const std::string& name, const fs::path& path,
                             int line_no) {
  if (name == "moving") return MovingLabel::Moving;
  if (name == "static") return MovingLabel::Static;
  if (name == "ignore") return MovingLabel::Ignore;
  std::ostringstream msg;
  msg << "unknown label '" << name << "' at line " << line_no;
  fail(path, msg.str());
}

const char* label_name(MovingLabel label) {
  switch (label) {
    case MovingLabel::Moving: return "moving";
    case MovingLabel::Static: return "static";
    case MovingLabel::Ignore: return "ignore";
  }
  return "static";
}

}  // namespace

ClassMap ClassMap::semantic_kitti() {
  ClassMap map;
  map.entries[0] = MovingLabel::Ignore;  // unlabeled
  map.entries[1] = MovingLabel::Ignore;  // outlier
  map.entries[251] = MovingLabel::Moving;  // moving aggregate (predictions)
  for (std::uint32_t id = 252; id <= 259; ++id) {
    map.entries[id] = MovingLabel::Moving;
  }
  // Everything else defaults to static via classify().
  return map;
}

ClassMap ClassMap::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    fail(path, "cannot open class map");
  }
  ClassMap map;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line.erase(hash);
    }
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key)) {
      continue;
    }
    if (key == "output_moving" || key == "output_static") {
      std::uint32_t code = 0;
      if (!(ss >> code)) {
        std::ostringstream msg;
        msg << "missing code for " << key << " at line " << line_no;
        fail(path, msg.str());
      }
      (key == "output_moving" ? map.output_moving : map.output_static) = code;
      continue;
    }
    std::uint32_t id = 0;
    std::string name;
    std::istringstream entry(key);
    if (!(entry >> id) || !(ss >> name)) {
      std::ostringstream msg;
      msg << "malformed entry at line " << line_no;
      fail(path, msg.str());
    }
    map.entries[id] = parse_label_name(name, path, line_no);
  }
  return map;
}

void ClassMap::save(const fs::path& path) const {
  std::ofstream out(path);
  if (!out) {
    fail(path, "cannot write class map");
  }
  out << "# raw semantic id -> moving | static | ignore\n";
  out << "# ids not listed are static\n";
  out << "output_moving " << output_moving << "\n";
  out << "output_static " << output_static << "\n";
  std::vector<std::uint32_t> ids;
  ids.reserve(entries.size());
  for (const auto& [id, label] : entries) {
    ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());
  for (std::uint32_t id : ids) {
    out << id << " " << label_name(entries.at(id)) << "\n";
  }
}

MovingLabel ClassMap::classify(std::uint32_t semantic_id) const {
  const auto it = entries.find(semantic_id);
  return it == entries.end() ? MovingLabel::Static : it->second;
}

std::uint32_t ClassMap::output_code(MovingLabel label) const {
  return label == MovingLabel::Moving ? output_moving : output_static;
}

Scan read_scan_bin(const fs::path& path) {
  const std::vector<char> buf = read_all(path);
  if (buf.size() % 16 != 0) {
    std::ostringstream msg;
    msg << "size " << buf.size() << " not divisible by 16 (trailing "
        << buf.size() % 16 << " bytes at offset " << (buf.size() / 16) * 16
        << ")";
    fail(path, msg.str());
  }
  const std::size_t count = buf.size() / 16;
  Scan scan;
  scan.points.resize(count);
  const char* p = buf.data();
  for (std::size_t i = 0; i < count; ++i, p += 16) {
    float f[4];
    std::memcpy(f, p, 16);
    if (!std::isfinite(f[0]) || !std::isfinite(f[1]) || !std::isfinite(f[2]) ||
        !std::isfinite(f[3])) {
      std::ostringstream msg;
      msg << "non-finite coordinate at point " << i;
      throw std::invalid_argument(path.string() + ": " + msg.str());
    }
    scan.points[i] = Point{f[0], f[1], f[2], f[3]};
  }
  return scan;
}

void write_scan_bin(const fs::path& path, const Scan& scan) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    fail(path, "cannot open for writing");
  }
  std::vector<float> buf(scan.points.size() * 4);
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    const Point& pt = scan.points[i];
    buf[i * 4 + 0] = static_cast<float>(pt.x);
    buf[i * 4 + 1] = static_cast<float>(pt.y);
    buf[i * 4 + 2] = static_cast<float>(pt.z);
    buf[i * 4 + 3] = static_cast<float>(pt.remission);
  }
  if (!buf.empty()) {
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!out) {
    fail(path, "write failed");
  }
}

std::vector<MovingLabel> read_semantic_labels(const fs::path& path,
                                              std::size_t point_count,
                                              const ClassMap& map) {
  const std::vector<char> buf = read_all(path);
  if (buf.size() != point_count * 4) {
    std::ostringstream msg;
    msg << "label file holds " << buf.size() / 4 << " entries, expected "
        << point_count;
    fail(path, msg.str());
  }
  std::vector<MovingLabel> labels(point_count);
  for (std::size_t i = 0; i < point_count; ++i) {
    std::uint32_t raw = 0;
    std::memcpy(&raw, buf.data() + i * 4, 4);
    labels[i] = map.classify(raw & 0xFFFFu);  // upper 16 bits: instance id
  }
  return labels;
}

void write_prediction_labels(const fs::path& path,
                             std::span<const MovingLabel> labels,
                             const ClassMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    fail(path, "cannot open for writing");
  }
  std::vector<std::uint32_t> buf(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    buf[i] = map.output_code(labels[i]);
  }
  if (!buf.empty()) {
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * 4));
  }
  if (!out) {
    fail(path, "write failed");
  }
}

Pose read_calib_tr(const fs::path& calib_path) {
  std::ifstream in(calib_path);
  if (!in) {
    fail(calib_path, "cannot open calib file");
  }
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key != "Tr:") {
      continue;
    }
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) {
        if (!(ss >> m(r, c))) {
          fail(calib_path, "Tr row does not hold 12 floats");
        }
      }
    }
    return Pose::from_matrix(m);
  }
  fail(calib_path, "missing Tr: calibration row");
}

std::vector<Pose> read_poses(const fs::path& poses_path,
                             const fs::path& calib_path) {
  const Pose tr = read_calib_tr(calib_path);
  std::ifstream in(poses_path);
  if (!in) {
    fail(poses_path, "cannot open poses file");
  }
  std::vector<Pose> poses;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    std::istringstream ss(line);
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) {
        if (!(ss >> m(r, c)) || !std::isfinite(m(r, c))) {
          std::ostringstream msg;
          msg << "malformed pose at line " << line_no;
          fail(poses_path, msg.str());
        }
      }
    }
    poses.push_back(camera_to_lidar_frame(Pose::from_matrix(m), tr));
  }
  return poses;
}

void write_poses(const fs::path& path, std::span<const Pose> poses) {
  std::ofstream out(path);
  if (!out) {
    fail(path, "cannot open for writing");
  }
  out.precision(17);
  for (const Pose& pose : poses) {
    const Eigen::Matrix4d& m = pose.matrix();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) {
        out << m(r, c);
        out << (r == 2 && c == 3 ? '\n' : ' ');
      }
    }
  }
}

void write_calib_identity(const fs::path& path) {
  std::ofstream out(path);
  if (!out) {
    fail(path, "cannot open for writing");
  }
  out << "Tr: 1 0 0 0 0 1 0 0 0 0 1 0\n";
}

fs::path DatasetSequence::label_file(std::size_t frame) const {
  char name[32];
  std::snprintf(name, sizeof(name), "%06zu.label", frame);
  return root / "labels" / name;
}

Scan DatasetSequence::read_scan(std::size_t frame) const {
  Scan scan = read_scan_bin(scan_files.at(frame));
  scan.frame_index = static_cast<std::int64_t>(frame);
  return scan;
}

std::vector<MovingLabel> DatasetSequence::read_labels(
    std::size_t frame, const ClassMap& map) const {
  const Scan scan = read_scan(frame);
  return read_semantic_labels(label_file(frame), scan.size(), map);
}

DatasetSequence load_sequence(const fs::path& dataset_root,
                              const std::string& id) {
  DatasetSequence seq;
  seq.id = id;
  seq.root = dataset_root / "sequences" / id;
  const fs::path velodyne = seq.root / "velodyne";
  if (!fs::is_directory(velodyne)) {
    fail(velodyne, "missing velodyne directory");
  }
  for (const auto& entry : fs::directory_iterator(velodyne)) {
    if (entry.path().extension() == ".bin") {
      seq.scan_files.push_back(entry.path());
    }
  }
  std::sort(seq.scan_files.begin(), seq.scan_files.end());
  for (const fs::path& file : seq.scan_files) {
    if (fs::file_size(file) % 16 != 0) {
      fail(file, "scan file size not divisible by 16");
    }
  }
  seq.poses_absolute = read_poses(seq.root / "poses.txt", seq.root / "calib.txt");
  if (seq.poses_absolute.size() != seq.scan_files.size()) {
    std::ostringstream msg;
    msg << "pose count " << seq.poses_absolute.size()
        << " does not match scan count " << seq.scan_files.size();
    fail(seq.root, msg.str());
  }
  for (std::size_t i = 0; i + 1 < seq.poses_absolute.size(); ++i) {
    seq.poses_relative.push_back(seq.poses_absolute[i].inverse() *
                                 seq.poses_absolute[i + 1]);
  }
  seq.has_labels = fs::is_directory(seq.root / "labels");
  return seq;
}

}  // namespace mos
