#include "mos/commands.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <stdexcept>

namespace mos {

namespace fs = std::filesystem;

ClassMap load_class_map_or_default(const fs::path& path) {
  return path.empty() ? ClassMap::semantic_kitti() : ClassMap::load(path);
}

namespace {

std::string frame_name(const fs::path& scan_file, const char* ext) {
  return scan_file.stem().string() + ext;
}

std::optional<Model> load_model_for(const PipelineConfig& cfg,
                                    const fs::path& model_path) {
  if (cfg.method != "learned") return std::nullopt;
  if (model_path.empty())
    throw std::invalid_argument("infer: method 'learned' needs --model");
  return load_model(model_path);
}

}  // namespace

void cmd_infer(const InferOptions& opt) {
  const ClassMap map = load_class_map_or_default(opt.class_map_path);
  PipelineConfig cfg = opt.pipeline;
  std::optional<Model> model = load_model_for(cfg, opt.model_path);
  if (model) cfg.n_residual = model->spec.channels - 5;

  for (const std::string& id : opt.sequences) {
    const DatasetSequence seq = load_sequence(opt.dataset_root, id);
    const fs::path pred_dir = opt.output_root / "sequences" / id / "predictions";
    fs::create_directories(pred_dir);
    fs::path dump_dir;
    if (!opt.dump_dir.empty()) {
      dump_dir = opt.dump_dir / id;
      fs::create_directories(dump_dir);
    }

    Pipeline pipeline(cfg, model);
    FrameTimings sums;
    for (std::size_t f = 0; f < seq.size(); ++f) {
      const Scan scan = seq.read_scan(f);
      const Pose* rel = f > 0 ? &seq.poses_relative[f - 1] : nullptr;
      FrameTimings t;
      const std::vector<MovingLabel> labels = pipeline.process(scan, rel, &t);
      write_prediction_labels(
          pred_dir / frame_name(seq.scan_files[f], ".label"), labels, map);
      if (!dump_dir.empty()) {
        dump_range_image(dump_dir / frame_name(seq.scan_files[f], ".range.f32"),
                         pipeline.last_projection().image);
        if (cfg.n_residual > 0)
          dump_stack(dump_dir / frame_name(seq.scan_files[f], ".residual.f32"),
                     pipeline.last_stack());
      }
      sums.project_ms += t.project_ms;
      sums.residual_ms += t.residual_ms;
      sums.segment_ms += t.segment_ms;
      sums.post_ms += t.post_ms;
      sums.total_ms += t.total_ms;
    }
    if (opt.print_timings && seq.size() > 0) {
      const double n = double(seq.size());
      std::cout << "sequence " << id << " mean ms/frame: project "
                << sums.project_ms / n << " residual " << sums.residual_ms / n
                << " segment " << sums.segment_ms / n << " post "
                << sums.post_ms / n << " total " << sums.total_ms / n << "\n";
    }
  }
}

void cmd_eval(const EvalOptions& opt) {
  const ClassMap map = load_class_map_or_default(opt.class_map_path);
  const EvalReport report =
      evaluate_predictions(opt.dataset_root, opt.pred_root, opt.sequences, map);
  write_report_text(std::cout, report);
  if (!opt.report_path.empty()) {
    std::ofstream out(opt.report_path);
    if (!out)
      throw std::runtime_error("eval: cannot open " + opt.report_path.string());
    write_report_kv(out, report);
  }
}

void cmd_train(const TrainOptions& opt) {
  const ClassMap map = load_class_map_or_default(opt.class_map_path);
  if (opt.sequences.empty())
    throw std::invalid_argument("train: at least one sequence required");

  PipelineConfig stream_cfg;
  stream_cfg.proj = opt.proj;
  stream_cfg.n_residual = opt.n_residual;
  stream_cfg.method = "residual";
  stream_cfg.noise_units = opt.noise_units;
  stream_cfg.noise_seed = opt.noise_seed;

  // pass 1: channel statistics
  NormalizationEstimator estimator(opt.n_residual);
  for (const std::string& id : opt.sequences) {
    const DatasetSequence seq = load_sequence(opt.dataset_root, id);
    if (!seq.has_labels)
      throw std::runtime_error("train: sequence " + id + " has no labels");
    Pipeline pipeline(stream_cfg);
    for (std::size_t f = 0; f < seq.size(); ++f) {
      const Scan scan = seq.read_scan(f);
      const Pose* rel = f > 0 ? &seq.poses_relative[f - 1] : nullptr;
      pipeline.process(scan, rel);
      estimator.add(pipeline.last_projection().image, pipeline.last_stack());
    }
  }
  const NormalizationSpec norm = estimator.finalize();

  // pass 2: fused inputs and per-pixel targets
  std::vector<TrainFrame> frames;
  for (const std::string& id : opt.sequences) {
    const DatasetSequence seq = load_sequence(opt.dataset_root, id);
    Pipeline pipeline(stream_cfg);
    for (std::size_t f = 0; f < seq.size(); ++f) {
      const Scan scan = seq.read_scan(f);
      const Pose* rel = f > 0 ? &seq.poses_relative[f - 1] : nullptr;
      pipeline.process(scan, rel);
      const RangeImage& image = pipeline.last_projection().image;

      const std::vector<MovingLabel> gt =
          read_semantic_labels(seq.label_file(f), scan.size(), map);
      Grid<MovingLabel> target(opt.proj.height, opt.proj.width,
                               MovingLabel::Ignore);
      for (std::size_t c = 0; c < target.size(); ++c)
        if (image.index.data()[c] >= 0)
          target.data()[c] = gt[std::size_t(image.index.data()[c])];

      frames.push_back(
          {fuse(image, pipeline.last_stack(), norm), std::move(target)});
    }
  }

  ModelSpec spec;
  spec.channels = 5 + opt.n_residual;
  spec.window = opt.window;
  spec.hidden = opt.hidden;
  const TrainResult result = train(spec, frames, opt.train);

  if (!opt.model_out.parent_path().empty())
    fs::create_directories(opt.model_out.parent_path());
  save_model(opt.model_out, Model{spec, norm, result.params});
  std::cout << std::setprecision(6) << "trained on " << frames.size()
            << " frames, loss " << result.epoch_loss.front() << " -> "
            << result.epoch_loss.back() << ", model written to "
            << opt.model_out.string() << "\n";
}

void cmd_synth(const SynthOptions& opt) {
  const ClassMap map = ClassMap::semantic_kitti();
  for (std::size_t i = 0; i < opt.sequence_ids.size(); ++i) {
    const SceneSpec scene = make_preset(opt.preset, opt.seed + i);
    const std::vector<Scan> frames = render_sequence(scene);
    write_sequence(opt.out_root, opt.sequence_ids[i], scene, frames, map);
    std::size_t points = 0;
    for (const Scan& s : frames) points += s.size();
    std::cout << "wrote " << opt.preset << " sequence " << opt.sequence_ids[i]
              << ": " << frames.size() << " frames, " << points << " points\n";
  }
}

void cmd_clean_map(const CleanMapOptions& opt) {
  const ClassMap map = load_class_map_or_default(opt.class_map_path);
  const DatasetSequence seq = load_sequence(opt.dataset_root, opt.sequence);

  std::vector<Scan> scans;
  std::vector<std::vector<MovingLabel>> labels;
  for (std::size_t f = 0; f < seq.size(); ++f) {
    scans.push_back(seq.read_scan(f));
    if (opt.pred_root.empty()) {
      if (!seq.has_labels)
        throw std::runtime_error("clean-map: sequence " + opt.sequence +
                                 " has no labels; pass a prediction root");
      labels.push_back(read_semantic_labels(seq.label_file(f),
                                            scans.back().size(), map));
    } else {
      const fs::path pred = opt.pred_root / "sequences" / opt.sequence /
                            "predictions" /
                            frame_name(seq.scan_files[f], ".label");
      labels.push_back(read_semantic_labels(pred, scans.back().size(), map));
    }
  }

  MapBuildResult built = build_map(scans, seq.poses_absolute, labels);
  MapCloud cloud = std::move(built.cloud);
  const std::size_t before = cloud.points.size();
  if (opt.voxel > 0.0) cloud = voxel_downsample(cloud, opt.voxel);

  if (!opt.out_ply.parent_path().empty())
    fs::create_directories(opt.out_ply.parent_path());
  export_ply(opt.out_ply, cloud, !opt.ascii);
  std::cout << "map: kept " << before << " points, removed "
            << built.removed_moving << " moving";
  if (opt.voxel > 0.0)
    std::cout << ", " << cloud.points.size() << " after " << opt.voxel
              << " m voxel grid";
  std::cout << ", wrote " << opt.out_ply.string() << "\n";
}

}  // namespace mos
