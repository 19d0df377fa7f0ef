#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mos/evaluation.hpp"
#include "mos/map_builder.hpp"
#include "mos/mlp.hpp"
#include "mos/pipeline.hpp"
#include "mos/synth.hpp"

namespace mos {

/// The CLI subcommands, callable in-process. All of them throw on bad
/// input or I/O failure; the CLI turns that into stderr + exit code 1.

struct InferOptions {
  std::filesystem::path dataset_root;
  std::filesystem::path output_root;
  std::vector<std::string> sequences;
  PipelineConfig pipeline;
  std::filesystem::path model_path;      // required for method "learned"
  std::filesystem::path class_map_path;  // optional
  std::filesystem::path dump_dir;        // optional range/residual dumps
  bool print_timings = false;
};
void cmd_infer(const InferOptions& opt);

struct EvalOptions {
  std::filesystem::path dataset_root;
  std::filesystem::path pred_root;
  std::vector<std::string> sequences;
  std::filesystem::path report_path;     // optional key-value report
  std::filesystem::path class_map_path;  // optional
};
void cmd_eval(const EvalOptions& opt);

struct TrainOptions {
  std::filesystem::path dataset_root;
  std::vector<std::string> sequences;
  std::filesystem::path model_out;
  int n_residual = 1;
  ProjectionConfig proj;
  int window = 5;
  std::vector<int> hidden = {64, 32};
  TrainConfig train;
  int noise_units = 0;
  std::uint64_t noise_seed = 1;
  std::filesystem::path class_map_path;  // optional
};
void cmd_train(const TrainOptions& opt);

struct SynthOptions {
  std::string preset = "busy-intersection";
  std::filesystem::path out_root;
  std::vector<std::string> sequence_ids = {"00"};
  std::uint64_t seed = 1;
};
void cmd_synth(const SynthOptions& opt);

struct CleanMapOptions {
  std::filesystem::path dataset_root;
  std::string sequence;
  std::filesystem::path pred_root;  // empty: use ground-truth labels
  std::filesystem::path out_ply;
  double voxel = 0.0;  // 0: keep every point
  bool ascii = false;
  std::filesystem::path class_map_path;  // optional
};
void cmd_clean_map(const CleanMapOptions& opt);

ClassMap load_class_map_or_default(const std::filesystem::path& path);

}  // namespace mos
