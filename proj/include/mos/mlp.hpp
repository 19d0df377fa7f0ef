#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mos/residual.hpp"

namespace mos {

/// Per-pixel classifier: a window x window patch of every fused channel,
/// flattened, through tanh hidden layers into a single logit.
struct ModelSpec {
  int channels = 6;  // 5 + residual count
  int window = 5;    // odd
  std::vector<int> hidden = {64, 32};

  int input_size() const { return channels * window * window; }
  std::vector<int> layer_sizes() const;  // input, hidden..., 1
  void validate() const;
  bool operator==(const ModelSpec&) const = default;
};

/// weights[l] is out x in row-major, biases[l] has out entries.
struct ModelParams {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
};

ModelParams init_params(const ModelSpec& spec, std::uint64_t seed);
ModelParams zero_params(const ModelSpec& spec);

/// Logit of one flattened input.
double forward_logit(const ModelSpec& spec, const ModelParams& params,
                     std::span<const double> input);

/// Mean class-weighted binary cross-entropy over a batch plus its analytic
/// gradient. inputs is batch-major (size B * input_size), targets are 0/1,
/// sample_weights scale each sample's loss.
double loss_and_grad(const ModelSpec& spec, const ModelParams& params,
                     std::span<const double> inputs,
                     std::span<const double> targets,
                     std::span<const double> sample_weights, ModelParams& grad);

/// Copies the patch centered on (v, u) into out (channel-major). Azimuth
/// wraps; rows outside the image read as a raw zero put through the
/// channel's normalization, the same value invalid pixels carry.
void extract_patch(const FusedInput& fused, int v, int u, int window,
                   std::span<double> out);

struct TrainFrame {
  FusedInput fused;
  Grid<MovingLabel> labels;
};

struct TrainConfig {
  double lr = 0.01;
  int batch = 256;
  int epochs = 30;
  int max_steps_per_epoch = 100;
  double moving_weight = 1.0;
  std::uint64_t seed = 42;

  void validate() const;
};

struct TrainResult {
  ModelParams params;
  std::vector<double> epoch_loss;
};

/// Seeded SGD on balanced batches (half moving, half static, drawn with
/// replacement from all labeled valid pixels). Strictly serial so repeat
/// runs are bitwise identical.
TrainResult train(const ModelSpec& spec, std::span<const TrainFrame> frames,
                  const TrainConfig& cfg);

struct Model {
  ModelSpec spec;
  NormalizationSpec norm;
  ModelParams params;
};

/// Valid pixels with sigmoid(logit) > 0.5 become Moving, the rest of the
/// valid pixels Static, invalid pixels Ignore. Throws if the fused input
/// was normalized differently from the model.
Grid<MovingLabel> predict_image(const Model& model, const FusedInput& fused,
                                Exec exec = Exec::Parallel);

void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

}  // namespace mos
