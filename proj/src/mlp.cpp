#include "mos/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>

namespace mos {

std::vector<int> ModelSpec::layer_sizes() const {
  std::vector<int> sizes;
  sizes.push_back(input_size());
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  return sizes;
}

void ModelSpec::validate() const {
  if (channels < 1) throw std::invalid_argument("ModelSpec: channels must be >= 1");
  if (window < 1 || window % 2 == 0)
    throw std::invalid_argument("ModelSpec: window must be odd and >= 1, got " +
                                std::to_string(window));
  for (int hsize : hidden)
    if (hsize < 1) throw std::invalid_argument("ModelSpec: hidden sizes must be >= 1");
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be > 0");
  if (batch < 2) throw std::invalid_argument("TrainConfig: batch must be >= 2");
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (max_steps_per_epoch < 1)
    throw std::invalid_argument("TrainConfig: max_steps_per_epoch must be >= 1");
  if (!(moving_weight > 0.0))
    throw std::invalid_argument("TrainConfig: moving_weight must be > 0");
}

ModelParams zero_params(const ModelSpec& spec) {
  spec.validate();
  const std::vector<int> sizes = spec.layer_sizes();
  ModelParams out;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    out.weights.emplace_back(std::size_t(sizes[l + 1]) * std::size_t(sizes[l]), 0.0);
    out.biases.emplace_back(std::size_t(sizes[l + 1]), 0.0);
  }
  return out;
}

ModelParams init_params(const ModelSpec& spec, std::uint64_t seed) {
  ModelParams out = zero_params(spec);
  const std::vector<int> sizes = spec.layer_sizes();
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < out.weights.size(); ++l) {
    const double limit = std::sqrt(6.0 / double(sizes[l] + sizes[l + 1]));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& w : out.weights[l]) w = dist(rng);
  }
  return out;
}

namespace {

void check_params(const ModelSpec& spec, const ModelParams& params, const char* who) {
  const std::vector<int> sizes = spec.layer_sizes();
  if (params.weights.size() + 1 != sizes.size() ||
      params.biases.size() + 1 != sizes.size())
    throw std::invalid_argument(std::string(who) + ": layer count mismatch");
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    if (params.weights[l].size() != std::size_t(sizes[l + 1]) * std::size_t(sizes[l]) ||
        params.biases[l].size() != std::size_t(sizes[l + 1]))
      throw std::invalid_argument(std::string(who) + ": layer " + std::to_string(l) +
                                  " has wrong parameter shape");
  }
}

// act[0] = input, act[l+1] = layer l output; the last layer stays linear.
double forward_store(const ModelSpec& spec, const ModelParams& params,
                     std::span<const double> input,
                     std::vector<std::vector<double>>& act) {
  const std::vector<int> sizes = spec.layer_sizes();
  act.resize(sizes.size());
  act[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int in = sizes[l], out = sizes[l + 1];
    act[l + 1].assign(std::size_t(out), 0.0);
    const bool last = l + 2 == sizes.size();
    for (int o = 0; o < out; ++o) {
      const double* wrow = params.weights[l].data() + std::size_t(o) * in;
      double z = params.biases[l][std::size_t(o)];
      for (int i = 0; i < in; ++i) z += wrow[i] * act[l][std::size_t(i)];
      if (!std::isfinite(z))
        throw std::runtime_error("mlp: non-finite activation in layer " +
                                 std::to_string(l));
      act[l + 1][std::size_t(o)] = last ? z : std::tanh(z);
    }
  }
  return act.back()[0];
}

inline double sigmoid(double s) { return 1.0 / (1.0 + std::exp(-s)); }

// numerically stable weighted BCE on a logit
inline double bce(double s, double t, double w) {
  return w * (std::max(s, 0.0) - s * t + std::log1p(std::exp(-std::abs(s))));
}

}  // namespace

double forward_logit(const ModelSpec& spec, const ModelParams& params,
                     std::span<const double> input) {
  spec.validate();
  check_params(spec, params, "forward_logit");
  if (input.size() != std::size_t(spec.input_size()))
    throw std::invalid_argument("forward_logit: input has " +
                                std::to_string(input.size()) + " values, expected " +
                                std::to_string(spec.input_size()));
  std::vector<std::vector<double>> act;
  return forward_store(spec, params, input, act);
}

double loss_and_grad(const ModelSpec& spec, const ModelParams& params,
                     std::span<const double> inputs,
                     std::span<const double> targets,
                     std::span<const double> sample_weights, ModelParams& grad) {
  spec.validate();
  check_params(spec, params, "loss_and_grad");
  const std::size_t in_size = std::size_t(spec.input_size());
  if (inputs.size() % in_size != 0)
    throw std::invalid_argument("loss_and_grad: inputs not a multiple of input size");
  const std::size_t batch = inputs.size() / in_size;
  if (batch == 0) throw std::invalid_argument("loss_and_grad: empty batch");
  if (targets.size() != batch || sample_weights.size() != batch)
    throw std::invalid_argument("loss_and_grad: batch size mismatch");

  grad = zero_params(spec);
  const std::vector<int> sizes = spec.layer_sizes();
  const std::size_t layers = grad.weights.size();

  std::vector<std::vector<double>> act;
  std::vector<double> delta, delta_prev;
  double loss = 0.0;

  for (std::size_t b = 0; b < batch; ++b) {
    const double s =
        forward_store(spec, params, inputs.subspan(b * in_size, in_size), act);
    const double t = targets[b];
    const double w = sample_weights[b];
    loss += bce(s, t, w);

    delta.assign(1, w * (sigmoid(s) - t));
    for (std::size_t l = layers; l-- > 0;) {
      const int in = sizes[l], out = sizes[l + 1];
      for (int o = 0; o < out; ++o) {
        double* grow = grad.weights[l].data() + std::size_t(o) * in;
        const double d = delta[std::size_t(o)];
        for (int i = 0; i < in; ++i) grow[i] += d * act[l][std::size_t(i)];
        grad.biases[l][std::size_t(o)] += d;
      }
      if (l == 0) break;
      delta_prev.assign(std::size_t(in), 0.0);
      for (int o = 0; o < out; ++o) {
        const double* wrow = params.weights[l].data() + std::size_t(o) * in;
        const double d = delta[std::size_t(o)];
        for (int i = 0; i < in; ++i) delta_prev[std::size_t(i)] += wrow[i] * d;
      }
      for (int i = 0; i < in; ++i) {
        const double a = act[l][std::size_t(i)];
        delta_prev[std::size_t(i)] *= 1.0 - a * a;
      }
      delta.swap(delta_prev);
    }
  }

  const double inv = 1.0 / double(batch);
  for (std::size_t l = 0; l < layers; ++l) {
    for (double& g : grad.weights[l]) g *= inv;
    for (double& g : grad.biases[l]) g *= inv;
  }
  return loss * inv;
}

void extract_patch(const FusedInput& fused, int v, int u, int window,
                   std::span<double> out) {
  const int channels = int(fused.channels.size());
  if (out.size() != std::size_t(channels) * window * window)
    throw std::invalid_argument("extract_patch: output span has wrong size");
  const int h = fused.cfg.height, w = fused.cfg.width;
  const int half = window / 2;
  std::size_t o = 0;
  for (int ch = 0; ch < channels; ++ch) {
    const Grid<float>& g = fused.channels[std::size_t(ch)];
    const double pad = (0.0 - fused.norm.mean[std::size_t(ch)]) /
                       fused.norm.scale[std::size_t(ch)];
    for (int dv = -half; dv <= half; ++dv) {
      const int vv = v + dv;
      for (int du = -half; du <= half; ++du, ++o) {
        const int uu = ((u + du) % w + w) % w;
        out[o] = (vv < 0 || vv >= h) ? pad : double(g(vv, uu));
      }
    }
  }
}

TrainResult train(const ModelSpec& spec, std::span<const TrainFrame> frames,
                  const TrainConfig& cfg) {
  spec.validate();
  cfg.validate();
  if (frames.empty()) throw std::invalid_argument("train: no frames");
  for (const TrainFrame& f : frames) {
    if (int(f.fused.channels.size()) != spec.channels)
      throw std::invalid_argument("train: frame has " +
                                  std::to_string(f.fused.channels.size()) +
                                  " channels, model wants " +
                                  std::to_string(spec.channels));
    if (!(f.fused.norm == frames[0].fused.norm))
      throw std::invalid_argument("train: frames normalized inconsistently");
    if (f.labels.height() != f.fused.cfg.height ||
        f.labels.width() != f.fused.cfg.width)
      throw std::invalid_argument("train: label grid shape mismatch");
  }

  struct Sample {
    std::int32_t frame;
    std::int32_t cell;
  };
  std::vector<Sample> moving, stat;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const TrainFrame& fr = frames[f];
    for (std::size_t c = 0; c < fr.labels.size(); ++c) {
      if (!fr.fused.valid.data()[c]) continue;
      if (fr.labels.data()[c] == MovingLabel::Moving)
        moving.push_back({std::int32_t(f), std::int32_t(c)});
      else if (fr.labels.data()[c] == MovingLabel::Static)
        stat.push_back({std::int32_t(f), std::int32_t(c)});
    }
  }
  if (moving.empty() || stat.empty())
    throw std::runtime_error("train: need both moving and static pixels, got " +
                             std::to_string(moving.size()) + " moving / " +
                             std::to_string(stat.size()) + " static");

  const std::size_t in_size = std::size_t(spec.input_size());
  const int width = frames[0].fused.cfg.width;
  const int half_batch = cfg.batch / 2;
  const std::int64_t steps = std::min<std::int64_t>(
      cfg.max_steps_per_epoch,
      std::max<std::int64_t>(1, std::int64_t(moving.size() + stat.size()) / cfg.batch));

  std::vector<double> inputs(std::size_t(cfg.batch) * in_size);
  std::vector<double> targets(std::size_t(cfg.batch));
  std::vector<double> weights(std::size_t(cfg.batch));

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick_moving(0, moving.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_static(0, stat.size() - 1);

  TrainResult result;
  result.params = init_params(spec, cfg.seed);
  ModelParams grad;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (std::int64_t step = 0; step < steps; ++step) {
      for (int b = 0; b < cfg.batch; ++b) {
        const bool is_moving = b < half_batch;
        const Sample s = is_moving ? moving[pick_moving(rng)] : stat[pick_static(rng)];
        const TrainFrame& fr = frames[std::size_t(s.frame)];
        extract_patch(fr.fused, s.cell / width, s.cell % width, spec.window,
                      std::span<double>(inputs.data() + std::size_t(b) * in_size,
                                        in_size));
        targets[std::size_t(b)] = is_moving ? 1.0 : 0.0;
        weights[std::size_t(b)] = is_moving ? cfg.moving_weight : 1.0;
      }
      epoch_loss += loss_and_grad(spec, result.params, inputs, targets, weights, grad);
      for (std::size_t l = 0; l < grad.weights.size(); ++l) {
        for (std::size_t i = 0; i < grad.weights[l].size(); ++i)
          result.params.weights[l][i] -= cfg.lr * grad.weights[l][i];
        for (std::size_t i = 0; i < grad.biases[l].size(); ++i)
          result.params.biases[l][i] -= cfg.lr * grad.biases[l][i];
      }
    }
    result.epoch_loss.push_back(epoch_loss / double(steps));
  }
  return result;
}

Grid<MovingLabel> predict_image(const Model& model, const FusedInput& fused,
                                Exec exec) {
  model.spec.validate();
  check_params(model.spec, model.params, "predict_image");
  if (int(fused.channels.size()) != model.spec.channels)
    throw std::invalid_argument("predict_image: input has " +
                                std::to_string(fused.channels.size()) +
                                " channels, model wants " +
                                std::to_string(model.spec.channels));
  if (!(model.norm == fused.norm))
    throw std::invalid_argument(
        "predict_image: input was normalized differently from the model");

  const int h = fused.cfg.height, w = fused.cfg.width;
  Grid<MovingLabel> out(h, w, MovingLabel::Ignore);
  const std::size_t in_size = std::size_t(model.spec.input_size());
  const std::int64_t total = std::int64_t(h) * w;

  auto classify_cell = [&](std::int64_t c, std::vector<double>& patch) {
    if (!fused.valid.data()[std::size_t(c)]) return;
    extract_patch(fused, int(c / w), int(c % w), model.spec.window,
                  std::span<double>(patch));
    const double s = forward_logit(model.spec, model.params, patch);
    out.data()[std::size_t(c)] = s > 0.0 ? MovingLabel::Moving : MovingLabel::Static;
  };

  if (exec == Exec::Parallel) {
#pragma omp parallel
    {
      std::vector<double> patch(in_size);
#pragma omp for schedule(static)
      for (std::int64_t c = 0; c < total; ++c) classify_cell(c, patch);
    }
  } else {
    std::vector<double> patch(in_size);
    for (std::int64_t c = 0; c < total; ++c) classify_cell(c, patch);
  }
  return out;
}

namespace {

constexpr char kMagic[8] = {'M', 'O', 'S', 'M', 'L', 'P', '0', '1'};

template <typename T>
void put(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T take(std::ifstream& in, const std::filesystem::path& path, const char* what) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in)
    throw std::runtime_error("load_model: " + path.string() + " truncated reading " +
                             what);
  return value;
}

void take_doubles(std::ifstream& in, const std::filesystem::path& path,
                  const char* what, std::vector<double>& out) {
  in.read(reinterpret_cast<char*>(out.data()),
          std::streamsize(out.size() * sizeof(double)));
  if (!in)
    throw std::runtime_error("load_model: " + path.string() + " truncated reading " +
                             what);
}

}  // namespace

void save_model(const std::filesystem::path& path, const Model& model) {
  model.spec.validate();
  model.norm.validate();
  check_params(model.spec, model.params, "save_model");
  if (model.norm.channels() != model.spec.channels)
    throw std::invalid_argument("save_model: normalization channel count mismatch");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_model: cannot open " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put(out, std::int32_t(model.spec.channels));
  put(out, std::int32_t(model.spec.window));
  put(out, std::int32_t(model.spec.hidden.size()));
  for (int hsize : model.spec.hidden) put(out, std::int32_t(hsize));
  out.write(reinterpret_cast<const char*>(model.norm.mean.data()),
            std::streamsize(model.norm.mean.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(model.norm.scale.data()),
            std::streamsize(model.norm.scale.size() * sizeof(double)));
  for (std::size_t l = 0; l < model.params.weights.size(); ++l) {
    out.write(reinterpret_cast<const char*>(model.params.weights[l].data()),
              std::streamsize(model.params.weights[l].size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(model.params.biases[l].data()),
              std::streamsize(model.params.biases[l].size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("save_model: write failed for " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_model: cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("load_model: " + path.string() +
                             " is not a model file (bad magic)");

  Model model;
  model.spec.channels = take<std::int32_t>(in, path, "channels");
  model.spec.window = take<std::int32_t>(in, path, "window");
  const std::int32_t n_hidden = take<std::int32_t>(in, path, "hidden count");
  if (n_hidden < 0 || n_hidden > 64)
    throw std::runtime_error("load_model: " + path.string() +
                             " has an implausible hidden layer count");
  model.spec.hidden.clear();
  for (std::int32_t l = 0; l < n_hidden; ++l)
    model.spec.hidden.push_back(take<std::int32_t>(in, path, "hidden size"));
  model.spec.validate();

  model.norm.mean.resize(std::size_t(model.spec.channels));
  model.norm.scale.resize(std::size_t(model.spec.channels));
  take_doubles(in, path, "normalization means", model.norm.mean);
  take_doubles(in, path, "normalization scales", model.norm.scale);
  model.norm.validate();

  model.params = zero_params(model.spec);
  for (std::size_t l = 0; l < model.params.weights.size(); ++l) {
    take_doubles(in, path, "weights", model.params.weights[l]);
    take_doubles(in, path, "biases", model.params.biases[l]);
  }
  in.peek();
  if (!in.eof())
    throw std::runtime_error("load_model: " + path.string() +
                             " has trailing bytes");
  return model;
}

}  // namespace mos
