#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "doctest.h"
#include "mos/mlp.hpp"

using namespace mos;

namespace {

template <typename Fn>
bool throws_mentioning(Fn&& fn, const char* needle) {
  try {
    fn();
  } catch (const std::runtime_error& e) {
    return std::string(e.what()).find(needle) != std::string::npos;
  }
  return false;
}

FusedInput toy_fused(int h, int w, int channels) {
  FusedInput fused;
  fused.cfg.height = h;
  fused.cfg.width = w;
  fused.n = channels - 5;  // may be negative; only channel count matters here
  fused.norm = identity_normalization(channels);
  fused.channels.assign(std::size_t(channels), Grid<float>(h, w, 0.0f));
  fused.valid = Grid<std::uint8_t>(h, w, 1);
  return fused;
}

}  // namespace

TEST_CASE("a linear model computes w.x + b") {
  ModelSpec spec;
  spec.channels = 2;
  spec.window = 1;
  spec.hidden = {};
  ModelParams params = zero_params(spec);
  params.weights[0] = {2.0, -3.0};
  params.biases[0] = {0.5};

  const std::vector<double> input = {1.0, 2.0};
  CHECK(forward_logit(spec, params, input) == doctest::Approx(-3.5));
}

TEST_CASE("hidden layers apply tanh between affine maps") {
  ModelSpec spec;
  spec.channels = 1;
  spec.window = 1;
  spec.hidden = {1};
  ModelParams params = zero_params(spec);
  params.weights[0] = {0.7};
  params.biases[0] = {-0.2};
  params.weights[1] = {1.3};
  params.biases[1] = {0.4};

  const double x = 0.9;
  const double want = 1.3 * std::tanh(0.7 * x - 0.2) + 0.4;
  CHECK(forward_logit(spec, params, {&x, 1}) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("zero parameters sit at ln 2 loss on any batch") {
  ModelSpec spec;
  spec.channels = 3;
  spec.window = 1;
  spec.hidden = {4};
  const ModelParams params = zero_params(spec);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> val(-2.0, 2.0);
  const std::size_t batch = 10;
  std::vector<double> inputs(batch * 3), targets(batch), weights(batch, 1.0);
  for (auto& x : inputs) x = val(rng);
  for (std::size_t b = 0; b < batch; ++b) targets[b] = b % 2 ? 1.0 : 0.0;

  ModelParams grad;
  const double loss = loss_and_grad(spec, params, inputs, targets, weights, grad);
  CHECK(loss == doctest::Approx(std::numbers::ln2).epsilon(1e-12));
}

TEST_CASE("analytic gradients match central finite differences") {
  ModelSpec spec;
  spec.channels = 2;
  spec.window = 1;
  spec.hidden = {3, 2};
  ModelParams params = init_params(spec, 7);
  for (auto& b : params.biases)
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = 0.05 * double(i + 1);

  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> val(-1.5, 1.5);
  const std::size_t batch = 5;
  std::vector<double> inputs(batch * 2), targets(batch), weights(batch);
  for (auto& x : inputs) x = val(rng);
  for (std::size_t b = 0; b < batch; ++b) {
    targets[b] = b % 2 ? 1.0 : 0.0;
    weights[b] = b == 0 ? 2.5 : 1.0;
  }

  ModelParams grad;
  loss_and_grad(spec, params, inputs, targets, weights, grad);

  const double eps = 1e-6;
  ModelParams dummy;
  auto fd = [&](double& slot) {
    const double saved = slot;
    slot = saved + eps;
    const double up = loss_and_grad(spec, params, inputs, targets, weights, dummy);
    slot = saved - eps;
    const double down = loss_and_grad(spec, params, inputs, targets, weights, dummy);
    slot = saved;
    return (up - down) / (2.0 * eps);
  };

  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    for (std::size_t i = 0; i < params.weights[l].size(); ++i) {
      const double numeric = fd(params.weights[l][i]);
      CHECK(grad.weights[l][i] == doctest::Approx(numeric).epsilon(1e-5));
    }
    for (std::size_t i = 0; i < params.biases[l].size(); ++i) {
      const double numeric = fd(params.biases[l][i]);
      CHECK(grad.biases[l][i] == doctest::Approx(numeric).epsilon(1e-5));
    }
  }
}

TEST_CASE("patches are channel-major, wrap in azimuth and pad beyond rows") {
  FusedInput fused = toy_fused(3, 4, 2);
  fused.norm.mean = {1.0, 2.0};
  fused.norm.scale = {2.0, 4.0};
  for (int v = 0; v < 3; ++v)
    for (int u = 0; u < 4; ++u) {
      fused.channels[0](v, u) = float(10 * v + u);
      fused.channels[1](v, u) = float(100 + 10 * v + u);
    }

  std::vector<double> patch(2 * 3 * 3);
  extract_patch(fused, 0, 0, 3, patch);

  const double pad0 = (0.0 - 1.0) / 2.0;
  const double pad1 = (0.0 - 2.0) / 4.0;
  const std::vector<double> want = {
      pad0, pad0, pad0, 3,   0,   1,   13,  10,  11,   // channel 0
      pad1, pad1, pad1, 103, 100, 101, 113, 110, 111,  // channel 1
  };
  REQUIRE(patch.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i)
    CHECK(patch[i] == doctest::Approx(want[i]));

  CHECK_THROWS_AS(extract_patch(fused, 0, 0, 3, std::span<double>(patch).first(4)),
                  std::invalid_argument);
}

TEST_CASE("prediction thresholds the logit and skips invalid pixels") {
  Model model;
  model.spec.channels = 1;
  model.spec.window = 1;
  model.spec.hidden = {};
  model.norm = identity_normalization(1);
  model.params = zero_params(model.spec);
  model.params.weights[0] = {1.0};  // logit == pixel value

  FusedInput fused = toy_fused(2, 3, 1);
  fused.channels[0](0, 0) = 2.0f;
  fused.channels[0](0, 1) = -2.0f;
  fused.channels[0](0, 2) = 0.0f;  // logit exactly 0 -> static
  fused.channels[0](1, 0) = 5.0f;
  fused.valid(1, 0) = 0;

  const Grid<MovingLabel> out = predict_image(model, fused, Exec::Serial);
  CHECK(out(0, 0) == MovingLabel::Moving);
  CHECK(out(0, 1) == MovingLabel::Static);
  CHECK(out(0, 2) == MovingLabel::Static);
  CHECK(out(1, 0) == MovingLabel::Ignore);

  FusedInput other = fused;
  other.norm.mean[0] = 0.5;
  CHECK_THROWS_AS(predict_image(model, other), std::invalid_argument);
}

TEST_CASE("training separates a toy problem deterministically") {
  const int h = 8, w = 16;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> noise(-0.2, 0.2);

  TrainFrame frame;
  frame.fused = toy_fused(h, w, 1);
  frame.labels = Grid<MovingLabel>(h, w, MovingLabel::Static);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const bool moving = (v + u) % 3 == 0;
      frame.fused.channels[0](v, u) = float((moving ? 1.0 : -1.0) + noise(rng));
      frame.labels(v, u) = moving ? MovingLabel::Moving : MovingLabel::Static;
    }
  frame.labels(0, 1) = MovingLabel::Ignore;  // ignored pixels never train

  ModelSpec spec;
  spec.channels = 1;
  spec.window = 1;
  spec.hidden = {4};

  TrainConfig cfg;
  cfg.lr = 0.5;
  cfg.batch = 32;
  cfg.epochs = 30;
  cfg.seed = 17;

  const std::vector<TrainFrame> frames = {frame};
  const TrainResult a = train(spec, frames, cfg);
  const TrainResult b = train(spec, frames, cfg);
  CHECK(a.params.weights == b.params.weights);  // bitwise repeatable
  CHECK(a.params.biases == b.params.biases);
  CHECK(a.epoch_loss == b.epoch_loss);

  REQUIRE(a.epoch_loss.size() == 30);
  CHECK(a.epoch_loss.back() < 0.1);
  CHECK(a.epoch_loss.back() < a.epoch_loss.front());

  Model model{spec, frame.fused.norm, a.params};
  const Grid<MovingLabel> pred = predict_image(model, frame.fused, Exec::Serial);
  const Grid<MovingLabel> pred_par = predict_image(model, frame.fused, Exec::Parallel);
  CHECK(pred == pred_par);
  int wrong = 0;
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
      wrong += pred(v, u) != ((v + u) % 3 == 0 ? MovingLabel::Moving
                                               : MovingLabel::Static);
  CHECK(wrong <= 2);  // the noisy toy data may leave a stray pixel

  TrainConfig other = cfg;
  other.seed = 18;
  const TrainResult c = train(spec, frames, other);
  CHECK(c.params.weights != a.params.weights);  // the seed matters

  TrainFrame all_static = frame;
  all_static.labels = Grid<MovingLabel>(h, w, MovingLabel::Static);
  CHECK_THROWS_AS(train(spec, std::vector<TrainFrame>{all_static}, cfg),
                  std::runtime_error);
}

TEST_CASE("models survive a save/load round trip bit for bit") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "mos_mlp_io";
  fs::create_directories(dir);

  ModelSpec spec;
  spec.channels = 6;
  spec.window = 3;
  spec.hidden = {8, 4};
  Model model;
  model.spec = spec;
  model.norm = identity_normalization(6);
  model.norm.mean[2] = -1.25;
  model.norm.scale[3] = 0.75;
  model.params = init_params(spec, 5);

  const fs::path path = dir / "model.bin";
  save_model(path, model);
  const Model back = load_model(path);
  CHECK(back.spec == model.spec);
  CHECK(back.norm == model.norm);
  CHECK(back.params.weights == model.params.weights);
  CHECK(back.params.biases == model.params.biases);

  {
    std::ofstream out(dir / "junk.bin", std::ios::binary);
    out << "NOTAMODEL";
  }
  CHECK(throws_mentioning([&] { load_model(dir / "junk.bin"); }, "bad magic"));

  {
    std::ifstream in(path, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    bytes.resize(bytes.size() - 9);
    std::ofstream out(dir / "cut.bin", std::ios::binary);
    out.write(bytes.data(), std::streamsize(bytes.size()));
  }
  CHECK(throws_mentioning([&] { load_model(dir / "cut.bin"); }, "truncated"));

  {
    std::ifstream in(path, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    bytes.push_back('x');
    std::ofstream out(dir / "fat.bin", std::ios::binary);
    out.write(bytes.data(), std::streamsize(bytes.size()));
  }
  CHECK(throws_mentioning([&] { load_model(dir / "fat.bin"); }, "trailing bytes"));
}
