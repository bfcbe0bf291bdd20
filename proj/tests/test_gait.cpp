#include "doctest.h"

#include <cmath>

#include "emorec/gait_net.hpp"
#include "emorec/gradcheck.hpp"
#include "emorec/image_ops.hpp"
#include "test_util.hpp"

using namespace emorec;
using namespace emorec::nn;

namespace {

FrameSegment random_segment(const GaitNetConfig& cfg, Rng& rng) {
  FrameSegment seg;
  for (int i = 0; i < cfg.frames; ++i) {
    ImagePatch f = make_patch(cfg.channels, cfg.height, cfg.width,
                              PatchKind::body);
    for (double& v : f.pixels) v = rng.uniform();
    seg.frames.push_back(std::move(f));
  }
  return seg;
}

}  // namespace

TEST_CASE("temporal pooling trace halves after every pool but the first") {
  const GaitNetConfig cfg;  // default 16 frames
  CHECK(cfg.temporal_trace() == std::vector<int>{16, 16, 8, 4, 2, 1});
  CHECK(cfg.spatial_trace() == std::vector<int>{112, 56, 28, 14, 7, 4});
  CHECK(cfg.feature_dim() == 384);

  GaitNetConfig longer;
  longer.frames = 32;
  CHECK(longer.temporal_trace() == std::vector<int>{32, 32, 16, 8, 4, 2});
}

TEST_CASE("mini net emits [D, L] in order with the configured dims") {
  const auto cfg = GaitNetConfig::mini();
  GaitNet net(cfg, 4, 50);
  Rng rng(1);
  const auto seg = random_segment(cfg, rng);

  const auto fwd = net.forward(seg);
  CHECK(fwd.cnn_features->value.shape == std::vector<int>{cfg.cnn_feature_dim});
  CHECK(fwd.lstm_features->value.shape == std::vector<int>{cfg.lstm_hidden});
  CHECK(fwd.features->value.shape ==
        std::vector<int>{cfg.cnn_feature_dim + cfg.lstm_hidden});
  for (int i = 0; i < cfg.cnn_feature_dim; ++i) {
    CHECK(fwd.features->value.v[static_cast<size_t>(i)] ==
          fwd.cnn_features->value.v[static_cast<size_t>(i)]);
  }
  for (int i = 0; i < cfg.lstm_hidden; ++i) {
    CHECK(fwd.features->value.v[static_cast<size_t>(cfg.cnn_feature_dim + i)] ==
          fwd.lstm_features->value.v[static_cast<size_t>(i)]);
  }
}

TEST_CASE("zero weights and biases produce the zero feature vector") {
  const auto cfg = GaitNetConfig::mini();
  GaitNet net(cfg, 4, 51);
  for (const auto& p : net.parameters()) {
    std::fill(p.node->value.v.begin(), p.node->value.v.end(), 0.0);
  }
  Rng rng(2);
  const auto f = net.features(random_segment(cfg, rng));
  CHECK(f.dim() == cfg.feature_dim());
  for (double v : f.values) CHECK(v == 0.0);
}

TEST_CASE("frame count and shape violations are shape errors") {
  const auto cfg = GaitNetConfig::mini();
  GaitNet net(cfg, 4, 52);
  Rng rng(3);

  auto seg = random_segment(cfg, rng);
  seg.frames.pop_back();
  CHECK_THROWS_AS(net.features(seg), ShapeError);

  auto mixed = random_segment(cfg, rng);
  mixed.frames[3] = make_patch(cfg.channels, cfg.height + 2, cfg.width,
                               PatchKind::body);
  CHECK_THROWS_AS(net.features(mixed), ShapeError);

  auto wrong = random_segment(cfg, rng);
  for (auto& f : wrong.frames) {
    f = make_patch(cfg.channels, cfg.height * 2, cfg.width * 2, PatchKind::body);
  }
  CHECK_THROWS_AS(net.features(wrong), ShapeError);
}

TEST_CASE("constant-in-time segment matches a stepwise cell oracle") {
  const auto cfg = GaitNetConfig::mini();
  GaitNet net(cfg, 4, 53);
  Rng rng(4);

  // All frames identical: the LSTM sees the same input at every step.
  ImagePatch frame = make_patch(cfg.channels, cfg.height, cfg.width,
                                PatchKind::body);
  for (double& v : frame.pixels) v = rng.uniform();
  FrameSegment seg;
  for (int i = 0; i < cfg.frames; ++i) seg.frames.push_back(frame);

  const auto fwd = net.forward(seg);

  // Reproduce the per-frame LSTM input exactly as the module builds it.
  ImagePatch gray = resize_bilinear(to_grayscale(frame), cfg.lstm_frame_size,
                                    cfg.lstm_frame_size);
  const std::vector<double> x = gray.pixels;

  // Stepwise oracle: plain loops over the standard cell equations for the
  // 4-layer stack, reading the module's own weights.
  const auto params = net.parameters();
  const auto find = [&](const std::string& name) -> const std::vector<double>& {
    for (const auto& p : params) {
      if (p.name == name) return p.node->value.v;
    }
    FAIL("missing parameter ", name);
    static std::vector<double> empty;
    return empty;
  };
  const int hidden = cfg.lstm_hidden;
  const auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };

  std::vector<std::vector<double>> h(static_cast<size_t>(cfg.lstm_layers),
                                     std::vector<double>(static_cast<size_t>(hidden), 0.0));
  auto c = h;
  for (int step = 0; step < cfg.frames; ++step) {
    std::vector<double> input = x;
    for (int layer = 0; layer < cfg.lstm_layers; ++layer) {
      const std::string base = "gait.lstm.l" + std::to_string(layer);
      const auto& w_ih = find(base + ".w_ih");
      const auto& w_hh = find(base + ".w_hh");
      const auto& bias = find(base + ".bias");
      const int in_dim = static_cast<int>(input.size());
      std::vector<double> gates(static_cast<size_t>(4 * hidden));
      for (int g = 0; g < 4 * hidden; ++g) {
        double acc = bias[static_cast<size_t>(g)];
        for (int i = 0; i < in_dim; ++i) {
          acc += w_ih[static_cast<size_t>(g) * in_dim + static_cast<size_t>(i)] * input[static_cast<size_t>(i)];
        }
        for (int i = 0; i < hidden; ++i) {
          acc += w_hh[static_cast<size_t>(g) * hidden + static_cast<size_t>(i)] *
                 h[static_cast<size_t>(layer)][static_cast<size_t>(i)];
        }
        gates[static_cast<size_t>(g)] = acc;
      }
      auto& hl = h[static_cast<size_t>(layer)];
      auto& cl = c[static_cast<size_t>(layer)];
      for (int u = 0; u < hidden; ++u) {
        const double in_g = sig(gates[static_cast<size_t>(u)]);
        const double forget_g = sig(gates[static_cast<size_t>(hidden + u)]);
        const double cell_g = std::tanh(gates[static_cast<size_t>(2 * hidden + u)]);
        const double out_g = sig(gates[static_cast<size_t>(3 * hidden + u)]);
        cl[static_cast<size_t>(u)] = forget_g * cl[static_cast<size_t>(u)] + in_g * cell_g;
        hl[static_cast<size_t>(u)] = out_g * std::tanh(cl[static_cast<size_t>(u)]);
      }
      input = hl;
    }
  }
  for (int u = 0; u < hidden; ++u) {
    CHECK_NEAR(fwd.lstm_features->value.v[static_cast<size_t>(u)],
               h.back()[static_cast<size_t>(u)], 1e-9);
  }
}

TEST_CASE("classifier behaves like every other head") {
  const auto taxonomy = LabelTaxonomy::four_class();
  const auto cfg = GaitNetConfig::mini();
  GaitNet net(cfg, taxonomy.k(), 54);
  Rng rng(5);
  const auto f = net.features(random_segment(cfg, rng));

  double sum = 0.0;
  const auto dist = net.classify(f, taxonomy);
  for (double p : dist.probs()) sum += p;
  CHECK_NEAR(sum, 1.0, 1e-6);

  for (const auto& p : net.parameters()) {
    if (p.name.find("head.fc2") != std::string::npos) {
      std::fill(p.node->value.v.begin(), p.node->value.v.end(), 0.0);
    }
  }
  const auto uniform = net.classify(f, taxonomy);
  for (double p : uniform.probs()) CHECK_NEAR(p, 0.25, 1e-12);

  ModalityFeatures wrong = f;
  wrong.values.push_back(0.0);
  CHECK_THROWS_AS(net.classify(wrong, taxonomy), ShapeError);
}

TEST_CASE("feature layout is stable across repeated forwards") {
  const auto cfg = GaitNetConfig::mini();
  GaitNet net(cfg, 4, 55);
  Rng rng(6);
  const auto seg = random_segment(cfg, rng);
  CHECK(net.features(seg).values == net.features(seg).values);
}

TEST_CASE("eight convolutions are required") {
  GaitNetConfig cfg = GaitNetConfig::mini();
  cfg.conv_channels.pop_back();
  CHECK_THROWS_AS(GaitNet(cfg, 4, 1), ConfigError);
}

TEST_CASE("gradient check over both gait streams") {
  auto cfg = GaitNetConfig::mini();
  cfg.frames = 16;
  GaitNet net(cfg, 4, 56);
  Rng rng(7);
  const auto seg = random_segment(cfg, rng);
  auto build = [&]() { return cross_entropy(net.classify_node(seg), 3); };
  GradCheckConfig gc;
  gc.max_sampled = 100;
  const double err = grad_check(build, param_nodes(net.parameters()), gc);
  CHECK(err < 1e-4);
}
