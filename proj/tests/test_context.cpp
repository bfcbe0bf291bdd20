#include "doctest.h"

#include "emorec/context_net.hpp"
#include "emorec/gradcheck.hpp"
#include "emorec/image_ops.hpp"
#include "test_util.hpp"

using namespace emorec;
using namespace emorec::nn;

namespace {

ImagePatch random_background(const ContextNetConfig& cfg, Rng& rng) {
  ImagePatch p = make_patch(cfg.channels, cfg.height, cfg.width,
                            PatchKind::background);
  for (double& v : p.pixels) v = rng.uniform();
  return p;
}

}  // namespace

TEST_CASE("feature length follows the config") {
  const auto cfg = ContextNetConfig::mini();
  ContextNet net(cfg, 4, 70);
  Rng rng(1);
  const auto f = net.features(random_background(cfg, rng));
  CHECK(f.source == Modality::context);
  CHECK(f.dim() == cfg.feature_dim);

  CHECK(ContextNetConfig{}.feature_dim == 128);
}

TEST_CASE("zero weights and biases produce the zero vector") {
  const auto cfg = ContextNetConfig::mini();
  ContextNet net(cfg, 4, 71);
  for (const auto& p : net.parameters()) {
    if (p.name.rfind("context.cnn", 0) == 0) {
      std::fill(p.node->value.v.begin(), p.node->value.v.end(), 0.0);
    }
  }
  Rng rng(2);
  const auto f = net.features(random_background(cfg, rng));
  for (double v : f.values) CHECK(v == 0.0);
}

TEST_CASE("masking the subject region changes the features") {
  const auto cfg = ContextNetConfig::mini();
  ContextNet net(cfg, 4, 72);
  Rng rng(3);
  const ImagePatch original = random_background(cfg, rng);
  ImagePatch masked = original;
  mean_fill_rect(masked, cfg.width / 4, cfg.height / 4, cfg.width / 2,
                 cfg.height / 2);
  CHECK(original.pixels != masked.pixels);
  CHECK(net.features(original).values != net.features(masked).values);
}

TEST_CASE("wrong input shape is a shape error") {
  ContextNet net(ContextNetConfig::mini(), 4, 73);
  CHECK_THROWS_AS(net.features(make_patch(3, 4, 4, PatchKind::background)),
                  ShapeError);
}

TEST_CASE("classifier distribution and uniform zero-weight head") {
  const auto taxonomy = LabelTaxonomy::four_class();
  const auto cfg = ContextNetConfig::mini();
  ContextNet net(cfg, taxonomy.k(), 74);
  Rng rng(4);
  const auto f = net.features(random_background(cfg, rng));

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
}

TEST_CASE("deterministic at fixed weights") {
  const auto cfg = ContextNetConfig::mini();
  ContextNet net(cfg, 4, 75);
  Rng rng(5);
  const auto bg = random_background(cfg, rng);
  CHECK(net.features(bg).values == net.features(bg).values);
}

TEST_CASE("gradient check over the context stack") {
  const auto cfg = ContextNetConfig::mini();
  ContextNet net(cfg, 4, 76);
  Rng rng(6);
  const Tensor bg = patch_to_tensor(random_background(cfg, rng));
  auto build = [&]() {
    return cross_entropy(net.classify_node(constant(bg)), 0);
  };
  GradCheckConfig gc;
  gc.max_sampled = 100;
  const double err = grad_check(build, param_nodes(net.parameters()), gc);
  CHECK(err < 1e-4);
}
