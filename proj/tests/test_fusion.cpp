#include "doctest.h"

#include "emorec/dataset.hpp"
#include "emorec/fusion.hpp"
#include "emorec/gradcheck.hpp"
#include "test_util.hpp"

using namespace emorec;

namespace {

PipelineConfig mini_config(std::vector<Modality> active,
                           uint64_t seed = 2024) {
  return PipelineConfig::mini(LabelTaxonomy::four_class(), seed,
                              std::move(active));
}

SubjectObservation synthetic_observation(const PipelineConfig& cfg,
                                         uint64_t seed = 5, int cls = 1) {
  PipelineConfig full = cfg;
  full.active = all_modalities();
  auto manifest = make_synthetic_manifest(full, cfg.taxonomy.k(), seed);
  return manifest.samples[static_cast<size_t>(cls)].obs;
}

}  // namespace

TEST_CASE("fused dim is the sum of active dims, defaults reach 892") {
  PipelineConfig defaults;
  // Dim bookkeeping only; no forward passes at full scale here.
  FusionConfig fc;
  fc.active = all_modalities();
  fc.expected_dims[Modality::face] = defaults.face.feature_dim;
  fc.expected_dims[Modality::posture] = defaults.posture.feature_dim();
  fc.expected_dims[Modality::gait] = defaults.gait.feature_dim();
  fc.expected_dims[Modality::context] = defaults.context.feature_dim;
  CHECK(fc.fused_dim() == 256 + 124 + 384 + 128);
  CHECK(fc.fused_dim() == 892);
}

TEST_CASE("face+posture layout at default dims") {
  PipelineConfig defaults;
  FusionConfig fc;
  fc.active = {Modality::face, Modality::posture};
  fc.expected_dims[Modality::face] = defaults.face.feature_dim;          // 256
  fc.expected_dims[Modality::posture] = defaults.posture.feature_dim();  // 124

  ModalityFeatures face{Modality::face, std::vector<double>(256)};
  ModalityFeatures posture{Modality::posture, std::vector<double>(124)};
  for (int i = 0; i < 256; ++i) face.values[static_cast<size_t>(i)] = 1000.0 + i;
  for (int i = 0; i < 124; ++i) posture.values[static_cast<size_t>(i)] = 2000.0 + i;

  const auto fused = fuse(fc, {posture, face});
  REQUIRE(fused.size() == 380);
  for (int i = 0; i < 256; ++i) {
    CHECK(fused[static_cast<size_t>(i)] == 1000.0 + i);  // F_F at 0..255
  }
  for (int i = 0; i < 124; ++i) {
    CHECK(fused[static_cast<size_t>(256 + i)] == 2000.0 + i);
  }
}

TEST_CASE("fuse concatenates in canonical order") {
  FusionConfig fc;
  fc.active = {Modality::face, Modality::posture};
  fc.expected_dims[Modality::face] = 3;
  fc.expected_dims[Modality::posture] = 2;

  ModalityFeatures face{Modality::face, {1, 2, 3}};
  ModalityFeatures posture{Modality::posture, {4, 5}};

  // Input order must not matter.
  const auto fused = fuse(fc, {posture, face});
  CHECK(fused == std::vector<double>{1, 2, 3, 4, 5});

  SUBCASE("single modality is the identity") {
    FusionConfig solo;
    solo.active = {Modality::face};
    solo.expected_dims[Modality::face] = 3;
    CHECK(fuse(solo, {face}) == face.values);
  }

  SUBCASE("missing active modality names it") {
    try {
      (void)fuse(fc, {face});
      FAIL("expected MissingModalityError");
    } catch (const MissingModalityError& e) {
      CHECK(std::string(e.what()).find("posture") != std::string::npos);
    }
  }

  SUBCASE("unexpected extra modality is a config error") {
    ModalityFeatures gait{Modality::gait, {9}};
    CHECK_THROWS_AS(fuse(fc, {face, posture, gait}), ConfigError);
  }

  SUBCASE("duplicate modality is a config error") {
    CHECK_THROWS_AS(fuse(fc, {face, posture, posture}), ConfigError);
  }

  SUBCASE("wrong per-modality dim is a shape error") {
    ModalityFeatures bad{Modality::face, {1, 2}};
    CHECK_THROWS_AS(fuse(fc, {bad, posture}), ShapeError);
  }

  SUBCASE("non-canonical active order is rejected") {
    FusionConfig swapped;
    swapped.active = {Modality::posture, Modality::face};
    swapped.expected_dims[Modality::face] = 3;
    swapped.expected_dims[Modality::posture] = 2;
    CHECK_THROWS_AS(swapped.validate(), ConfigError);
  }
}

TEST_CASE("pipeline classifies observations across all modalities") {
  const auto cfg = mini_config(all_modalities());
  Pipeline pipeline(cfg);
  const auto obs = synthetic_observation(cfg);

  const ClassificationResult result = pipeline.classify(obs);
  CHECK(result.per_modality.size() == 4);
  for (const auto& [m, dist] : result.per_modality) {
    double sum = 0.0;
    for (double p : dist.probs()) {
      CHECK(p >= 0.0);
      sum += p;
    }
    CHECK_NEAR(sum, 1.0, 1e-6);
  }
  double sum = 0.0;
  for (double p : result.fused.probs()) sum += p;
  CHECK_NEAR(sum, 1.0, 1e-6);
  CHECK(pipeline.fused_dim() ==
        16 + (24 + 16) + (8 + 8) + 16);  // mini dims
}

TEST_CASE("face-only config: fused output equals the face output") {
  const auto cfg = mini_config({Modality::face});
  Pipeline pipeline(cfg);
  const auto obs = synthetic_observation(cfg);

  const auto result = pipeline.classify(obs);
  CHECK(result.per_modality.at(Modality::face).probs() ==
        result.fused.probs());

  // And the explicit fused-vector path routes through the same head.
  const auto features = pipeline.features_for(Modality::face, obs);
  const auto via_vector = pipeline.multimodal_classify(features.values);
  CHECK(via_vector.probs() == result.fused.probs());
}

TEST_CASE("missing modality input is reported by name") {
  const auto cfg = mini_config(all_modalities());
  Pipeline pipeline(cfg);
  auto obs = synthetic_observation(cfg);
  obs.segment.reset();
  try {
    (void)pipeline.classify(obs);
    FAIL("expected MissingModalityError");
  } catch (const MissingModalityError& e) {
    CHECK(std::string(e.what()).find("gait") != std::string::npos);
  }
}

TEST_CASE("per-modality outputs do not depend on the active set") {
  const auto obs = synthetic_observation(mini_config(all_modalities(), 77));

  Pipeline full(mini_config(all_modalities(), 77));
  Pipeline solo(mini_config({Modality::posture}, 77));

  const auto a = full.classify(obs).per_modality.at(Modality::posture);
  const auto b = solo.classify(obs).per_modality.at(Modality::posture);
  CHECK(a.probs() == b.probs());  // bit-equal across configs
}

TEST_CASE("multimodal_classify checks the fused dim") {
  Pipeline pipeline(mini_config(all_modalities()));
  CHECK_THROWS_AS(pipeline.multimodal_classify(std::vector<double>(3, 0.0)),
                  ShapeError);
}

TEST_CASE("zero-weight fusion head gives the uniform distribution") {
  Pipeline pipeline(mini_config(all_modalities()));
  for (const auto& p : pipeline.parameters_of("fusion")) {
    if (p.name.find("fc2") != std::string::npos) {
      std::fill(p.node->value.v.begin(), p.node->value.v.end(), 0.0);
    }
  }
  const auto obs = synthetic_observation(mini_config(all_modalities()));
  const auto result = pipeline.classify(obs);
  for (double p : result.fused.probs()) CHECK_NEAR(p, 0.25, 1e-12);
}

TEST_CASE("fused head sums to one under random seeds") {
  for (uint64_t seed = 100; seed < 130; ++seed) {
    Pipeline pipeline(mini_config(all_modalities(), seed));
    const auto obs = synthetic_observation(mini_config(all_modalities()), seed);
    const auto result = pipeline.classify(obs);
    double sum = 0.0;
    for (double p : result.fused.probs()) sum += p;
    CHECK_NEAR(sum, 1.0, 1e-6);
  }
}

TEST_CASE("gradient check through the fusion head") {
  const auto cfg = mini_config(all_modalities());
  Pipeline pipeline(cfg);
  const auto obs = synthetic_observation(cfg);
  auto build = [&]() {
    return nn::cross_entropy(pipeline.fused_probs_node(obs), 1);
  };
  nn::GradCheckConfig gc;
  gc.max_sampled = 80;
  const double err =
      nn::grad_check(build, nn::param_nodes(pipeline.parameters_of("fusion")), gc);
  CHECK(err < 1e-4);
}

TEST_CASE("inactive module access is a config error") {
  Pipeline pipeline(mini_config({Modality::face}));
  CHECK_THROWS_AS(pipeline.gait(), ConfigError);
  CHECK_THROWS_AS(pipeline.parameters_of("gait"), ConfigError);
  CHECK_THROWS_AS(pipeline.parameters_of("fusion"), ConfigError);
}
