#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "emorec/checkpoint.hpp"
#include "emorec/dataset.hpp"
#include "test_util.hpp"

using namespace emorec;
namespace fs = std::filesystem;

namespace {

std::string temp_file(const char* name) {
  return (fs::temp_directory_path() / name).string();
}

PipelineConfig mini(uint64_t seed) {
  return PipelineConfig::mini(LabelTaxonomy::four_class(), seed);
}

}  // namespace

TEST_CASE("checkpoint round trip is bit exact") {
  const auto config = mini(21);
  Pipeline pipeline(config);
  const auto manifest = make_synthetic_manifest(config, 4, 21);
  const auto obs = manifest.samples[0].obs;
  const auto before = pipeline.classify(obs);

  const std::string path = temp_file("emorec_ckpt.bin");
  save_checkpoint(pipeline, path);
  Pipeline restored = load_checkpoint(path);

  // Parameters restore bit for bit.
  const auto pa = pipeline.parameters();
  const auto pb = restored.parameters();
  REQUIRE(pa.size() == pb.size());
  for (size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].name == pb[i].name);
    CHECK(pa[i].node->value.v == pb[i].node->value.v);
  }

  // Forward outputs are identical.
  const auto after = restored.classify(obs);
  CHECK(before.fused.probs() == after.fused.probs());
  for (const auto& [m, dist] : before.per_modality) {
    CHECK(dist.probs() == after.per_modality.at(m).probs());
  }

  // Feature layouts survive the round trip bit for bit: gait [D, L] and
  // posture [V, D].
  const auto gait_before = pipeline.gait().features(*obs.segment);
  const auto gait_after = restored.gait().features(*obs.segment);
  CHECK(gait_before.values == gait_after.values);
  const auto posture_before =
      pipeline.posture().features(*obs.body, obs.landmarks->back());
  const auto posture_after =
      restored.posture().features(*obs.body, obs.landmarks->back());
  CHECK(posture_before.values == posture_after.values);
  std::remove(path.c_str());
}

TEST_CASE("truncated checkpoint is an integrity error") {
  Pipeline pipeline(mini(22));
  const std::string path = temp_file("emorec_ckpt_trunc.bin");
  save_checkpoint(pipeline, path);

  const auto size = fs::file_size(path);
  fs::resize_file(path, size / 2);
  CHECK_THROWS_AS(load_checkpoint(path), IntegrityError);
  fs::resize_file(path, 4);
  CHECK_THROWS_AS(load_checkpoint(path), IntegrityError);
  std::remove(path.c_str());
}

TEST_CASE("flipped byte is an integrity error") {
  Pipeline pipeline(mini(23));
  const std::string path = temp_file("emorec_ckpt_corrupt.bin");
  save_checkpoint(pipeline, path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(static_cast<std::streamoff>(fs::file_size(path) / 2));
    char c;
    f.seekg(f.tellp());
    f.get(c);
    f.seekp(-1, std::ios::cur);
    c = static_cast<char>(c ^ 0x5a);
    f.put(c);
  }
  CHECK_THROWS_AS(load_checkpoint(path), IntegrityError);
  std::remove(path.c_str());
}

TEST_CASE("version mismatch is a version error") {
  Pipeline pipeline(mini(24));
  const std::string path = temp_file("emorec_ckpt_version.bin");
  save_checkpoint(pipeline, path);

  // Bump the version field (bytes 8..11) and re-stamp the trailing hash.
  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  bytes[8] = 9;
  std::string body = bytes.substr(0, bytes.size() - 8);
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : body) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  for (int i = 0; i < 8; ++i) {
    bytes[bytes.size() - 8 + static_cast<size_t>(i)] =
        static_cast<char>((h >> (8 * i)) & 0xff);
  }
  {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_THROWS_AS(load_checkpoint(path), VersionError);
  std::remove(path.c_str());
}

TEST_CASE("taxonomy guard on load") {
  Pipeline pipeline(mini(25));  // four-class
  const std::string path = temp_file("emorec_ckpt_tax.bin");
  save_checkpoint(pipeline, path);
  CHECK_THROWS_AS(load_checkpoint(path, LabelTaxonomy::seven_class()),
                  TaxonomyError);
  CHECK_NOTHROW(load_checkpoint(path, LabelTaxonomy::four_class()));
  std::remove(path.c_str());
}

TEST_CASE("config json round trip") {
  auto config = mini(26);
  config.active = {Modality::face, Modality::gait};
  config.gait.frames = 16;
  const std::string text = pipeline_config_to_json(config);
  const auto back = pipeline_config_from_json(text);
  CHECK(back.taxonomy == config.taxonomy);
  CHECK(back.active == config.active);
  CHECK(back.seed == config.seed);
  CHECK(back.face.feature_dim == config.face.feature_dim);
  CHECK(back.gait.conv_channels == config.gait.conv_channels);
  CHECK(back.posture.deep_dim == config.posture.deep_dim);
  CHECK(back.context.feature_dim == config.context.feature_dim);
  CHECK_THROWS_AS(pipeline_config_from_json("{"), ParseError);
}
