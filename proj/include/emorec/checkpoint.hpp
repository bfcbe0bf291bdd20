#ifndef EMOREC_CHECKPOINT_HPP
#define EMOREC_CHECKPOINT_HPP

#include <optional>
#include <string>

#include "emorec/fusion.hpp"

namespace emorec {

inline constexpr uint32_t kCheckpointVersion = 1;

/// Binary checkpoint: magic, version, pipeline config echo (JSON), named
/// parameter blobs as raw doubles, and a trailing content hash. Round trips
/// are bit-exact.
void save_checkpoint(const Pipeline& pipeline, const std::string& path);

/// Rebuilds the pipeline from the echoed config and restores every
/// parameter. Throws IntegrityError on corrupt or truncated files,
/// VersionError on a version mismatch, TaxonomyError when
/// `expected_taxonomy` is given and differs from the stored one.
Pipeline load_checkpoint(const std::string& path,
                         const std::optional<LabelTaxonomy>& expected_taxonomy =
                             std::nullopt);

/// Config echo (de)serialization, shared with the CLI.
std::string pipeline_config_to_json(const PipelineConfig& config);
PipelineConfig pipeline_config_from_json(const std::string& text);

}  // namespace emorec

#endif  // EMOREC_CHECKPOINT_HPP
