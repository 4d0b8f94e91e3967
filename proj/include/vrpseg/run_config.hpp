#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <utility>

#include "json.hpp"

#include "vrpseg/folds.hpp"
#include "vrpseg/model.hpp"
#include "vrpseg/prompt_sim.hpp"
#include "vrpseg/trainer.hpp"

namespace vrpseg {

/// Where episodes come from: a dataset directory plus the fold/annotation
/// selection applied to it.
struct DataConfig {
    std::string root = "data/synthetic";
    DatasetId dataset = DatasetId::kSynthetic;
    int fold = 0;
    AnnotationKind annotation = AnnotationKind::mask;
};

/// Full run description as read from a JSON config file. Every key is
/// optional and defaults to the value in this struct; unknown keys are
/// rejected. The `config` subcommand emits the reference instance with
/// every default spelled out.
struct RunConfig {
    DataConfig data;
    EncoderConfig encoder;
    VrpConfig vrp;
    DecoderConfig decoder;
    TrainConfig train;
    int workers = 1;
};

/// Serialization is lossless for every field except EncoderConfig::frozen,
/// which is pinned true in pipeline use and not exposed in the file format.
nlohmann::json run_config_to_json(const RunConfig& cfg);

/// Throws ConfigError naming the offending key on unknown keys or wrong
/// value types, at any nesting level.
RunConfig run_config_from_json(const nlohmann::json& j);

/// Canonical file text: 2-space indented JSON plus trailing newline.
/// emit -> parse -> emit is byte-stable.
std::string run_config_text(const RunConfig& cfg);

/// Throws MissingFile if absent, ConfigError if unparseable or invalid.
RunConfig load_run_config(const std::filesystem::path& file);

void save_run_config(const RunConfig& cfg, const std::filesystem::path& file);

ModelConfig model_config(const RunConfig& cfg);

/// Test classes for the configured dataset/fold. Synthetic folds are derived
/// from the manifest vocabulary; golden datasets use their fixed tables.
FoldSpec resolve_fold(const RunConfig& cfg, const std::vector<std::string>& manifest_classes);

/// Rebuild the model a checkpoint was saved from and load its tensors.
/// Query init is forced to the ctor-safe random mode before construction;
/// fp/bp modes need live prototypes, and the checkpointed query tensor
/// overwrites the initial values regardless.
std::pair<RunConfig, std::unique_ptr<VrpSamModel>> load_model_from_checkpoint(
    const std::filesystem::path& dir);

}  // namespace vrpseg
