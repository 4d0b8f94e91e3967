#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "vrpseg/params.hpp"

namespace vrpseg {

inline constexpr int kCheckpointVersion = 1;

/// Tensors as loaded: raw f32 payloads plus their declared shapes, and the
/// config snapshot the checkpoint was written with.
struct LoadedCheckpoint {
    int version = 0;
    long step = 0;
    nlohmann::json config;
    std::map<std::string, std::vector<float>> tensors;
    std::map<std::string, std::vector<int>> shapes;
};

/// Writes manifest.json plus one raw little-endian f32 file per tensor
/// (hashes recorded), then quantizes the live double storage to the stored
/// f32 values so the saving process and a resumed process continue from
/// identical state.
void save_checkpoint(const std::filesystem::path& dir,
                     const std::vector<NamedTensorView>& tensors,
                     const nlohmann::json& config, long step);

/// Verifies version, per-file size and hash. MissingFile / CorruptManifest /
/// VersionMismatch / CorruptTensor.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir);

/// Copies loaded tensors into the views by name; every view must be present
/// with the exact shape (CorruptTensor otherwise).
void apply_checkpoint(const LoadedCheckpoint& ckpt,
                      const std::vector<NamedTensorView>& views);

}  // namespace vrpseg
