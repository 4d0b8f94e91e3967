#pragma once

#include <cstdint>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "vrpseg/backbone.hpp"
#include "vrpseg/dataset.hpp"
#include "vrpseg/losses.hpp"
#include "vrpseg/sam_stub.hpp"
#include "vrpseg/vrp_encoder.hpp"

namespace vrpseg {

struct ModelConfig {
    EncoderConfig encoder;
    VrpConfig vrp;
    DecoderConfig decoder;
};

/// The assembled pipeline: frozen toy backbone, trainable visual-reference
/// prompt encoder, frozen mask decoder stub. Backbone taps are cached by
/// image content hash, in memory and optionally on disk (VRPSEG_CACHE).
class VrpSamModel {
public:
    explicit VrpSamModel(ModelConfig cfg = {});

    struct EpisodeGraph {
        LossNodes loss;
        std::vector<ParamBinding> binds;
        Tape::Id prompts;
        Tape::Id logits;  // (H*W) x 1 at image resolution
    };

    EpisodeGraph build_episode_graph(Tape& t, const Episode& ep, LossMode mode) const;

    /// Logit map at image resolution for one reference-target episode.
    SimilarityMap predict(const Episode& ep) const;

    /// Multi-reference inference: each episode contributes N prompt rows, all
    /// concatenated and decoded once against refs[0]'s target. Every episode
    /// must carry the same class (ClassMismatch).
    SimilarityMap predict_multi(const std::vector<Episode>& refs) const;

    /// Geometric-prompt baseline: pseudo-mask from the annotation, resampled
    /// to image resolution, thresholded into point/box prompts, decoded with
    /// the same frozen decoder. Propagates EmptyAfterThreshold.
    SimilarityMap predict_geometric(const Episode& ep, GpKind kind, std::uint64_t seed) const;

    /// Cached backbone forward (copy; the cache stays internally consistent).
    EncoderTaps taps(const Image& image) const;

    std::vector<NamedTensorView> trainable_parameters();
    /// backbone + vrp + decoder, the full checkpoint tensor set.
    std::vector<NamedTensorView> all_parameters();

    /// Content hash of the frozen decoder weights, asserted equal across the
    /// runs of a VRP-vs-GP comparison.
    std::uint64_t decoder_hash();

    VrpEncoder& vrp() { return vrp_; }
    DecoderStub& decoder() { return decoder_; }
    const ToyEncoder& encoder() const { return encoder_; }
    const ModelConfig& config() const { return cfg_; }

private:
    ModelConfig cfg_;
    ToyEncoder encoder_;
    VrpEncoder vrp_;
    DecoderStub decoder_;

    mutable std::mutex cache_mutex_;
    mutable std::unordered_map<std::uint64_t, EncoderTaps> tap_cache_;
};

}  // namespace vrpseg
