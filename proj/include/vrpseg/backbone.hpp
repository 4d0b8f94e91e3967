#pragma once

#include <cstdint>
#include <vector>

#include "vrpseg/image.hpp"
#include "vrpseg/mask_ops.hpp"
#include "vrpseg/params.hpp"

namespace vrpseg {

/// Two named taps from one forward pass: mid at H/8 (stage-3 output
/// concatenated with the upsampled stage-4 output) and high at H/16
/// (stage-4 output).
struct EncoderTaps {
    FeatureMap mid;
    FeatureMap high;
};

struct EncoderConfig {
    std::vector<int> channels{16, 32, 64, 64};  // one stride-2 stage each
    std::uint64_t weight_seed = 0x5eed;
    bool frozen = true;  // always true in pipeline use
};

/// Frozen toy CNN encoder: 4 conv3x3/stride-2/ReLU stages, He-initialized
/// from the config seed and never trained. Semantic quality is irrelevant;
/// determinism and the two-tap topology are the contract.
class ToyEncoder {
public:
    explicit ToyEncoder(EncoderConfig cfg = {});

    /// pre: H and W divisible by 16.
    EncoderTaps encode(const Image& image) const;

    /// Stable-ordered views for freeze checks and checkpointing.
    std::vector<NamedTensorView> parameters();

    /// Content hash of the live weights; tap caches key on this so that any
    /// weight mutation (e.g. checkpoint quantization) invalidates them.
    std::uint64_t weights_hash() const;

    const EncoderConfig& config() const { return cfg_; }
    int mid_channels() const;   // stage3 + stage4 channels
    int high_channels() const;  // stage4 channels

private:
    struct ConvStage {
        int in_ch = 0;
        int out_ch = 0;
        std::vector<double> weight;  // [out][in][3][3]
        std::vector<double> bias;    // [out]
    };

    EncoderConfig cfg_;
    std::vector<ConvStage> stages_;
};

/// Nearest-neighbor 2x spatial upsample, used to align stage-4 features with
/// stage 3 before concatenation.
FeatureMap upsample2_nearest(const FeatureMap& f);

}  // namespace vrpseg
