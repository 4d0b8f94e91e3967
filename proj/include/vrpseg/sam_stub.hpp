#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "vrpseg/backbone.hpp"
#include "vrpseg/prompt_sim.hpp"
#include "vrpseg/vrp_encoder.hpp"

namespace vrpseg {

enum class GpKind { points, box, points_and_box };

const char* gp_kind_name(GpKind kind);
GpKind gp_kind_from_name(const std::string& name);

/// Geometric prompt for the GP baseline: coordinates, not embeddings.
struct GeometricPrompt {
    GpKind kind = GpKind::points;
    std::vector<std::pair<int, int>> points;  // (row, col)
    std::optional<BoxSpec> box;
};

/// Threshold on the normalized pseudo-mask that defines the region geometric
/// prompts are drawn from.
inline constexpr double kGpThreshold = 0.5;

/// points: 5 seeded draws from {pixels: pm >= threshold} (distinct while the
/// region allows); box: tight bounding box of that region.
GeometricPrompt gp_prompts_from_pseudo_mask(const SimilarityMap& pm, GpKind kind,
                                            std::uint64_t seed);

struct DecoderConfig {
    int dim = 64;
    int heads = 4;
    std::uint64_t weight_seed = 0xdec0;
};

/// Frozen SAM-style mask decoder: one two-way attention block (prompts attend
/// to the image, then the image attends to the prompts), a two-stage
/// transposed-conv upsampling head, and a dynamic readout in which the pooled
/// prompt state selects the per-pixel classifier applied to the upscaled
/// embedding. Weights are seeded random and never trained; prompt rows are
/// the only trainable input path.
///
/// The prompt side carries no per-row positional information, so decoding is
/// exactly invariant to prompt-row permutation and to duplicating the whole
/// prompt set (softmax weights renormalize), which is what makes the
/// multi-reference concatenation protocol well-behaved.
class DecoderStub {
public:
    DecoderStub(DecoderConfig cfg, int mid_channels);

    /// Tape path; `prompts` is any N x dim node, N >= 1. Returns (H*W) x 1
    /// logits at image resolution.
    Tape::Id build_decode(Tape& t, const EncoderTaps& tgt, Tape::Id prompts) const;

    /// Plain forward to an H x W logit map.
    SimilarityMap decode(const EncoderTaps& tgt, const PromptEmbedding& prompts) const;

    /// Points map to their positional-encoding row plus a learned point-type
    /// vector; a box contributes its two corners with per-corner type
    /// vectors. Rows: points first, then corners.
    PromptEmbedding embed_geometric(const GeometricPrompt& prompt, int image_h,
                                    int image_w) const;

    std::vector<NamedTensorView> parameters();
    const DecoderConfig& config() const { return cfg_; }

private:
    DecoderConfig cfg_;
    int mid_channels_ = 0;
    Mat in_w_, in_b_;                                // mid -> dim projection
    AttentionBlockParams p2i_, i2p_;                 // the two-way block
    Mat up1_w_, up1_b_;                              // dim -> 32 resize-conv stage
    Mat up2_w_, up2_b_;                              // 32 -> 16 resize-conv stage
    Mat hyper_w_, head_b_;                           // dim -> 16 dynamic logit head
    Mat point_type_, corner1_type_, corner2_type_;   // 1 x dim prompt type rows
};

}  // namespace vrpseg
