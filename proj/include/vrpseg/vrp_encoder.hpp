#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "vrpseg/attention.hpp"
#include "vrpseg/backbone.hpp"
#include "vrpseg/prompt_sim.hpp"

namespace vrpseg {

enum class QueryInit { random, fp, bp, half_fp_half_bp };

const char* query_init_name(QueryInit mode);
QueryInit query_init_from_name(const std::string& name);

struct VrpConfig {
    int dim = 64;        // C: query/prompt embedding width
    int heads = 4;
    int n_queries = 50;
    bool posenc = true;  // sinusoidal encodings on attention keys
    QueryInit query_init = QueryInit::random;
    std::uint64_t weight_seed = 0x76b5;
};

/// N x C prompt rows ready for the mask decoder.
struct PromptEmbedding {
    int n = 0;
    int dim = 0;
    Mat data;
};

/// Name -> tape leaf id, recorded while building a forward graph so the
/// trainer can route gradients back to named parameter storage.
struct ParamBinding {
    std::string name;
    Tape::Id tape_id;
};

/// Queries for a fresh encoder. random: seeded Gaussian, sigma 0.02. fp/bp
/// copy the given prototype (which must be dim-wide) into every row;
/// half_fp_half_bp gives the first ceil(n/2) rows to fp.
Mat init_queries(QueryInit mode, int n, int dim, std::uint64_t seed, const Prototype* fg,
                 const Prototype* bg);

/// The visual-reference prompt encoder, the pipeline's only trainable part.
/// Stage 1 (feature augmenter): pool a prototype over the annotated reference
/// region, broadcast it, stack (features, prototype, mask channel) for both
/// images (the target's mask channel is the pseudo-mask), and reduce through
/// one shared linear projection. Stage 2 (prompt generator): learnable
/// queries cross-attend into the reference then the target, each followed by
/// self-attention.
class VrpEncoder {
public:
    VrpEncoder(VrpConfig cfg, int mid_channels);

    /// Builds the full trainable graph and returns the prompt node (N x C).
    /// Parameter leaves are appended to `binds` when non-null.
    Tape::Id build_prompts(Tape& t, const EncoderTaps& ref, const EncoderTaps& tgt,
                           const Annotation& ann, std::vector<ParamBinding>* binds) const;

    /// Augmented features at mid resolution, plain (no-tape) evaluation.
    std::pair<FeatureMap, FeatureMap> augment(const EncoderTaps& ref, const EncoderTaps& tgt,
                                              const Annotation& ann) const;

    /// Full plain forward to a prompt embedding.
    PromptEmbedding generate_prompts(const EncoderTaps& ref, const EncoderTaps& tgt,
                                     const Annotation& ann) const;

    void reinit_queries(QueryInit mode, std::uint64_t seed, const Prototype* fg,
                        const Prototype* bg);

    /// Stable order: queries, augmenter, cross1, self1, cross2, self2.
    std::vector<NamedTensorView> trainable_parameters();

    const VrpConfig& config() const { return cfg_; }
    int mid_channels() const { return mid_channels_; }

private:
    struct BuiltGraph {
        Tape::Id fr_prime, ft_prime, prompts;
    };
    BuiltGraph build_graph(Tape& t, const EncoderTaps& ref, const EncoderTaps& tgt,
                           const Annotation& ann, std::vector<ParamBinding>* binds) const;

    VrpConfig cfg_;
    int mid_channels_ = 0;
    Mat queries_;                 // N x C
    Mat aug_weight_;              // (2*mid + 1) x C, the shared 1x1 projection
    Mat aug_bias_;                // 1 x C
    AttentionBlockParams cross1_, self1_, cross2_, self2_;
};

}  // namespace vrpseg
