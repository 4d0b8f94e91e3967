#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vrpseg/params.hpp"
#include "vrpseg/tape.hpp"

namespace vrpseg {

/// One multi-head attention sublayer: bias-free q/k/v/output projections plus
/// the post-residual layer norm. Used for every cross- and self-attention in
/// the pipeline (VRP encoder and decoder stub alike).
struct AttentionBlockParams {
    Mat wq, wk, wv, wo;      // C x C
    Mat ln_gain, ln_bias;    // 1 x C

    void init(int dim, std::uint64_t seed);

    /// Views named "<prefix>/wq" .. "<prefix>/ln_bias"; projections carry the
    /// weight-decay flag, norm parameters do not.
    void collect(const std::string& prefix, bool decay_projections,
                 std::vector<NamedTensorView>& out);
};

/// Tape leaf ids for one block, plus the head count baked in at build time.
struct AttentionBlockIds {
    Tape::Id wq, wk, wv, wo, ln_gain, ln_bias;
    int heads = 0;
};

/// Loads the block's current parameter values onto the tape. trainable=false
/// produces constants (frozen decoder use).
AttentionBlockIds attention_leaves(Tape& t, const AttentionBlockParams& p, int heads,
                                   bool trainable);

/// y = LayerNorm(q_in + MultiHead(q_in -> keys/values)). `key_pos` / `query_pos`
/// (optional, -1 to disable) are added to the key / query tokens only inside
/// the attention, never to the values or the residual stream.
Tape::Id attention_block(Tape& t, const AttentionBlockIds& ids, Tape::Id q_in, Tape::Id kv_in,
                         Tape::Id key_pos = -1, Tape::Id query_pos = -1);

}  // namespace vrpseg
