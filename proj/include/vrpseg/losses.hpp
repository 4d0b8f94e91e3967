#pragma once

#include <string>

#include "vrpseg/mask_ops.hpp"
#include "vrpseg/tape.hpp"

namespace vrpseg {

enum class LossMode { bce, dice, bce_plus_dice };

const char* loss_mode_name(LossMode mode);
LossMode loss_mode_from_name(const std::string& name);

struct LossReport {
    double bce = 0.0;
    double dice = 0.0;
    double total = 0.0;  // always bce + dice
};

/// p = sigmoid(logits). BCE is the per-pixel mean with probabilities clamped
/// to [1e-7, 1 - 1e-7]; Dice uses the squared denominator,
/// 1 - 2*sum(p*y) / (sum(p^2) + sum(y^2)). An all-zero gt degenerates to
/// dice = 1 (warned on stderr); episode construction forbids it upstream.
LossReport bce_dice_loss(const SimilarityMap& logits, const BinaryMask& gt);

/// Tape nodes for the same quantities. bce and dice are always attached (for
/// logging); gradient flows only through `total`, whose composition follows
/// the mode.
struct LossNodes {
    Tape::Id bce;
    Tape::Id dice;
    Tape::Id total;
};

/// `logits` must be an (H*W) x 1 node matching gt's pixel count.
LossNodes attach_loss(Tape& t, Tape::Id logits, const BinaryMask& gt,
                      LossMode mode = LossMode::bce_plus_dice);

}  // namespace vrpseg
