#pragma once

#include "vrpseg/mask_ops.hpp"
#include "vrpseg/tape.hpp"

namespace vrpseg {

/// C x H x W feature map <-> (H*W) x C token matrix, rows in row-major pixel
/// order. The token form is what attention and the tape ops consume.
Mat tokens_from_features(const FeatureMap& f);
FeatureMap features_from_tokens(const Mat& tokens, int h, int w);

/// (H*W) x 1 column in the same pixel order.
Mat column_from_mask(const BinaryMask& m);
Mat column_from_similarity(const SimilarityMap& s);

}  // namespace vrpseg
