#pragma once

#include <cstdint>
#include <vector>

#include "vrpseg/error.hpp"

namespace vrpseg {

/// H x W raster with values in {0, 1}. Carries annotations, ground truth and
/// binarized predictions alike.
struct BinaryMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> data;  // row-major

    BinaryMask() = default;
    BinaryMask(int h, int w, std::uint8_t fill = 0)
        : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

    std::uint8_t& at(int r, int c) { return data[static_cast<std::size_t>(r) * width + c]; }
    std::uint8_t at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }

    int foreground_count() const;
    bool empty_foreground() const { return foreground_count() == 0; }
    bool same_shape(const BinaryMask& other) const {
        return height == other.height && width == other.width;
    }
};

/// H x W real-valued map in [0, 1] once normalized. The continuous form of the
/// pseudo-mask. min_max_normalize also accepts this struct holding an
/// arbitrary finite raw map and returns the normalized result.
struct SimilarityMap {
    int height = 0;
    int width = 0;
    std::vector<double> data;  // row-major

    SimilarityMap() = default;
    SimilarityMap(int h, int w, double fill = 0.0)
        : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * width + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }
};

/// C x H x W activations from an encoder tap, channel-major.
struct FeatureMap {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;  // [c * H * W + r * W + col]

    FeatureMap() = default;
    FeatureMap(int c, int h, int w)
        : channels(c), height(h), width(w),
          data(static_cast<std::size_t>(c) * h * w, 0.0) {}

    double& at(int c, int r, int col) {
        return data[(static_cast<std::size_t>(c) * height + r) * width + col];
    }
    double at(int c, int r, int col) const {
        return data[(static_cast<std::size_t>(c) * height + r) * width + col];
    }
    std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
};

/// Per-channel mean of features over a foreground region.
struct Prototype {
    std::vector<double> data;
    int channels() const { return static_cast<int>(data.size()); }
};

/// P[c] = sum_{mask=1} F[c,h,w] / |mask|. The mask must already live at the
/// feature map's spatial resolution.
Prototype mask_avg_pool(const FeatureMap& features, const BinaryMask& mask);

/// Training-free foreground estimate for the target: per target pixel, the
/// maximum cosine similarity against all reference foreground pixels,
/// min-max normalized to [0, 1]. Zero-norm feature vectors score 0 against
/// everything (1e-8 guard in the denominator).
SimilarityMap pseudo_mask(const FeatureMap& ref_high, const FeatureMap& tgt_high,
                          const BinaryMask& ref_mask);

/// Nearest-neighbor resampling; values stay in {0, 1}.
BinaryMask resize_mask(const BinaryMask& mask, int new_h, int new_w);

/// resize_mask, but if downsampling empties the mask, the cell nearest the
/// foreground centroid becomes the single foreground cell. Pooling per Eq-style
/// masked averaging needs at least one cell.
BinaryMask resize_mask_nonempty(const BinaryMask& mask, int new_h, int new_w);

/// (x - min) / (max - min); a constant input maps to all-ones.
SimilarityMap min_max_normalize(const SimilarityMap& raw);

/// Nearest-neighbor resampling for continuous maps (used to bring the
/// pseudo-mask from the high-level tap resolution down to the mid-level one).
SimilarityMap resize_similarity(const SimilarityMap& map, int new_h, int new_w);

}  // namespace vrpseg
