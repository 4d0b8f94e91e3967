#include "vrpseg/mask_ops.hpp"

#include <algorithm>
#include <cmath>

namespace vrpseg {

namespace {

// Standard nearest-neighbor index map: src = floor((dst + 0.5) * src_n / dst_n).
int nn_index(int dst, int src_n, int dst_n) {
    const int src = static_cast<int>((dst + 0.5) * src_n / dst_n);
    return std::min(src, src_n - 1);
}

void check_positive_size(int h, int w) {
    if (h < 1 || w < 1) throw Error(ErrorCode::BadShape, "size must be at least 1x1");
}

}  // namespace

int BinaryMask::foreground_count() const {
    int n = 0;
    for (std::uint8_t v : data) n += (v != 0);
    return n;
}

Prototype mask_avg_pool(const FeatureMap& features, const BinaryMask& mask) {
    if (mask.height != features.height || mask.width != features.width) {
        throw Error(ErrorCode::ShapeMismatch, "mask does not match feature map spatial size");
    }
    const int count = mask.foreground_count();
    if (count == 0) throw Error(ErrorCode::EmptyMask, "mask_avg_pool needs a nonempty mask");

    Prototype proto;
    proto.data.assign(features.channels, 0.0);
    const std::size_t plane = features.plane();
    for (int c = 0; c < features.channels; ++c) {
        double sum = 0.0;
        const double* f = features.data.data() + c * plane;
        for (std::size_t i = 0; i < plane; ++i) {
            if (mask.data[i]) sum += f[i];
        }
        proto.data[c] = sum / count;
    }
    return proto;
}

SimilarityMap pseudo_mask(const FeatureMap& ref_high, const FeatureMap& tgt_high,
                          const BinaryMask& ref_mask) {
    if (ref_mask.height != ref_high.height || ref_mask.width != ref_high.width) {
        throw Error(ErrorCode::ShapeMismatch, "reference mask does not match reference features");
    }
    if (ref_high.channels != tgt_high.channels) {
        throw Error(ErrorCode::ShapeMismatch, "reference/target channel counts differ");
    }
    if (ref_mask.empty_foreground()) {
        throw Error(ErrorCode::EmptyMask, "pseudo_mask needs a nonempty reference mask");
    }

    const int channels = ref_high.channels;
    const std::size_t ref_plane = ref_high.plane();
    const std::size_t tgt_plane = tgt_high.plane();
    constexpr double kNormGuard = 1e-8;

    // Gather normalized reference foreground columns.
    std::vector<std::size_t> fg;
    for (std::size_t i = 0; i < ref_plane; ++i) {
        if (ref_mask.data[i]) fg.push_back(i);
    }
    std::vector<double> ref_cols(fg.size() * channels);
    for (std::size_t k = 0; k < fg.size(); ++k) {
        double norm2 = 0.0;
        for (int c = 0; c < channels; ++c) {
            const double v = ref_high.data[c * ref_plane + fg[k]];
            ref_cols[k * channels + c] = v;
            norm2 += v * v;
        }
        const double inv = 1.0 / std::max(std::sqrt(norm2), kNormGuard);
        for (int c = 0; c < channels; ++c) ref_cols[k * channels + c] *= inv;
    }

    SimilarityMap raw(tgt_high.height, tgt_high.width);
    std::vector<double> col(channels);
    for (std::size_t i = 0; i < tgt_plane; ++i) {
        double norm2 = 0.0;
        for (int c = 0; c < channels; ++c) {
            col[c] = tgt_high.data[c * tgt_plane + i];
            norm2 += col[c] * col[c];
        }
        const double inv = 1.0 / std::max(std::sqrt(norm2), kNormGuard);
        double best = -1.0;
        for (std::size_t k = 0; k < fg.size(); ++k) {
            double dot = 0.0;
            const double* r = ref_cols.data() + k * channels;
            for (int c = 0; c < channels; ++c) dot += col[c] * r[c];
            best = std::max(best, dot * inv);
        }
        raw.data[i] = best;
    }
    return min_max_normalize(raw);
}

BinaryMask resize_mask(const BinaryMask& mask, int new_h, int new_w) {
    check_positive_size(new_h, new_w);
    BinaryMask out(new_h, new_w);
    for (int r = 0; r < new_h; ++r) {
        const int sr = nn_index(r, mask.height, new_h);
        for (int c = 0; c < new_w; ++c) {
            out.at(r, c) = mask.at(sr, nn_index(c, mask.width, new_w));
        }
    }
    return out;
}

BinaryMask resize_mask_nonempty(const BinaryMask& mask, int new_h, int new_w) {
    if (mask.empty_foreground()) {
        throw Error(ErrorCode::EmptyMask, "cannot resize an empty mask to a nonempty one");
    }
    BinaryMask out = resize_mask(mask, new_h, new_w);
    if (!out.empty_foreground()) return out;

    // Centroid of the source foreground, mapped into the target grid.
    double sum_r = 0.0, sum_c = 0.0;
    int n = 0;
    for (int r = 0; r < mask.height; ++r) {
        for (int c = 0; c < mask.width; ++c) {
            if (mask.at(r, c)) {
                sum_r += r;
                sum_c += c;
                ++n;
            }
        }
    }
    const double cr = (sum_r / n + 0.5) * new_h / mask.height - 0.5;
    const double cc = (sum_c / n + 0.5) * new_w / mask.width - 0.5;
    const int rr = std::clamp(static_cast<int>(std::lround(cr)), 0, new_h - 1);
    const int oc = std::clamp(static_cast<int>(std::lround(cc)), 0, new_w - 1);
    out.at(rr, oc) = 1;
    return out;
}

SimilarityMap min_max_normalize(const SimilarityMap& raw) {
    SimilarityMap out(raw.height, raw.width);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : raw.data) {
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "non-finite value in raw map");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    // Constant up to rounding noise counts as constant; stretching ulp-level
    // spread across [0,1] would turn an everywhere-equal similarity map (the
    // identical-image case) into noise.
    if (hi - lo <= 1e-12 * std::max(1.0, std::max(std::abs(hi), std::abs(lo)))) {
        std::fill(out.data.begin(), out.data.end(), 1.0);
        return out;
    }
    const double inv = 1.0 / (hi - lo);
    for (std::size_t i = 0; i < raw.data.size(); ++i) out.data[i] = (raw.data[i] - lo) * inv;
    return out;
}

SimilarityMap resize_similarity(const SimilarityMap& map, int new_h, int new_w) {
    check_positive_size(new_h, new_w);
    SimilarityMap out(new_h, new_w);
    for (int r = 0; r < new_h; ++r) {
        const int sr = nn_index(r, map.height, new_h);
        for (int c = 0; c < new_w; ++c) {
            out.at(r, c) = map.at(sr, nn_index(c, map.width, new_w));
        }
    }
    return out;
}

}  // namespace vrpseg
