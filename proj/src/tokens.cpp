#include "vrpseg/tokens.hpp"

namespace vrpseg {

Mat tokens_from_features(const FeatureMap& f) {
    Mat out(static_cast<Eigen::Index>(f.height) * f.width, f.channels);
    for (int c = 0; c < f.channels; ++c)
        for (int r = 0; r < f.height; ++r)
            for (int col = 0; col < f.width; ++col)
                out(static_cast<Eigen::Index>(r) * f.width + col, c) = f.at(c, r, col);
    return out;
}

FeatureMap features_from_tokens(const Mat& tokens, int h, int w) {
    if (tokens.rows() != static_cast<Eigen::Index>(h) * w) {
        throw Error(ErrorCode::ShapeMismatch, "token row count does not match grid");
    }
    FeatureMap out(static_cast<int>(tokens.cols()), h, w);
    for (int c = 0; c < out.channels; ++c)
        for (int r = 0; r < h; ++r)
            for (int col = 0; col < w; ++col)
                out.at(c, r, col) = tokens(static_cast<Eigen::Index>(r) * w + col, c);
    return out;
}

Mat column_from_mask(const BinaryMask& m) {
    Mat out(static_cast<Eigen::Index>(m.data.size()), 1);
    for (std::size_t i = 0; i < m.data.size(); ++i)
        out(static_cast<Eigen::Index>(i), 0) = m.data[i] ? 1.0 : 0.0;
    return out;
}

Mat column_from_similarity(const SimilarityMap& s) {
    Mat out(static_cast<Eigen::Index>(s.data.size()), 1);
    for (std::size_t i = 0; i < s.data.size(); ++i)
        out(static_cast<Eigen::Index>(i), 0) = s.data[i];
    return out;
}

}  // namespace vrpseg
