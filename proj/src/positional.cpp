#include "vrpseg/positional.hpp"

#include <cmath>

namespace vrpseg {

Mat sinusoidal_posenc_2d(int h, int w, int channels) {
    if (channels % 4 != 0 || channels <= 0) {
        throw Error(ErrorCode::BadShape, "positional encoding needs channels divisible by 4");
    }
    const int half = channels / 2;   // per-axis budget
    const int pairs = half / 2;      // (sin, cos) pairs per axis
    Mat pe(static_cast<Eigen::Index>(h) * w, channels);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            const Eigen::Index row = static_cast<Eigen::Index>(i) * w + j;
            for (int k = 0; k < pairs; ++k) {
                const double freq = std::pow(10000.0, -2.0 * k / half);
                pe(row, 2 * k) = std::sin(i * freq);
                pe(row, 2 * k + 1) = std::cos(i * freq);
                pe(row, half + 2 * k) = std::sin(j * freq);
                pe(row, half + 2 * k + 1) = std::cos(j * freq);
            }
        }
    }
    return pe;
}

}  // namespace vrpseg
