#pragma once

#include "vrpseg/tape.hpp"

namespace vrpseg {

/// 2D sinusoidal positional encodings for a row-major flattened h x w grid:
/// row i*w+j describes pixel (i, j). The first C/2 columns encode the row
/// coordinate, the rest the column coordinate, each as interleaved
/// (sin, cos) pairs over geometrically spaced frequencies. C divisible by 4.
Mat sinusoidal_posenc_2d(int h, int w, int channels);

}  // namespace vrpseg
