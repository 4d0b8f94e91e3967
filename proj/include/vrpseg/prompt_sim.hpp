#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "vrpseg/mask_ops.hpp"

namespace vrpseg {

enum class AnnotationKind { point, scribble, box, mask };

const char* annotation_kind_name(AnnotationKind kind);
AnnotationKind annotation_kind_from_name(const std::string& name);

/// A typed visual reference: the annotation raster at image resolution plus
/// how it was produced. k is the point count (point) or stroke count
/// (scribble); 0 for box and mask, which have no count parameter.
struct Annotation {
    AnnotationKind kind = AnnotationKind::mask;
    BinaryMask raster;
    int source_class = 0;
    std::uint64_t seed = 0;
    int k = 0;
};

/// Inclusive pixel-index bounding box.
struct BoxSpec {
    int row_min = 0;
    int col_min = 0;
    int row_max = 0;
    int col_max = 0;

    int area() const { return (row_max - row_min + 1) * (col_max - col_min + 1); }
};

/// k distinct foreground pixels of gt, uniformly sampled. 1 <= k <= 20.
Annotation sample_points(const BinaryMask& gt, int k, std::uint64_t seed, int source_class = 0);

/// Union of n random-walk brush strokes started inside gt, clipped to gt so
/// the scribble never leaves the object. Falls back to a single gt pixel if
/// clipping empties it. Walk constants (brush radius 1-3 px, max turn 45 deg,
/// 8-24 steps per stroke) are fixed for the 64x64 toy scale.
Annotation sample_scribble(const BinaryMask& gt, int n_strokes, std::uint64_t seed,
                           int source_class = 0);

/// Tight axis-aligned bounding box of the gt foreground; the annotation raster
/// is the filled rectangle.
std::pair<BoxSpec, Annotation> extract_box(const BinaryMask& gt, int source_class = 0);

/// kind=mask: the raster is the gt itself.
Annotation mask_annotation(const BinaryMask& gt, int source_class = 0);

/// Dispatch on kind. For points, k is drawn uniformly from [1, min(20, |gt|)];
/// for scribbles the stroke count is drawn from [1, 20].
Annotation simulate_annotation(const BinaryMask& gt, AnnotationKind kind, std::uint64_t seed,
                               int source_class = 0);

}  // namespace vrpseg
