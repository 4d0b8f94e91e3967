#include "vrpseg/prompt_sim.hpp"

#include <algorithm>
#include <cmath>

#include "vrpseg/rng.hpp"

namespace vrpseg {

namespace {

constexpr int kMaxCount = 20;  // inclusive upper bound for points and strokes

std::vector<std::size_t> foreground_indices(const BinaryMask& gt) {
    std::vector<std::size_t> fg;
    for (std::size_t i = 0; i < gt.data.size(); ++i) {
        if (gt.data[i]) fg.push_back(i);
    }
    return fg;
}

void stamp_disc(BinaryMask& raster, double cy, double cx, int radius) {
    const int r0 = std::max(0, static_cast<int>(std::floor(cy)) - radius);
    const int r1 = std::min(raster.height - 1, static_cast<int>(std::ceil(cy)) + radius);
    const int c0 = std::max(0, static_cast<int>(std::floor(cx)) - radius);
    const int c1 = std::min(raster.width - 1, static_cast<int>(std::ceil(cx)) + radius);
    for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
            const double dy = r - cy;
            const double dx = c - cx;
            if (dy * dy + dx * dx <= static_cast<double>(radius) * radius) raster.at(r, c) = 1;
        }
    }
}

}  // namespace

const char* annotation_kind_name(AnnotationKind kind) {
    switch (kind) {
        case AnnotationKind::point: return "point";
        case AnnotationKind::scribble: return "scribble";
        case AnnotationKind::box: return "box";
        case AnnotationKind::mask: return "mask";
    }
    return "mask";
}

AnnotationKind annotation_kind_from_name(const std::string& name) {
    if (name == "point") return AnnotationKind::point;
    if (name == "scribble") return AnnotationKind::scribble;
    if (name == "box") return AnnotationKind::box;
    if (name == "mask") return AnnotationKind::mask;
    throw Error(ErrorCode::ConfigError, "unknown annotation kind '" + name + "'");
}

Annotation sample_points(const BinaryMask& gt, int k, std::uint64_t seed, int source_class) {
    if (gt.empty_foreground()) throw Error(ErrorCode::EmptyMask, "gt has no foreground");
    if (k < 1 || k > kMaxCount) throw Error(ErrorCode::KOutOfRange, "point count must be in [1, 20]");
    std::vector<std::size_t> fg = foreground_indices(gt);
    if (static_cast<std::size_t>(k) > fg.size()) {
        throw Error(ErrorCode::InsufficientForeground, "fewer foreground pixels than requested points");
    }

    Rng rng(seed);
    // Partial Fisher-Yates: the first k entries become the sample.
    for (int i = 0; i < k; ++i) {
        const int j = rng.uniform_int(i, static_cast<int>(fg.size()) - 1);
        std::swap(fg[i], fg[j]);
    }
    Annotation ann{AnnotationKind::point, BinaryMask(gt.height, gt.width), source_class, seed, k};
    for (int i = 0; i < k; ++i) ann.raster.data[fg[i]] = 1;
    return ann;
}

Annotation sample_scribble(const BinaryMask& gt, int n_strokes, std::uint64_t seed,
                           int source_class) {
    if (gt.empty_foreground()) throw Error(ErrorCode::EmptyMask, "gt has no foreground");
    if (n_strokes < 1 || n_strokes > kMaxCount) {
        throw Error(ErrorCode::KOutOfRange, "stroke count must be in [1, 20]");
    }

    Rng rng(seed);
    const std::vector<std::size_t> fg = foreground_indices(gt);
    BinaryMask strokes(gt.height, gt.width);
    const double max_turn = 0.25 * 3.14159265358979323846;  // 45 degrees

    for (int s = 0; s < n_strokes; ++s) {
        const std::size_t start = fg[rng.uniform_int(0, static_cast<int>(fg.size()) - 1)];
        double cy = static_cast<double>(start / gt.width);
        double cx = static_cast<double>(start % gt.width);
        double heading = rng.uniform_real(0.0, 2.0 * 3.14159265358979323846);
        const int radius = rng.uniform_int(1, 3);
        const int steps = rng.uniform_int(8, 24);
        stamp_disc(strokes, cy, cx, radius);
        for (int t = 0; t < steps; ++t) {
            heading += rng.uniform_real(-max_turn, max_turn);
            cy += std::sin(heading);
            cx += std::cos(heading);
            cy = std::clamp(cy, 0.0, static_cast<double>(gt.height - 1));
            cx = std::clamp(cx, 0.0, static_cast<double>(gt.width - 1));
            stamp_disc(strokes, cy, cx, radius);
        }
    }

    Annotation ann{AnnotationKind::scribble, BinaryMask(gt.height, gt.width), source_class, seed,
                   n_strokes};
    for (std::size_t i = 0; i < gt.data.size(); ++i) {
        ann.raster.data[i] = strokes.data[i] & gt.data[i];
    }
    if (ann.raster.empty_foreground()) {
        ann.raster.data[fg[rng.uniform_int(0, static_cast<int>(fg.size()) - 1)]] = 1;
    }
    return ann;
}

std::pair<BoxSpec, Annotation> extract_box(const BinaryMask& gt, int source_class) {
    if (gt.empty_foreground()) throw Error(ErrorCode::EmptyMask, "gt has no foreground");
    BoxSpec box{gt.height, gt.width, -1, -1};
    for (int r = 0; r < gt.height; ++r) {
        for (int c = 0; c < gt.width; ++c) {
            if (!gt.at(r, c)) continue;
            box.row_min = std::min(box.row_min, r);
            box.col_min = std::min(box.col_min, c);
            box.row_max = std::max(box.row_max, r);
            box.col_max = std::max(box.col_max, c);
        }
    }
    Annotation ann{AnnotationKind::box, BinaryMask(gt.height, gt.width), source_class, 0};
    for (int r = box.row_min; r <= box.row_max; ++r) {
        for (int c = box.col_min; c <= box.col_max; ++c) ann.raster.at(r, c) = 1;
    }
    return {box, ann};
}

Annotation mask_annotation(const BinaryMask& gt, int source_class) {
    if (gt.empty_foreground()) throw Error(ErrorCode::EmptyMask, "gt has no foreground");
    return Annotation{AnnotationKind::mask, gt, source_class, 0};
}

Annotation simulate_annotation(const BinaryMask& gt, AnnotationKind kind, std::uint64_t seed,
                               int source_class) {
    switch (kind) {
        case AnnotationKind::point: {
            Rng rng(derive_seed(seed, 0xA110));
            const int k_max = std::min(kMaxCount, gt.foreground_count());
            const int k = rng.uniform_int(1, k_max);
            return sample_points(gt, k, seed, source_class);
        }
        case AnnotationKind::scribble: {
            Rng rng(derive_seed(seed, 0xA111));
            return sample_scribble(gt, rng.uniform_int(1, kMaxCount), seed, source_class);
        }
        case AnnotationKind::box: {
            Annotation ann = extract_box(gt, source_class).second;
            ann.seed = seed;
            return ann;
        }
        case AnnotationKind::mask: {
            Annotation ann = mask_annotation(gt, source_class);
            ann.seed = seed;
            return ann;
        }
    }
    throw Error(ErrorCode::ConfigError, "unreachable annotation kind");
}

}  // namespace vrpseg
