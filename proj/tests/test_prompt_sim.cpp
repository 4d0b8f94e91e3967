#include <set>

#include "doctest.h"
#include "vrpseg/prompt_sim.hpp"
#include "vrpseg/rng.hpp"

using namespace vrpseg;

namespace {

BinaryMask blob_mask() {
    // A filled disc of radius 9 centered at (16, 14) in a 32x32 grid.
    BinaryMask m(32, 32);
    for (int r = 0; r < 32; ++r)
        for (int c = 0; c < 32; ++c)
            if ((r - 16) * (r - 16) + (c - 14) * (c - 14) <= 81) m.at(r, c) = 1;
    return m;
}

bool subset_of(const BinaryMask& a, const BinaryMask& b) {
    for (std::size_t i = 0; i < a.data.size(); ++i)
        if (a.data[i] != 0 && b.data[i] == 0) return false;
    return true;
}

}  // namespace

TEST_CASE("sample_points: exact count, on-foreground, distinct, deterministic") {
    const BinaryMask gt = blob_mask();
    const Annotation ann = sample_points(gt, 7, 123, 5);
    CHECK(ann.kind == AnnotationKind::point);
    CHECK(ann.source_class == 5);
    CHECK(ann.raster.foreground_count() == 7);
    CHECK(subset_of(ann.raster, gt));

    const Annotation again = sample_points(gt, 7, 123, 5);
    CHECK(ann.raster.data == again.raster.data);

    const Annotation other = sample_points(gt, 7, 124, 5);
    CHECK(ann.raster.data != other.raster.data);
}

TEST_CASE("sample_points: k bounds and foreground budget") {
    const BinaryMask gt = blob_mask();
    CHECK_THROWS_AS(sample_points(gt, 0, 1), Error);
    CHECK_THROWS_AS(sample_points(gt, 21, 1), Error);
    try {
        sample_points(gt, 0, 1);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::KOutOfRange);
    }

    BinaryMask tiny(4, 4);
    tiny.at(1, 1) = 1;
    tiny.at(2, 2) = 1;
    CHECK_THROWS_AS(sample_points(tiny, 3, 1), Error);
    const Annotation both = sample_points(tiny, 2, 1);
    CHECK(both.raster.foreground_count() == 2);
}

TEST_CASE("sample_points covers the foreground across seeds") {
    BinaryMask gt(2, 3);
    for (auto& v : gt.data) v = 1;
    std::set<std::size_t> seen;
    for (std::uint64_t s = 0; s < 60; ++s) {
        const Annotation a = sample_points(gt, 1, s);
        for (std::size_t i = 0; i < a.raster.data.size(); ++i)
            if (a.raster.data[i]) seen.insert(i);
    }
    CHECK(seen.size() == 6);
}

TEST_CASE("sample_scribble stays inside gt and is deterministic") {
    const BinaryMask gt = blob_mask();
    const Annotation ann = sample_scribble(gt, 3, 99, 2);
    CHECK(ann.kind == AnnotationKind::scribble);
    CHECK(!ann.raster.empty_foreground());
    CHECK(subset_of(ann.raster, gt));
    CHECK(ann.raster.foreground_count() < gt.foreground_count());

    const Annotation again = sample_scribble(gt, 3, 99, 2);
    CHECK(ann.raster.data == again.raster.data);
}

TEST_CASE("sample_scribble on a single-pixel object yields that pixel") {
    BinaryMask gt(8, 8);
    gt.at(3, 5) = 1;
    const Annotation ann = sample_scribble(gt, 2, 7);
    CHECK(ann.raster.foreground_count() == 1);
    CHECK(ann.raster.at(3, 5) == 1);
}

TEST_CASE("sample_scribble rejects empty gt and bad stroke counts") {
    CHECK_THROWS_AS(sample_scribble(BinaryMask(4, 4), 1, 1), Error);
    const BinaryMask gt = blob_mask();
    CHECK_THROWS_AS(sample_scribble(gt, 0, 1), Error);
    CHECK_THROWS_AS(sample_scribble(gt, 21, 1), Error);
}

TEST_CASE("extract_box is tight and filled") {
    BinaryMask gt(10, 12);
    gt.at(2, 3) = 1;
    gt.at(5, 9) = 1;
    gt.at(4, 6) = 1;
    auto [box, ann] = extract_box(gt, 4);
    CHECK(box.row_min == 2);
    CHECK(box.row_max == 5);
    CHECK(box.col_min == 3);
    CHECK(box.col_max == 9);
    CHECK(box.area() == 4 * 7);
    CHECK(ann.kind == AnnotationKind::box);
    CHECK(ann.raster.foreground_count() == 4 * 7);
    for (int r = 2; r <= 5; ++r)
        for (int c = 3; c <= 9; ++c) CHECK(ann.raster.at(r, c) == 1);
    CHECK_THROWS_AS(extract_box(BinaryMask(3, 3)), Error);
}

TEST_CASE("mask_annotation passes gt through") {
    const BinaryMask gt = blob_mask();
    const Annotation ann = mask_annotation(gt, 9);
    CHECK(ann.kind == AnnotationKind::mask);
    CHECK(ann.raster.data == gt.data);
}

TEST_CASE("simulate_annotation dispatches per kind with valid output") {
    const BinaryMask gt = blob_mask();
    for (AnnotationKind k : {AnnotationKind::point, AnnotationKind::scribble,
                             AnnotationKind::box, AnnotationKind::mask}) {
        const Annotation ann = simulate_annotation(gt, k, 55, 1);
        CHECK(ann.kind == k);
        CHECK(!ann.raster.empty_foreground());
        if (k == AnnotationKind::point) {
            CHECK(subset_of(ann.raster, gt));
            CHECK(ann.raster.foreground_count() <= 20);
        }
        if (k == AnnotationKind::scribble) CHECK(subset_of(ann.raster, gt));
        if (k == AnnotationKind::mask) CHECK(ann.raster.data == gt.data);
        const Annotation again = simulate_annotation(gt, k, 55, 1);
        CHECK(ann.raster.data == again.raster.data);
    }
}

TEST_CASE("annotation kind names round-trip and reject unknowns") {
    for (AnnotationKind k : {AnnotationKind::point, AnnotationKind::scribble,
                             AnnotationKind::box, AnnotationKind::mask}) {
        CHECK(annotation_kind_from_name(annotation_kind_name(k)) == k);
    }
    CHECK_THROWS_AS(annotation_kind_from_name("squiggle"), Error);
}
