#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "support/tempdir.hpp"
#include "vrpseg/dataset.hpp"
#include "vrpseg/error.hpp"
#include "vrpseg/folds.hpp"

using namespace vrpseg;
using vrpseg::testing::TempDir;
namespace fs = std::filesystem;

namespace {

std::vector<char> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

SynthConfig small_config() {
    SynthConfig cfg;
    cfg.per_class = 3;
    cfg.classes = {"circle", "square", "triangle", "cross", "ring", "stripe"};
    return cfg;
}

}  // namespace

TEST_CASE("render style names round-trip") {
    CHECK(render_style_from_name(render_style_name(RenderStyle::kTextured)) ==
          RenderStyle::kTextured);
    CHECK(render_style_from_name(render_style_name(RenderStyle::kFlat)) == RenderStyle::kFlat);
    CHECK_THROWS_AS(render_style_from_name("fancy"), Error);
}

TEST_CASE("synth rendering is deterministic per seed") {
    TempDir a("synth_det_a"), b("synth_det_b");
    const SynthConfig cfg = small_config();
    const auto ma = synth_dataset(cfg, 42, a.path());
    const auto mb = synth_dataset(cfg, 42, b.path());
    REQUIRE(ma.items.size() == 18);
    CHECK(ma.classes == mb.classes);
    CHECK(ma.items == mb.items);
    for (const auto& item : ma.items) {
        CHECK(slurp(a.path() / item.image_file) == slurp(b.path() / item.image_file));
        CHECK(slurp(a.path() / item.mask_file) == slurp(b.path() / item.mask_file));
    }
    CHECK(slurp(a.path() / "manifest.json") == slurp(b.path() / "manifest.json"));

    TempDir c("synth_det_c");
    const auto mc = synth_dataset(cfg, 43, c.path());
    CHECK(slurp(a.path() / mc.items[0].image_file) !=
          slurp(c.path() / mc.items[0].image_file));
}

TEST_CASE("every mask matches the analytic shape predicate and is nonempty") {
    TempDir dir("synth_oracle");
    const SynthConfig cfg = small_config();
    const auto m = synth_dataset(cfg, 7, dir.path());
    for (std::size_t i = 0; i < m.items.size(); ++i) {
        const auto& item = m.items[i];
        REQUIRE(item.class_ids.size() == 1);
        const int class_id = item.class_ids[0];
        const std::string& shape = m.classes[static_cast<std::size_t>(class_id - 1)];
        const ShapeParams params = item_shape_params(cfg, item.seed, shape);
        const auto [img, mask] = load_item(m, i);
        REQUIRE(mask.height == cfg.size);
        REQUIRE(mask.width == cfg.size);
        int fg = 0;
        for (int r = 0; r < mask.height; ++r) {
            for (int c = 0; c < mask.width; ++c) {
                const std::uint8_t want =
                    shape_contains(params, r, c) ? static_cast<std::uint8_t>(class_id) : 0;
                REQUIRE(mask.at(r, c) == want);
                fg += mask.at(r, c) != 0;
            }
        }
        CHECK(fg > 0);
    }
}

TEST_CASE("flat style renders two solid colors") {
    TempDir dir("synth_flat");
    SynthConfig cfg = small_config();
    cfg.style = RenderStyle::kFlat;
    const auto m = synth_dataset(cfg, 11, dir.path());
    const auto [img, mask] = load_item(m, 0);
    std::set<std::vector<double>> colors;
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            colors.insert({img.at(0, r, c), img.at(1, r, c), img.at(2, r, c)});
        }
    }
    CHECK(colors.size() == 2);

    TempDir dir2("synth_textured");
    cfg.style = RenderStyle::kTextured;
    const auto m2 = synth_dataset(cfg, 11, dir2.path());
    const auto [img2, mask2] = load_item(m2, 0);
    std::set<std::vector<double>> colors2;
    for (int r = 0; r < img2.height; ++r) {
        for (int c = 0; c < img2.width; ++c) {
            colors2.insert({img2.at(0, r, c), img2.at(1, r, c), img2.at(2, r, c)});
        }
    }
    CHECK(colors2.size() > 100);
}

TEST_CASE("synth config validation") {
    TempDir dir("synth_badcfg");
    SynthConfig cfg = small_config();
    cfg.classes.resize(5);
    CHECK_THROWS_AS(synth_dataset(cfg, 1, dir.path()), Error);
    cfg = small_config();
    cfg.classes[0] = "blob";
    CHECK_THROWS_AS(synth_dataset(cfg, 1, dir.path()), Error);
    cfg = small_config();
    cfg.classes[1] = cfg.classes[0];
    CHECK_THROWS_AS(synth_dataset(cfg, 1, dir.path()), Error);
    cfg = small_config();
    cfg.size = 40;
    CHECK_THROWS_AS(synth_dataset(cfg, 1, dir.path()), Error);
    cfg = small_config();
    cfg.per_class = 1;
    try {
        synth_dataset(cfg, 1, dir.path());
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BadConfig);
    }
}

TEST_CASE("manifest round-trips through disk") {
    TempDir dir("synth_roundtrip");
    const auto written = synth_dataset(small_config(), 9, dir.path());
    const auto loaded = load_manifest(dir.path());
    CHECK(loaded.root == written.root);
    CHECK(loaded.classes == written.classes);
    CHECK(loaded.items == written.items);
}

TEST_CASE("load_manifest failure modes") {
    SUBCASE("missing manifest") {
        TempDir dir("load_missing");
        try {
            load_manifest(dir.path());
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::MissingFile);
        }
    }
    SUBCASE("corrupt json") {
        TempDir dir("load_corrupt");
        std::ofstream(dir.path() / "manifest.json") << "{not json";
        try {
            load_manifest(dir.path());
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::CorruptManifest);
        }
    }
    SUBCASE("missing mask file named in error") {
        TempDir dir("load_missing_mask");
        const auto m = synth_dataset(small_config(), 3, dir.path());
        fs::remove(dir.path() / m.items[4].mask_file);
        try {
            load_manifest(dir.path());
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::MissingFile);
            CHECK(std::string(e.what()).find(m.items[4].mask_file) != std::string::npos);
        }
    }
    SUBCASE("mask image size mismatch") {
        TempDir dir("load_mismatch");
        const auto m = synth_dataset(small_config(), 3, dir.path());
        write_mask_png((dir.path() / m.items[0].mask_file).string(), ClassMask(32, 32));
        try {
            load_manifest(dir.path());
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::ShapeMismatch);
        }
    }
    SUBCASE("declared class id absent from mask") {
        TempDir dir("load_absent_class");
        const auto m = synth_dataset(small_config(), 3, dir.path());
        ClassMask blank(64, 64);
        write_mask_png((dir.path() / m.items[0].mask_file).string(), blank);
        try {
            load_manifest(dir.path());
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::CorruptManifest);
        }
    }
}

TEST_CASE("episode sampler draws from the requested split deterministically") {
    TempDir dir("episodes");
    const SynthConfig cfg = small_config();
    const auto m = synth_dataset(cfg, 21, dir.path());
    const FoldSpec spec = synthetic_fold(cfg.classes, 1);  // tests triangle, cross

    const auto test_eps =
        sample_episodes(m, spec, Split::kTest, 12, AnnotationKind::mask, 5);
    REQUIRE(test_eps.size() == 12);
    std::set<int> seen;
    for (const auto& ep : test_eps) {
        CHECK((ep.class_id == 3 || ep.class_id == 4));
        seen.insert(ep.class_id);
        CHECK(ep.annotation.kind == AnnotationKind::mask);
        CHECK(ep.annotation.source_class == ep.class_id);
        CHECK(std::count(ep.ref_gt.data.begin(), ep.ref_gt.data.end(), 1) > 0);
        CHECK(std::count(ep.tgt_gt.data.begin(), ep.tgt_gt.data.end(), 1) > 0);
        CHECK(ep.ref_image.data != ep.tgt_image.data);
        CHECK(ep.annotation.raster.data == ep.ref_gt.data);
    }
    CHECK(seen.size() == 2);

    const auto train_eps =
        sample_episodes(m, spec, Split::kTrain, 12, AnnotationKind::point, 5);
    for (const auto& ep : train_eps) {
        CHECK(ep.class_id != 3);
        CHECK(ep.class_id != 4);
        CHECK(ep.annotation.kind == AnnotationKind::point);
    }

    const auto again =
        sample_episodes(m, spec, Split::kTest, 12, AnnotationKind::mask, 5);
    for (std::size_t i = 0; i < again.size(); ++i) {
        CHECK(again[i].class_id == test_eps[i].class_id);
        CHECK(again[i].seed == test_eps[i].seed);
        CHECK(again[i].ref_image.data == test_eps[i].ref_image.data);
        CHECK(again[i].annotation.raster.data == test_eps[i].annotation.raster.data);
    }
    const auto other = sample_episodes(m, spec, Split::kTest, 12, AnnotationKind::mask, 6);
    bool any_diff = false;
    for (std::size_t i = 0; i < other.size(); ++i) {
        any_diff = any_diff || other[i].ref_image.data != test_eps[i].ref_image.data;
    }
    CHECK(any_diff);
}

TEST_CASE("random access matches streaming order") {
    TempDir dir("episodes_ra");
    const SynthConfig cfg = small_config();
    const auto m = synth_dataset(cfg, 33, dir.path());
    const FoldSpec spec = synthetic_fold(cfg.classes, 0);
    EpisodeSampler sampler(m, spec, Split::kTest, AnnotationKind::box, 77);
    const auto stream = sample_episodes(m, spec, Split::kTest, 6, AnnotationKind::box, 77);
    const Episode ep4 = sampler.episode(4);
    CHECK(ep4.seed == stream[4].seed);
    CHECK(ep4.ref_image.data == stream[4].ref_image.data);
    CHECK(ep4.tgt_gt.data == stream[4].tgt_gt.data);
}

TEST_CASE("sampler rejects unknown or thin classes") {
    TempDir dir("episodes_err");
    const SynthConfig cfg = small_config();
    const auto m = synth_dataset(cfg, 2, dir.path());

    FoldSpec spec = synthetic_fold(cfg.classes, 0);
    spec.test_classes = {"hexagon", "circle"};
    try {
        EpisodeSampler sampler(m, spec, Split::kTest, AnnotationKind::mask, 1);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyClass);
    }

    DatasetManifest thin = m;
    thin.items.erase(thin.items.begin() + 1, thin.items.begin() + 3);  // one circle left
    try {
        EpisodeSampler sampler(thin, synthetic_fold(cfg.classes, 0), Split::kTest,
                               AnnotationKind::mask, 1);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InsufficientItems);
    }
}
