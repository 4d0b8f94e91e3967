#include <cctype>
#include <fstream>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "support/oracles.hpp"
#include "support/tempdir.hpp"
#include "vrpseg/dataset.hpp"
#include "vrpseg/error.hpp"
#include "vrpseg/evaluator.hpp"
#include "vrpseg/model.hpp"

using namespace vrpseg;
using vrpseg::testing::TempDir;

namespace {

struct EvalFixture {
    TempDir dir{"eval_fixture"};
    SynthConfig cfg;
    DatasetManifest manifest;
    ModelConfig mc;

    EvalFixture() {
        cfg.per_class = 4;
        cfg.classes = {"circle", "square", "triangle", "cross", "ring", "stripe"};
        manifest = synth_dataset(cfg, 2024, dir.path());
        mc.vrp.dim = 16;
        mc.vrp.heads = 2;
        mc.vrp.n_queries = 8;
        mc.decoder.dim = 16;
        mc.decoder.heads = 2;
    }
};

EvalFixture& fixture() {
    static EvalFixture f;
    return f;
}

BinaryMask mask_from_rows(int h, int w, std::vector<std::pair<int, int>> cells) {
    BinaryMask m(h, w);
    for (auto [r, c] : cells) m.at(r, c) = 1;
    return m;
}

/// Minimal well-formedness scan: every tag closes, nesting balanced.
bool xml_well_formed(const std::string& text) {
    std::vector<std::string> stack;
    std::size_t i = 0;
    bool seen_root = false;
    while (i < text.size()) {
        if (text[i] != '<') {
            ++i;
            continue;
        }
        const std::size_t end = text.find('>', i);
        if (end == std::string::npos) return false;
        std::string tag = text.substr(i + 1, end - i - 1);
        i = end + 1;
        if (tag.empty()) return false;
        if (tag[0] == '?' || tag[0] == '!') continue;
        if (tag[0] == '/') {
            if (stack.empty()) return false;
            std::string name = tag.substr(1);
            if (stack.back() != name) return false;
            stack.pop_back();
            continue;
        }
        const bool self_close = tag.back() == '/';
        if (self_close) tag.pop_back();
        std::string name;
        for (char c : tag) {
            if (std::isspace(static_cast<unsigned char>(c))) break;
            name += c;
        }
        if (name.empty()) return false;
        if (stack.empty() && seen_root && !self_close) return false;
        if (!self_close) {
            stack.push_back(name);
            seen_root = true;
        }
    }
    return stack.empty() && seen_root;
}

}  // namespace

TEST_CASE("iou basics and oracle equality") {
    const BinaryMask a = mask_from_rows(4, 4, {{0, 0}, {0, 1}, {1, 0}, {1, 1}});
    const BinaryMask half = mask_from_rows(4, 4, {{0, 0}, {0, 1}});
    const BinaryMask other = mask_from_rows(4, 4, {{3, 3}});
    CHECK(iou(a, a) == 1.0);
    CHECK(iou(a, other) == 0.0);
    CHECK(iou(half, a) == 0.5);
    CHECK(iou(a, half) == 0.5);  // symmetric
    CHECK(iou(BinaryMask(4, 4), BinaryMask(4, 4)) == 1.0);
    CHECK_THROWS_AS(iou(a, BinaryMask(3, 3)), Error);

    Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        BinaryMask p(6, 6), g(6, 6);
        for (auto& v : p.data) v = rng.uniform_int(0, 1);
        for (auto& v : g.data) v = rng.uniform_int(0, 1);
        CHECK(iou(p, g) == oracle::iou(p, g));
    }
}

TEST_CASE("binarize thresholds at logit zero, ties to foreground") {
    SimilarityMap logits(2, 2);
    logits.at(0, 0) = -10.0;
    logits.at(0, 1) = 10.0;
    logits.at(1, 0) = 0.0;
    logits.at(1, 1) = -1e-12;
    const BinaryMask m = binarize(logits);
    CHECK(m.at(0, 0) == 0);
    CHECK(m.at(0, 1) == 1);
    CHECK(m.at(1, 0) == 1);
    CHECK(m.at(1, 1) == 0);
}

TEST_CASE("benchmark stats are deterministic and cover the fold classes") {
    auto& f = fixture();
    VrpSamModel model(f.mc);
    const FoldSpec spec = synthetic_fold(f.cfg.classes, 2);  // ring, stripe
    const IoUStats a = run_benchmark(model, f.manifest, spec, AnnotationKind::mask, 10, 3);
    CHECK(a.n_episodes == 10);
    CHECK(a.class_names == spec.test_classes);
    CHECK(a.episodes.size() == 2);
    CHECK(a.episodes[0] + a.episodes[1] == 10);
    for (std::size_t i = 0; i < a.class_names.size(); ++i) {
        CHECK(a.class_iou(i) >= 0.0);
        CHECK(a.class_iou(i) <= 1.0);
    }

    const IoUStats b = run_benchmark(model, f.manifest, spec, AnnotationKind::mask, 10, 3);
    CHECK(a.intersection == b.intersection);
    CHECK(a.union_ == b.union_);
    CHECK(a.mean_iou() == b.mean_iou());
}

TEST_CASE("aggregated miou equals brute-force recomputation from episodes") {
    auto& f = fixture();
    VrpSamModel model(f.mc);
    const FoldSpec spec = synthetic_fold(f.cfg.classes, 0);
    const std::size_t n = 8;
    const IoUStats stats = run_benchmark(model, f.manifest, spec, AnnotationKind::mask, n, 17);

    EpisodeSampler sampler(f.manifest, spec, Split::kTest, AnnotationKind::mask, 17);
    std::map<int, std::pair<long long, long long>> sums;
    for (std::size_t i = 0; i < n; ++i) {
        const Episode ep = sampler.episode(i);
        const BinaryMask pred = binarize(model.predict(ep));
        long long inter = 0, uni = 0;
        for (std::size_t j = 0; j < pred.data.size(); ++j) {
            inter += pred.data[j] && ep.tgt_gt.data[j];
            uni += pred.data[j] || ep.tgt_gt.data[j];
        }
        sums[ep.class_id].first += inter;
        sums[ep.class_id].second += uni;
    }
    double want = 0.0;
    for (std::size_t i = 0; i < stats.class_names.size(); ++i) {
        const int class_id = sampler.class_ids()[i];
        const auto [inter, uni] = sums.count(class_id) ? sums[class_id]
                                                       : std::pair<long long, long long>{0, 0};
        CHECK(stats.intersection[i] == inter);
        CHECK(stats.union_[i] == uni);
        want += uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    }
    want /= static_cast<double>(stats.class_names.size());
    CHECK(stats.mean_iou() == want);
}

TEST_CASE("parallel workers reproduce serial stats exactly") {
    auto& f = fixture();
    VrpSamModel model(f.mc);
    const FoldSpec spec = synthetic_fold(f.cfg.classes, 1);
    const IoUStats serial =
        run_benchmark(model, f.manifest, spec, AnnotationKind::point, 9, 5, 1);
    const IoUStats parallel =
        run_benchmark(model, f.manifest, spec, AnnotationKind::point, 9, 5, 3);
    CHECK(serial.intersection == parallel.intersection);
    CHECK(serial.union_ == parallel.union_);
    CHECK(serial.n_episodes == parallel.n_episodes);
}

TEST_CASE("gp baseline runs every kind over the shared protocol") {
    auto& f = fixture();
    VrpSamModel model(f.mc);
    const FoldSpec spec = synthetic_fold(f.cfg.classes, 0);
    for (GpKind kind : {GpKind::points, GpKind::box, GpKind::points_and_box}) {
        const IoUStats stats = run_gp_baseline(model, f.manifest, spec, kind, 6, 11);
        CHECK(stats.n_episodes == 6);
        // The normalized pseudo-mask always reaches 1.0, so thresholding at
        // 0.5 can never empty it through this path.
        CHECK(stats.empty_threshold_failures == 0);
        const IoUStats again = run_gp_baseline(model, f.manifest, spec, kind, 6, 11);
        CHECK(stats.intersection == again.intersection);
    }
}

TEST_CASE("multi-vrp with one reference reduces to the standard benchmark") {
    auto& f = fixture();
    VrpSamModel model(f.mc);
    const FoldSpec spec = synthetic_fold(f.cfg.classes, 2);
    const IoUStats single = run_benchmark(model, f.manifest, spec, AnnotationKind::mask, 7, 23);
    const IoUStats multi1 =
        run_multi_vrp(model, f.manifest, spec, AnnotationKind::mask, 1, 7, 23);
    CHECK(single.intersection == multi1.intersection);
    CHECK(single.union_ == multi1.union_);

    const IoUStats multi3 =
        run_multi_vrp(model, f.manifest, spec, AnnotationKind::mask, 3, 7, 23);
    CHECK(multi3.n_episodes == 7);
    for (std::size_t i = 0; i < multi3.class_names.size(); ++i) {
        CHECK(multi3.class_iou(i) >= 0.0);
        CHECK(multi3.class_iou(i) <= 1.0);
    }
}

TEST_CASE("multi_episode shares the target and prefixes the single episode") {
    auto& f = fixture();
    const FoldSpec spec = synthetic_fold(f.cfg.classes, 0);
    EpisodeSampler sampler(f.manifest, spec, Split::kTest, AnnotationKind::mask, 31);
    for (std::size_t i = 0; i < 4; ++i) {
        const Episode single = sampler.episode(i);
        const auto multi = sampler.multi_episode(i, 3);
        REQUIRE(multi.size() == 3);
        CHECK(multi[0].ref_image.data == single.ref_image.data);
        CHECK(multi[0].annotation.raster.data == single.annotation.raster.data);
        CHECK(multi[0].annotation.seed == single.annotation.seed);
        for (const auto& ep : multi) {
            CHECK(ep.class_id == single.class_id);
            CHECK(ep.tgt_image.data == single.tgt_image.data);
            CHECK(ep.tgt_gt.data == single.tgt_gt.data);
            CHECK(ep.ref_image.data != ep.tgt_image.data);
        }
        // 4 items per class: the 3 references must be pairwise distinct.
        CHECK(multi[0].ref_image.data != multi[1].ref_image.data);
        CHECK(multi[0].ref_image.data != multi[2].ref_image.data);
        CHECK(multi[1].ref_image.data != multi[2].ref_image.data);
    }
    CHECK_THROWS_AS(sampler.multi_episode(0, 0), Error);
}

TEST_CASE("emit_report writes json, markdown and svg") {
    auto& f = fixture();
    VrpSamModel model(f.mc);
    TempDir out("report_out");
    std::vector<ReportRun> runs;
    for (int fold = 0; fold < 3; ++fold) {
        const FoldSpec spec = synthetic_fold(f.cfg.classes, fold);
        const IoUStats stats =
            run_benchmark(model, f.manifest, spec, AnnotationKind::mask, 4, 7);
        runs.push_back(report_run(stats, spec, "mask"));
    }
    const FoldSpec gp_spec = synthetic_fold(f.cfg.classes, 0);
    runs.push_back(report_run(run_gp_baseline(model, f.manifest, gp_spec, GpKind::points, 4, 7),
                              gp_spec, "mask", "points"));
    emit_report(runs, out.path());

    const auto doc = nlohmann::json::parse(std::ifstream(out.path() / "results.json"));
    REQUIRE(doc.contains("runs"));
    REQUIRE(doc["runs"].size() == 4);
    for (const auto& run : doc["runs"]) {
        CHECK(run.contains("dataset"));
        CHECK(run.contains("fold"));
        CHECK(run.contains("annotation_kind"));
        CHECK(run.contains("n_episodes"));
        CHECK(run.contains("per_class"));
        CHECK(run.contains("mean_iou"));
        CHECK(run["per_class"].size() == 2);
    }
    CHECK(!doc["runs"][0].contains("gp_variant"));
    CHECK(doc["runs"][3]["gp_variant"] == "points");

    std::ifstream md(out.path() / "results.md");
    std::string line;
    int rows = 0;
    while (std::getline(md, line)) {
        if (!line.empty() && line.front() == '|') ++rows;
    }
    CHECK(rows == 2 + 4 + 1);  // header + separator + runs + mean

    std::stringstream svg;
    svg << std::ifstream(out.path() / "results.svg").rdbuf();
    CHECK(xml_well_formed(svg.str()));
}

TEST_CASE("report json round-trips") {
    TempDir out("report_roundtrip");
    ReportRun run;
    run.dataset = "synthetic";
    run.fold = 1;
    run.annotation_kind = "scribble";
    run.n_episodes = 5;
    run.per_class = {{"ring", 0.25}, {"stripe", 0.75}};
    run.mean_iou = 0.5;
    run.gp_variant = "box";
    emit_report({run}, out.path());
    const auto doc = nlohmann::json::parse(std::ifstream(out.path() / "results.json"));
    const auto& j = doc["runs"][0];
    CHECK(j["dataset"] == "synthetic");
    CHECK(j["fold"] == 1);
    CHECK(j["annotation_kind"] == "scribble");
    CHECK(j["n_episodes"] == 5);
    CHECK(j["per_class"]["ring"] == 0.25);
    CHECK(j["mean_iou"] == 0.5);
    CHECK(j["gp_variant"] == "box");
}
