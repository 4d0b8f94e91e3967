#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

#include "doctest.h"
#include "support/tempdir.hpp"
#include "vrpseg/dataset.hpp"
#include "vrpseg/error.hpp"
#include "vrpseg/model.hpp"

using namespace vrpseg;
using vrpseg::testing::TempDir;

namespace {

/// Small shared fixture: one rendered dataset plus episodes off fold 0.
struct ModelFixture {
    TempDir dir{"model_fixture"};
    SynthConfig cfg;
    DatasetManifest manifest;
    std::vector<Episode> episodes;

    ModelFixture() {
        cfg.per_class = 3;
        cfg.classes = {"circle", "square", "triangle", "cross", "ring", "stripe"};
        manifest = synth_dataset(cfg, 404, dir.path());
        episodes = sample_episodes(manifest, synthetic_fold(cfg.classes, 0), Split::kTest, 4,
                                   AnnotationKind::mask, 99);
    }
};

ModelFixture& fixture() {
    static ModelFixture f;
    return f;
}

ModelConfig tiny_model_config() {
    ModelConfig mc;
    mc.vrp.dim = 16;
    mc.vrp.heads = 2;
    mc.vrp.n_queries = 8;
    mc.decoder.dim = 16;
    mc.decoder.heads = 2;
    return mc;
}

}  // namespace

TEST_CASE("model wires taps, prompts, decoder and loss into one graph") {
    VrpSamModel model(tiny_model_config());
    const Episode& ep = fixture().episodes[0];

    Tape t;
    const auto g = model.build_episode_graph(t, ep, LossMode::bce_plus_dice);
    CHECK(t.value(g.prompts).rows() == 8);
    CHECK(t.value(g.prompts).cols() == 16);
    CHECK(t.value(g.logits).rows() == 64 * 64);
    CHECK(t.value(g.logits).cols() == 1);
    CHECK(g.binds.size() == 27);
    const double total = t.value(g.loss.total)(0, 0);
    CHECK(std::isfinite(total));
    CHECK(total == doctest::Approx(t.value(g.loss.bce)(0, 0) + t.value(g.loss.dice)(0, 0)));

    t.backward(g.loss.total);
    for (const auto& bind : g.binds) {
        CHECK(t.has_grad(bind.tape_id));
    }
}

TEST_CASE("predict matches the tape forward") {
    VrpSamModel model(tiny_model_config());
    const Episode& ep = fixture().episodes[1];

    const SimilarityMap plain = model.predict(ep);
    REQUIRE(plain.height == 64);
    REQUIRE(plain.width == 64);

    Tape t;
    const auto g = model.build_episode_graph(t, ep, LossMode::bce);
    const Mat& logits = t.value(g.logits);
    double max_diff = 0.0;
    for (int r = 0; r < plain.height; ++r) {
        for (int c = 0; c < plain.width; ++c) {
            max_diff = std::max(max_diff,
                                std::abs(plain.at(r, c) - logits(r * plain.width + c, 0)));
        }
    }
    CHECK(max_diff < 1e-12);
}

TEST_CASE("tap cache returns identical features and predict is repeatable") {
    VrpSamModel model(tiny_model_config());
    const Episode& ep = fixture().episodes[2];
    const EncoderTaps a = model.taps(ep.ref_image);
    const EncoderTaps b = model.taps(ep.ref_image);
    CHECK(a.mid.data == b.mid.data);
    CHECK(a.high.data == b.high.data);

    const SimilarityMap p1 = model.predict(ep);
    const SimilarityMap p2 = model.predict(ep);
    CHECK(p1.data == p2.data);
}

TEST_CASE("disk cache round-trips taps exactly") {
    TempDir cache("tap_cache");
    ::setenv("VRPSEG_CACHE", cache.path().string().c_str(), 1);
    const Episode& ep = fixture().episodes[0];
    EncoderTaps first, second;
    {
        VrpSamModel model(tiny_model_config());
        first = model.taps(ep.ref_image);
    }
    bool cache_file_seen = false;
    for (const auto& entry : std::filesystem::directory_iterator(cache.path())) {
        cache_file_seen = cache_file_seen || entry.path().extension() == ".bin";
    }
    CHECK(cache_file_seen);
    {
        // Fresh model, warm disk cache: must load the same bytes.
        VrpSamModel model(tiny_model_config());
        second = model.taps(ep.ref_image);
    }
    ::unsetenv("VRPSEG_CACHE");
    CHECK(first.mid.data == second.mid.data);
    CHECK(first.high.data == second.high.data);

    // A corrupt cache entry is ignored, not trusted.
    TempDir corrupt("tap_cache_bad");
    ::setenv("VRPSEG_CACHE", corrupt.path().string().c_str(), 1);
    {
        VrpSamModel model(tiny_model_config());
        EncoderTaps t0 = model.taps(ep.ref_image);
        for (const auto& entry : std::filesystem::directory_iterator(corrupt.path())) {
            std::ofstream(entry.path(), std::ios::binary) << "garbage";
        }
        VrpSamModel model2(tiny_model_config());
        EncoderTaps t1 = model2.taps(ep.ref_image);
        CHECK(t0.mid.data == t1.mid.data);
    }
    ::unsetenv("VRPSEG_CACHE");
}

TEST_CASE("predict_multi concatenates prompt rows and reduces to predict at n=1") {
    VrpSamModel model(tiny_model_config());
    auto& f = fixture();

    // Build two references sharing episode 0's target.
    Episode a = f.episodes[0];
    Episode b = f.episodes[0];
    b.ref_image = f.episodes[0].tgt_image;  // swap roles for a distinct reference
    b.ref_gt = f.episodes[0].tgt_gt;
    b.annotation = mask_annotation(b.ref_gt, b.class_id);
    b.tgt_image = a.tgt_image;
    b.tgt_gt = a.tgt_gt;

    const SimilarityMap single = model.predict(a);
    const SimilarityMap multi1 = model.predict_multi({a});
    CHECK(single.data == multi1.data);

    const SimilarityMap multi2 = model.predict_multi({a, b});
    CHECK(multi2.height == single.height);
    for (double v : multi2.data) CHECK(std::isfinite(v));

    Episode wrong = b;
    wrong.class_id = a.class_id + 1;
    CHECK_THROWS_AS(model.predict_multi({a, wrong}), Error);
    CHECK_THROWS_AS(model.predict_multi({}), Error);
}

TEST_CASE("duplicating one reference five times changes nothing") {
    VrpSamModel model(tiny_model_config());
    const Episode& ep = fixture().episodes[3];
    const SimilarityMap one = model.predict(ep);
    const SimilarityMap five = model.predict_multi({ep, ep, ep, ep, ep});
    double max_diff = 0.0;
    for (std::size_t i = 0; i < one.data.size(); ++i) {
        max_diff = std::max(max_diff, std::abs(one.data[i] - five.data[i]));
    }
    CHECK(max_diff < 1e-9);
}

TEST_CASE("geometric baseline runs the documented pipeline deterministically") {
    VrpSamModel model(tiny_model_config());
    const Episode& ep = fixture().episodes[0];
    for (GpKind kind : {GpKind::points, GpKind::box, GpKind::points_and_box}) {
        const SimilarityMap p = model.predict_geometric(ep, kind, 5);
        CHECK(p.height == 64);
        CHECK(p.width == 64);
        for (double v : p.data) CHECK(std::isfinite(v));
        const SimilarityMap q = model.predict_geometric(ep, kind, 5);
        CHECK(p.data == q.data);
    }
    const SimilarityMap s5 = model.predict_geometric(ep, GpKind::points, 5);
    const SimilarityMap s6 = model.predict_geometric(ep, GpKind::points, 6);
    CHECK(s5.data != s6.data);
}

TEST_CASE("parameter inventories and decoder hash") {
    VrpSamModel model(tiny_model_config());
    CHECK(model.trainable_parameters().size() == 27);
    const auto all = model.all_parameters();
    CHECK(all.size() == 8 + 27 + 23);
    std::set<std::string> names;
    for (const auto& v : all) names.insert(v.name);
    CHECK(names.size() == all.size());

    VrpSamModel same(tiny_model_config());
    CHECK(model.decoder_hash() == same.decoder_hash());
    ModelConfig other = tiny_model_config();
    other.decoder.weight_seed = 0x1234;
    VrpSamModel changed(other);
    CHECK(model.decoder_hash() != changed.decoder_hash());
}

TEST_CASE("mismatched vrp and decoder dims are rejected") {
    ModelConfig mc = tiny_model_config();
    mc.decoder.dim = 32;
    CHECK_THROWS_AS(VrpSamModel{mc}, Error);
}
