#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "doctest.h"
#include "support/oracles.hpp"
#include "vrpseg/attention.hpp"
#include "vrpseg/positional.hpp"
#include "vrpseg/rng.hpp"
#include "vrpseg/vrp_encoder.hpp"

using namespace vrpseg;

namespace {

Image random_image(int h, int w, std::uint64_t seed) {
    Image img(h, w);
    Rng rng(seed);
    for (double& v : img.data) v = rng.uniform_real();
    return img;
}

BinaryMask disc_mask(int h, int w, int cr, int cc, int radius) {
    BinaryMask m(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            if ((r - cr) * (r - cr) + (c - cc) * (c - cc) <= radius * radius) m.at(r, c) = 1;
    return m;
}

}  // namespace

TEST_CASE("positional encodings: shape, bounds, per-cell injectivity") {
    const Mat pe = sinusoidal_posenc_2d(4, 5, 16);
    REQUIRE(pe.rows() == 20);
    REQUIRE(pe.cols() == 16);
    CHECK(pe.maxCoeff() <= 1.0);
    CHECK(pe.minCoeff() >= -1.0);
    for (Eigen::Index a = 0; a < pe.rows(); ++a)
        for (Eigen::Index b = a + 1; b < pe.rows(); ++b)
            CHECK((pe.row(a) - pe.row(b)).cwiseAbs().maxCoeff() > 1e-6);
    CHECK_THROWS_AS(sinusoidal_posenc_2d(2, 2, 10), Error);
}

TEST_CASE("attention block: single key with zero queries reproduces the value row") {
    const int dim = 8;
    AttentionBlockParams p;
    p.init(dim, 1);
    p.wq = p.wk = p.wv = p.wo = Mat::Identity(dim, dim);

    Rng rng(2);
    const Mat key = oracle::random_mat(1, dim, rng);
    Tape t;
    const AttentionBlockIds ids = attention_leaves(t, p, 2, false);
    const Tape::Id y = attention_block(t, ids, t.constant(Mat::Zero(3, dim)), t.constant(key));
    // Softmax over one element is 1, so before normalization every query row
    // is 0 + key; after the shared layer norm all rows stay identical.
    const Mat& yv = t.value(y);
    Tape t2;
    const Mat direct = t2.value(t2.layer_norm_rows(t2.constant(key), t2.constant(p.ln_gain),
                                                   t2.constant(p.ln_bias)));
    for (int r = 0; r < 3; ++r) CHECK((yv.row(r) - direct.row(0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("attention block: key/value pixel permutation invariance hinges on posenc") {
    const int dim = 12;
    AttentionBlockParams p;
    p.init(dim, 3);
    Rng rng(4);
    const Mat q = oracle::random_mat(3, dim, rng);
    const Mat kv = oracle::random_mat(7, dim, rng);
    Mat perm = kv;
    std::vector<int> order{3, 0, 6, 2, 5, 1, 4};
    for (int i = 0; i < 7; ++i) perm.row(i) = kv.row(order[static_cast<std::size_t>(i)]);

    Tape t;
    const AttentionBlockIds ids = attention_leaves(t, p, 3, false);
    const Mat base = t.value(attention_block(t, ids, t.constant(q), t.constant(kv)));
    const Mat swapped = t.value(attention_block(t, ids, t.constant(q), t.constant(perm)));
    CHECK((base - swapped).cwiseAbs().maxCoeff() < 1e-12);

    const Mat pos = oracle::random_mat(7, dim, rng);
    const Tape::Id pos_id = t.constant(pos);
    const Mat with_pos =
        t.value(attention_block(t, ids, t.constant(q), t.constant(kv), pos_id));
    const Mat with_pos_perm =
        t.value(attention_block(t, ids, t.constant(q), t.constant(perm), pos_id));
    CHECK((with_pos - with_pos_perm).cwiseAbs().maxCoeff() > 1e-6);
}

TEST_CASE("init_queries implements all four modes") {
    Prototype fg, bg;
    fg.data.assign(8, 0.0);
    bg.data.assign(8, 0.0);
    for (int c = 0; c < 8; ++c) {
        fg.data[static_cast<std::size_t>(c)] = c + 1.0;
        bg.data[static_cast<std::size_t>(c)] = -(c + 1.0);
    }

    const Mat r1 = init_queries(QueryInit::random, 50, 8, 77, nullptr, nullptr);
    const Mat r2 = init_queries(QueryInit::random, 50, 8, 77, nullptr, nullptr);
    CHECK(r1 == r2);
    CHECK(r1.cwiseAbs().maxCoeff() < 0.2);  // sigma 0.02 scale
    CHECK(r1.cwiseAbs().maxCoeff() > 0.0);

    const Mat f = init_queries(QueryInit::fp, 5, 8, 0, &fg, &bg);
    for (int i = 0; i < 5; ++i) CHECK(f(i, 3) == 4.0);

    const Mat b = init_queries(QueryInit::bp, 5, 8, 0, &fg, &bg);
    for (int i = 0; i < 5; ++i) CHECK(b(i, 0) == -1.0);

    const Mat h = init_queries(QueryInit::half_fp_half_bp, 50, 8, 0, &fg, &bg);
    for (int i = 0; i < 25; ++i) CHECK(h(i, 0) == 1.0);
    for (int i = 25; i < 50; ++i) CHECK(h(i, 0) == -1.0);

    CHECK_THROWS_AS(init_queries(QueryInit::fp, 5, 8, 0, nullptr, &bg), Error);
    Prototype narrow;
    narrow.data.assign(4, 1.0);
    CHECK_THROWS_AS(init_queries(QueryInit::fp, 5, 8, 0, &narrow, nullptr), Error);
}

TEST_CASE("query init mode names round-trip") {
    for (QueryInit m : {QueryInit::random, QueryInit::fp, QueryInit::bp,
                        QueryInit::half_fp_half_bp})
        CHECK(query_init_from_name(query_init_name(m)) == m);
    CHECK_THROWS_AS(query_init_from_name("fancy"), Error);
}

TEST_CASE("vrp encoder: augment shapes and prompt shape") {
    ToyEncoder enc;
    VrpEncoder vrp(VrpConfig{}, enc.mid_channels());
    const EncoderTaps ref = enc.encode(random_image(64, 64, 10));
    const EncoderTaps tgt = enc.encode(random_image(64, 64, 11));
    const Annotation ann = mask_annotation(disc_mask(64, 64, 30, 30, 12));

    const auto [fr, ft] = vrp.augment(ref, tgt, ann);
    CHECK(fr.channels == 64);
    CHECK(fr.height == 8);
    CHECK(fr.width == 8);
    CHECK(ft.channels == 64);

    const PromptEmbedding prompts = vrp.generate_prompts(ref, tgt, ann);
    CHECK(prompts.n == 50);
    CHECK(prompts.dim == 64);
    const PromptEmbedding again = vrp.generate_prompts(ref, tgt, ann);
    CHECK(prompts.data == again.data);
}

TEST_CASE("vrp encoder: identical images with full mask give F_r' = F_t'") {
    ToyEncoder enc;
    VrpEncoder vrp(VrpConfig{}, enc.mid_channels());
    const Image img = random_image(64, 64, 12);
    const EncoderTaps taps = enc.encode(img);
    BinaryMask full(64, 64, 1);
    const auto [fr, ft] = vrp.augment(taps, taps, mask_annotation(full));
    for (std::size_t i = 0; i < fr.data.size(); ++i)
        CHECK(fr.data[i] == doctest::Approx(ft.data[i]).epsilon(1e-12));
}

TEST_CASE("vrp encoder: prototype follows the annotation per the pooling oracle") {
    ToyEncoder enc;
    const EncoderTaps ref = enc.encode(random_image(64, 64, 13));
    const BinaryMask a = disc_mask(64, 64, 20, 20, 10);
    const BinaryMask b = disc_mask(64, 64, 44, 44, 10);
    const BinaryMask a8 = resize_mask_nonempty(a, 8, 8);
    const BinaryMask b8 = resize_mask_nonempty(b, 8, 8);
    const auto pa = oracle::mask_avg_pool(ref.mid, a8);
    const auto pb = oracle::mask_avg_pool(ref.mid, b8);
    const Prototype ga = mask_avg_pool(ref.mid, a8);
    bool differs = false;
    for (std::size_t c = 0; c < pa.size(); ++c) {
        CHECK(ga.data[c] == doctest::Approx(pa[c]).epsilon(1e-12));
        differs |= std::abs(pa[c] - pb[c]) > 1e-9;
    }
    CHECK(differs);
}

TEST_CASE("vrp encoder: trainable parameter inventory") {
    ToyEncoder enc;
    VrpEncoder vrp(VrpConfig{}, enc.mid_channels());
    auto params = vrp.trainable_parameters();
    // queries + aug w/b + 4 blocks x 6 tensors
    REQUIRE(params.size() == 3 + 4 * 6);
    CHECK(params[0].name == "vrp/queries");
    CHECK(params[1].name == "vrp/aug/weight");
    CHECK(params[1].decay);
    CHECK(!params[0].decay);
    CHECK(!params[2].decay);
    CHECK(params[1].shape == std::vector<int>{2 * 128 + 1, 64});
    std::set<std::string> names;
    for (const auto& p : params) names.insert(p.name);
    CHECK(names.size() == params.size());
    CHECK(names.count("vrp/cross1/wq") == 1);
    CHECK(names.count("vrp/self2/ln_bias") == 1);
    for (const auto& p : params) {
        if (p.name.find("/wq") != std::string::npos) CHECK(p.decay);
        if (p.name.find("ln_") != std::string::npos) CHECK(!p.decay);
    }
}

TEST_CASE("vrp encoder: shared projection has one storage, two call sites") {
    ToyEncoder enc;
    VrpEncoder vrp(VrpConfig{}, enc.mid_channels());
    const EncoderTaps ref = enc.encode(random_image(64, 64, 14));
    const EncoderTaps tgt = enc.encode(random_image(64, 64, 15));
    const Annotation ann = mask_annotation(disc_mask(64, 64, 32, 32, 10));

    const auto [fr0, ft0] = vrp.augment(ref, tgt, ann);
    auto params = vrp.trainable_parameters();
    REQUIRE(params[1].name == "vrp/aug/weight");
    params[1].data[0] += 0.5;
    const auto [fr1, ft1] = vrp.augment(ref, tgt, ann);
    double dr = 0.0, dt = 0.0;
    for (std::size_t i = 0; i < fr0.data.size(); ++i) {
        dr = std::max(dr, std::abs(fr0.data[i] - fr1.data[i]));
        dt = std::max(dt, std::abs(ft0.data[i] - ft1.data[i]));
    }
    CHECK(dr > 1e-9);
    CHECK(dt > 1e-9);
}

TEST_CASE("vrp encoder: gradient reaches every trainable leaf") {
    ToyEncoder enc;
    VrpEncoder vrp(VrpConfig{}, enc.mid_channels());
    const EncoderTaps ref = enc.encode(random_image(64, 64, 16));
    const EncoderTaps tgt = enc.encode(random_image(64, 64, 17));
    const Annotation ann = mask_annotation(disc_mask(64, 64, 32, 32, 14));

    Tape t;
    std::vector<ParamBinding> binds;
    const Tape::Id prompts = vrp.build_prompts(t, ref, tgt, ann, &binds);
    CHECK(binds.size() == vrp.trainable_parameters().size());
    t.backward(oracle::weighted_scalar(t, prompts));
    for (const auto& b : binds) {
        CHECK(t.has_grad(b.tape_id));
        CHECK(t.grad(b.tape_id).cwiseAbs().maxCoeff() > 0.0);
    }
}

TEST_CASE("vrp encoder: posenc flag controls key encodings") {
    ToyEncoder enc;
    VrpConfig with;
    VrpConfig without;
    without.posenc = false;
    VrpEncoder a(with, enc.mid_channels());
    VrpEncoder b(without, enc.mid_channels());
    const EncoderTaps ref = enc.encode(random_image(64, 64, 18));
    const EncoderTaps tgt = enc.encode(random_image(64, 64, 19));
    const Annotation ann = mask_annotation(disc_mask(64, 64, 32, 32, 10));
    const PromptEmbedding pa = a.generate_prompts(ref, tgt, ann);
    const PromptEmbedding pb = b.generate_prompts(ref, tgt, ann);
    CHECK((pa.data - pb.data).cwiseAbs().maxCoeff() > 1e-9);
}
