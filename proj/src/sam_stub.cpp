#include "vrpseg/sam_stub.hpp"

#include <algorithm>
#include <cmath>

#include "vrpseg/positional.hpp"
#include "vrpseg/rng.hpp"
#include "vrpseg/tokens.hpp"

namespace vrpseg {

const char* gp_kind_name(GpKind kind) {
    switch (kind) {
        case GpKind::points: return "points";
        case GpKind::box: return "box";
        case GpKind::points_and_box: return "points_and_box";
    }
    return "points";
}

GpKind gp_kind_from_name(const std::string& name) {
    if (name == "points") return GpKind::points;
    if (name == "box") return GpKind::box;
    if (name == "points_and_box") return GpKind::points_and_box;
    throw Error(ErrorCode::ConfigError, "unknown geometric prompt kind: " + name);
}

GeometricPrompt gp_prompts_from_pseudo_mask(const SimilarityMap& pm, GpKind kind,
                                            std::uint64_t seed) {
    std::vector<int> candidates;
    for (std::size_t i = 0; i < pm.data.size(); ++i)
        if (pm.data[i] >= kGpThreshold) candidates.push_back(static_cast<int>(i));
    if (candidates.empty()) {
        throw Error(ErrorCode::EmptyAfterThreshold, "no pseudo-mask pixel reaches the threshold");
    }

    GeometricPrompt out;
    out.kind = kind;
    if (kind == GpKind::points || kind == GpKind::points_and_box) {
        Rng rng(seed);
        constexpr int kPoints = 5;
        const int n = static_cast<int>(candidates.size());
        std::vector<int> picked;
        if (n >= kPoints) {
            // Partial Fisher-Yates for distinct indices.
            std::vector<int> pool = candidates;
            for (int i = 0; i < kPoints; ++i) {
                const int j = rng.uniform_int(i, n - 1);
                std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
                picked.push_back(pool[static_cast<std::size_t>(i)]);
            }
        } else {
            for (int i = 0; i < kPoints; ++i)
                picked.push_back(candidates[static_cast<std::size_t>(rng.uniform_int(0, n - 1))]);
        }
        for (int idx : picked) out.points.emplace_back(idx / pm.width, idx % pm.width);
    }
    if (kind == GpKind::box || kind == GpKind::points_and_box) {
        BoxSpec box{pm.height, pm.width, 0, 0};
        for (int idx : candidates) {
            const int r = idx / pm.width, c = idx % pm.width;
            box.row_min = std::min(box.row_min, r);
            box.col_min = std::min(box.col_min, c);
            box.row_max = std::max(box.row_max, r);
            box.col_max = std::max(box.col_max, c);
        }
        out.box = box;
    }
    return out;
}

DecoderStub::DecoderStub(DecoderConfig cfg, int mid_channels)
    : cfg_(cfg), mid_channels_(mid_channels) {
    if (cfg_.dim % cfg_.heads != 0 || cfg_.dim % 4 != 0) {
        throw Error(ErrorCode::BadConfig, "decoder dim must be divisible by heads and by 4");
    }
    Rng rng(derive_seed(cfg_.weight_seed, 0));
    auto fill = [&rng](Mat& m, int rows, int cols) {
        m = Mat(rows, cols);
        const double sigma = 1.0 / std::sqrt(static_cast<double>(rows));
        for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = sigma * rng.gaussian();
    };
    fill(in_w_, mid_channels_, cfg_.dim);
    in_b_ = Mat::Zero(1, cfg_.dim);
    p2i_.init(cfg_.dim, derive_seed(cfg_.weight_seed, 1));
    i2p_.init(cfg_.dim, derive_seed(cfg_.weight_seed, 2));
    fill(up1_w_, cfg_.dim, 32);
    up1_b_ = Mat::Zero(1, 32);
    fill(up2_w_, 32, 16);
    up2_b_ = Mat::Zero(1, 16);
    fill(hyper_w_, cfg_.dim, 16);
    head_b_ = Mat::Zero(1, 1);
    fill(point_type_, 1, cfg_.dim);
    fill(corner1_type_, 1, cfg_.dim);
    fill(corner2_type_, 1, cfg_.dim);
}

Tape::Id DecoderStub::build_decode(Tape& t, const EncoderTaps& tgt, Tape::Id prompts) const {
    if (t.value(prompts).cols() != cfg_.dim) {
        throw Error(ErrorCode::ShapeMismatch, "prompt dim does not match decoder dim");
    }
    if (t.value(prompts).rows() < 1) {
        throw Error(ErrorCode::ShapeMismatch, "decoder needs at least one prompt row");
    }
    if (tgt.mid.channels != mid_channels_) {
        throw Error(ErrorCode::ShapeMismatch, "target mid channels do not match decoder");
    }
    const int h = tgt.mid.height, w = tgt.mid.width;

    // Image embedding: frozen projection of the mid tap. Positional encodings
    // enter attention queries and keys only, never the value path, so the
    // logits stay content-driven.
    Mat x0 = tokens_from_features(tgt.mid) * in_w_;
    x0.rowwise() += in_b_.row(0);
    const Tape::Id image = t.constant(x0);
    const Tape::Id pos = t.constant(sinusoidal_posenc_2d(h, w, cfg_.dim));

    const AttentionBlockIds p2i = attention_leaves(t, p2i_, cfg_.heads, false);
    const AttentionBlockIds i2p = attention_leaves(t, i2p_, cfg_.heads, false);
    const Tape::Id prompts_mixed = attention_block(t, p2i, prompts, image, pos);
    const Tape::Id image_mixed = attention_block(t, i2p, image, prompts_mixed, -1, pos);

    // Two resize-convolution stages (channel mix + bilinear doubling), then
    // the dynamic logit head and a final bilinear doubling back to input
    // resolution.
    Tape::Id y = t.bilinear_upsample2(t.matmul(image_mixed, t.constant(up1_w_)), h, w);
    y = t.relu(t.add_row_broadcast(y, t.constant(up1_b_)));
    y = t.bilinear_upsample2(t.matmul(y, t.constant(up2_w_)), 2 * h, 2 * w);
    y = t.relu(t.add_row_broadcast(y, t.constant(up2_b_)));

    // Mean-pooling the attended prompt rows keeps permutation invariance; the
    // pooled state picks the per-pixel classifier over the upscaled embedding.
    const Eigen::Index np = t.value(prompts_mixed).rows();
    const Mat pool = Mat::Constant(1, np, 1.0 / static_cast<double>(np));
    const Tape::Id head =
        t.matmul(t.matmul(t.constant(pool), prompts_mixed), t.constant(hyper_w_));
    const Tape::Id logits =
        t.add_row_broadcast(t.matmul_nt(y, head), t.constant(head_b_));
    return t.bilinear_upsample2(logits, 4 * h, 4 * w);
}

SimilarityMap DecoderStub::decode(const EncoderTaps& tgt, const PromptEmbedding& prompts) const {
    Tape t;
    const Tape::Id out = build_decode(t, tgt, t.constant(prompts.data));
    const int ih = tgt.mid.height * 8, iw = tgt.mid.width * 8;
    SimilarityMap logits(ih, iw);
    const Mat& v = t.value(out);
    for (Eigen::Index i = 0; i < v.rows(); ++i) logits.data[static_cast<std::size_t>(i)] = v(i, 0);
    return logits;
}

PromptEmbedding DecoderStub::embed_geometric(const GeometricPrompt& prompt, int image_h,
                                             int image_w) const {
    if (prompt.kind != GpKind::box && prompt.points.empty()) {
        throw Error(ErrorCode::BadShape, "point prompt without points");
    }
    if (prompt.kind != GpKind::points && !prompt.box.has_value()) {
        throw Error(ErrorCode::BadShape, "box prompt without a box");
    }
    const Mat pe = sinusoidal_posenc_2d(image_h, image_w, cfg_.dim);
    auto pe_row = [&](int r, int c) {
        if (r < 0 || r >= image_h || c < 0 || c >= image_w) {
            throw Error(ErrorCode::OutOfBounds, "prompt coordinate outside the image");
        }
        return pe.row(static_cast<Eigen::Index>(r) * image_w + c);
    };

    std::vector<Mat> rows;
    if (prompt.kind != GpKind::box) {
        for (const auto& [r, c] : prompt.points)
            rows.push_back(pe_row(r, c) + point_type_.row(0));
    }
    if (prompt.kind != GpKind::points) {
        const BoxSpec& b = *prompt.box;
        rows.push_back(pe_row(b.row_min, b.col_min) + corner1_type_.row(0));
        rows.push_back(pe_row(b.row_max, b.col_max) + corner2_type_.row(0));
    }

    PromptEmbedding out;
    out.n = static_cast<int>(rows.size());
    out.dim = cfg_.dim;
    out.data = Mat(out.n, cfg_.dim);
    for (int i = 0; i < out.n; ++i) out.data.row(i) = rows[static_cast<std::size_t>(i)].row(0);
    return out;
}

std::vector<NamedTensorView> DecoderStub::parameters() {
    std::vector<NamedTensorView> out;
    auto view = [&out](const char* name, Mat& m) {
        out.push_back({std::string("decoder/") + name,
                       {static_cast<int>(m.rows()), static_cast<int>(m.cols())},
                       m.data(), static_cast<std::size_t>(m.size()), false});
    };
    view("in/weight", in_w_);
    view("in/bias", in_b_);
    p2i_.collect("decoder/p2i", false, out);
    i2p_.collect("decoder/i2p", false, out);
    view("up1/weight", up1_w_);
    view("up1/bias", up1_b_);
    view("up2/weight", up2_w_);
    view("up2/bias", up2_b_);
    view("head/hyper", hyper_w_);
    view("head/bias", head_b_);
    view("type/point", point_type_);
    view("type/corner1", corner1_type_);
    view("type/corner2", corner2_type_);
    return out;
}

}  // namespace vrpseg
