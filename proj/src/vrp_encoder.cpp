#include "vrpseg/vrp_encoder.hpp"

#include <cmath>

#include "vrpseg/positional.hpp"
#include "vrpseg/rng.hpp"
#include "vrpseg/tokens.hpp"

namespace vrpseg {

const char* query_init_name(QueryInit mode) {
    switch (mode) {
        case QueryInit::random: return "random";
        case QueryInit::fp: return "fp";
        case QueryInit::bp: return "bp";
        case QueryInit::half_fp_half_bp: return "half_fp_half_bp";
    }
    return "random";
}

QueryInit query_init_from_name(const std::string& name) {
    if (name == "random") return QueryInit::random;
    if (name == "fp") return QueryInit::fp;
    if (name == "bp") return QueryInit::bp;
    if (name == "half_fp_half_bp") return QueryInit::half_fp_half_bp;
    throw Error(ErrorCode::ConfigError, "unknown query init mode: " + name);
}

Mat init_queries(QueryInit mode, int n, int dim, std::uint64_t seed, const Prototype* fg,
                 const Prototype* bg) {
    if (n < 1) throw Error(ErrorCode::BadConfig, "query count must be >= 1");
    auto proto_row = [dim](const Prototype* p, const char* which) {
        if (!p) throw Error(ErrorCode::MissingPrototype, std::string("query init needs a ") + which + " prototype");
        if (p->channels() != dim) {
            throw Error(ErrorCode::ShapeMismatch, "prototype width does not match query dim");
        }
        Mat row(1, dim);
        for (int c = 0; c < dim; ++c) row(0, c) = p->data[static_cast<std::size_t>(c)];
        return row;
    };
    Mat q(n, dim);
    switch (mode) {
        case QueryInit::random: {
            Rng rng(seed);
            for (Eigen::Index i = 0; i < q.size(); ++i) q(i) = 0.02 * rng.gaussian();
            break;
        }
        case QueryInit::fp: {
            q.rowwise() = proto_row(fg, "foreground").row(0);
            break;
        }
        case QueryInit::bp: {
            q.rowwise() = proto_row(bg, "background").row(0);
            break;
        }
        case QueryInit::half_fp_half_bp: {
            const Mat f = proto_row(fg, "foreground");
            const Mat b = proto_row(bg, "background");
            const int split = (n + 1) / 2;
            for (int i = 0; i < n; ++i) q.row(i) = (i < split ? f : b).row(0);
            break;
        }
    }
    return q;
}

VrpEncoder::VrpEncoder(VrpConfig cfg, int mid_channels)
    : cfg_(cfg), mid_channels_(mid_channels) {
    if (cfg_.dim % cfg_.heads != 0 || cfg_.dim % 4 != 0) {
        throw Error(ErrorCode::BadConfig, "vrp dim must be divisible by heads and by 4");
    }
    queries_ = init_queries(cfg_.query_init, cfg_.n_queries, cfg_.dim,
                            derive_seed(cfg_.weight_seed, 0), nullptr, nullptr);
    const int in_ch = 2 * mid_channels_ + 1;
    Rng rng(derive_seed(cfg_.weight_seed, 1));
    const double sigma = 1.0 / std::sqrt(static_cast<double>(in_ch));
    aug_weight_ = Mat(in_ch, cfg_.dim);
    for (Eigen::Index i = 0; i < aug_weight_.size(); ++i) aug_weight_(i) = sigma * rng.gaussian();
    aug_bias_ = Mat::Zero(1, cfg_.dim);
    cross1_.init(cfg_.dim, derive_seed(cfg_.weight_seed, 2));
    self1_.init(cfg_.dim, derive_seed(cfg_.weight_seed, 3));
    cross2_.init(cfg_.dim, derive_seed(cfg_.weight_seed, 4));
    self2_.init(cfg_.dim, derive_seed(cfg_.weight_seed, 5));
}

void VrpEncoder::reinit_queries(QueryInit mode, std::uint64_t seed, const Prototype* fg,
                                const Prototype* bg) {
    queries_ = init_queries(mode, cfg_.n_queries, cfg_.dim, seed, fg, bg);
    cfg_.query_init = mode;
}

VrpEncoder::BuiltGraph VrpEncoder::build_graph(Tape& t, const EncoderTaps& ref,
                                               const EncoderTaps& tgt, const Annotation& ann,
                                               std::vector<ParamBinding>* binds) const {
    if (ref.mid.channels != mid_channels_ || tgt.mid.channels != mid_channels_) {
        throw Error(ErrorCode::ShapeMismatch, "encoder mid channels do not match vrp config");
    }
    const int h = ref.mid.height, w = ref.mid.width;
    if (tgt.mid.height != h || tgt.mid.width != w) {
        throw Error(ErrorCode::ShapeMismatch, "reference and target mid taps differ in size");
    }

    // Everything upstream of the shared projection is frozen, so the stacked
    // inputs are tape constants.
    const BinaryMask ann_mid = resize_mask_nonempty(ann.raster, h, w);
    const Prototype proto = mask_avg_pool(ref.mid, ann_mid);
    Mat proto_rows(static_cast<Eigen::Index>(h) * w, mid_channels_);
    for (int c = 0; c < mid_channels_; ++c)
        proto_rows.col(c).setConstant(proto.data[static_cast<std::size_t>(c)]);

    const BinaryMask ann_high = resize_mask_nonempty(ann.raster, ref.high.height, ref.high.width);
    const SimilarityMap pm_high = pseudo_mask(ref.high, tgt.high, ann_high);
    const SimilarityMap pm_mid = resize_similarity(pm_high, h, w);

    const Eigen::Index n_tok = static_cast<Eigen::Index>(h) * w;
    const int stacked = 2 * mid_channels_ + 1;
    Mat xr(n_tok, stacked), xt(n_tok, stacked);
    xr << tokens_from_features(ref.mid), proto_rows, column_from_mask(ann_mid);
    xt << tokens_from_features(tgt.mid), proto_rows, column_from_similarity(pm_mid);

    auto bind = [&](const char* name, Tape::Id id) {
        if (binds) binds->push_back({std::string("vrp/") + name, id});
        return id;
    };
    const Tape::Id aug_w = bind("aug/weight", t.leaf(aug_weight_, true));
    const Tape::Id aug_b = bind("aug/bias", t.leaf(aug_bias_, true));

    BuiltGraph g;
    // One parameter pair, two call sites: Eq. 2-3's shared projection.
    g.fr_prime = t.add_row_broadcast(t.matmul(t.constant(xr), aug_w), aug_b);
    g.ft_prime = t.add_row_broadcast(t.matmul(t.constant(xt), aug_w), aug_b);

    const Tape::Id q0 = bind("queries", t.leaf(queries_, true));
    auto block = [&](const char* name, const AttentionBlockParams& p) {
        AttentionBlockIds ids = attention_leaves(t, p, cfg_.heads, true);
        if (binds) {
            binds->push_back({std::string("vrp/") + name + "/wq", ids.wq});
            binds->push_back({std::string("vrp/") + name + "/wk", ids.wk});
            binds->push_back({std::string("vrp/") + name + "/wv", ids.wv});
            binds->push_back({std::string("vrp/") + name + "/wo", ids.wo});
            binds->push_back({std::string("vrp/") + name + "/ln_gain", ids.ln_gain});
            binds->push_back({std::string("vrp/") + name + "/ln_bias", ids.ln_bias});
        }
        return ids;
    };
    const Tape::Id key_pos =
        cfg_.posenc ? t.constant(sinusoidal_posenc_2d(h, w, cfg_.dim)) : Tape::Id(-1);

    const AttentionBlockIds c1 = block("cross1", cross1_);
    const AttentionBlockIds s1 = block("self1", self1_);
    const AttentionBlockIds c2 = block("cross2", cross2_);
    const AttentionBlockIds s2 = block("self2", self2_);

    const Tape::Id qr_cross = attention_block(t, c1, q0, g.fr_prime, key_pos);
    const Tape::Id qr = attention_block(t, s1, qr_cross, qr_cross);
    const Tape::Id qt_cross = attention_block(t, c2, qr, g.ft_prime, key_pos);
    g.prompts = attention_block(t, s2, qt_cross, qt_cross);
    return g;
}

Tape::Id VrpEncoder::build_prompts(Tape& t, const EncoderTaps& ref, const EncoderTaps& tgt,
                                   const Annotation& ann,
                                   std::vector<ParamBinding>* binds) const {
    return build_graph(t, ref, tgt, ann, binds).prompts;
}

std::pair<FeatureMap, FeatureMap> VrpEncoder::augment(const EncoderTaps& ref,
                                                      const EncoderTaps& tgt,
                                                      const Annotation& ann) const {
    Tape t;
    const BuiltGraph g = build_graph(t, ref, tgt, ann, nullptr);
    const int h = ref.mid.height, w = ref.mid.width;
    return {features_from_tokens(t.value(g.fr_prime), h, w),
            features_from_tokens(t.value(g.ft_prime), h, w)};
}

PromptEmbedding VrpEncoder::generate_prompts(const EncoderTaps& ref, const EncoderTaps& tgt,
                                             const Annotation& ann) const {
    Tape t;
    const BuiltGraph g = build_graph(t, ref, tgt, ann, nullptr);
    PromptEmbedding out;
    out.data = t.value(g.prompts);
    out.n = static_cast<int>(out.data.rows());
    out.dim = static_cast<int>(out.data.cols());
    return out;
}

std::vector<NamedTensorView> VrpEncoder::trainable_parameters() {
    std::vector<NamedTensorView> out;
    out.push_back({"vrp/queries",
                   {static_cast<int>(queries_.rows()), static_cast<int>(queries_.cols())},
                   queries_.data(), static_cast<std::size_t>(queries_.size()), false});
    out.push_back({"vrp/aug/weight",
                   {static_cast<int>(aug_weight_.rows()), static_cast<int>(aug_weight_.cols())},
                   aug_weight_.data(), static_cast<std::size_t>(aug_weight_.size()), true});
    out.push_back({"vrp/aug/bias",
                   {static_cast<int>(aug_bias_.rows()), static_cast<int>(aug_bias_.cols())},
                   aug_bias_.data(), static_cast<std::size_t>(aug_bias_.size()), false});
    cross1_.collect("vrp/cross1", true, out);
    self1_.collect("vrp/self1", true, out);
    cross2_.collect("vrp/cross2", true, out);
    self2_.collect("vrp/self2", true, out);
    return out;
}

}  // namespace vrpseg
