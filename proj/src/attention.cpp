#include "vrpseg/attention.hpp"

#include <cmath>

#include "vrpseg/rng.hpp"

namespace vrpseg {

void AttentionBlockParams::init(int dim, std::uint64_t seed) {
    Rng rng(seed);
    const double sigma = 1.0 / std::sqrt(static_cast<double>(dim));
    auto proj = [&] {
        Mat m(dim, dim);
        for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = sigma * rng.gaussian();
        return m;
    };
    wq = proj();
    wk = proj();
    wv = proj();
    wo = proj();
    ln_gain = Mat::Ones(1, dim);
    ln_bias = Mat::Zero(1, dim);
}

void AttentionBlockParams::collect(const std::string& prefix, bool decay_projections,
                                   std::vector<NamedTensorView>& out) {
    auto view = [&](const char* name, Mat& m, bool decay) {
        out.push_back({prefix + "/" + name,
                       {static_cast<int>(m.rows()), static_cast<int>(m.cols())},
                       m.data(), static_cast<std::size_t>(m.size()), decay});
    };
    view("wq", wq, decay_projections);
    view("wk", wk, decay_projections);
    view("wv", wv, decay_projections);
    view("wo", wo, decay_projections);
    view("ln_gain", ln_gain, false);
    view("ln_bias", ln_bias, false);
}

AttentionBlockIds attention_leaves(Tape& t, const AttentionBlockParams& p, int heads,
                                   bool trainable) {
    if (p.wq.cols() % heads != 0) {
        throw Error(ErrorCode::BadConfig, "attention dim must be divisible by head count");
    }
    AttentionBlockIds ids;
    ids.wq = t.leaf(p.wq, trainable);
    ids.wk = t.leaf(p.wk, trainable);
    ids.wv = t.leaf(p.wv, trainable);
    ids.wo = t.leaf(p.wo, trainable);
    ids.ln_gain = t.leaf(p.ln_gain, trainable);
    ids.ln_bias = t.leaf(p.ln_bias, trainable);
    ids.heads = heads;
    return ids;
}

Tape::Id attention_block(Tape& t, const AttentionBlockIds& ids, Tape::Id q_in, Tape::Id kv_in,
                         Tape::Id key_pos, Tape::Id query_pos) {
    const int dim = static_cast<int>(t.value(ids.wq).cols());
    if (t.value(q_in).cols() != dim || t.value(kv_in).cols() != dim) {
        throw Error(ErrorCode::ShapeMismatch, "attention inputs must match projection dim");
    }
    const Tape::Id keys_in = key_pos >= 0 ? t.add(kv_in, key_pos) : kv_in;
    const Tape::Id queries_in = query_pos >= 0 ? t.add(q_in, query_pos) : q_in;
    const Tape::Id q = t.matmul(queries_in, ids.wq);
    const Tape::Id k = t.matmul(keys_in, ids.wk);
    const Tape::Id v = t.matmul(kv_in, ids.wv);

    const int dh = dim / ids.heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<Tape::Id> heads;
    heads.reserve(static_cast<std::size_t>(ids.heads));
    for (int h = 0; h < ids.heads; ++h) {
        const Tape::Id qh = t.slice_cols(q, h * dh, dh);
        const Tape::Id kh = t.slice_cols(k, h * dh, dh);
        const Tape::Id vh = t.slice_cols(v, h * dh, dh);
        const Tape::Id att = t.softmax_rows(t.scale(t.matmul_nt(qh, kh), scale));
        heads.push_back(t.matmul(att, vh));
    }
    const Tape::Id mixed = t.matmul(t.concat_cols(heads), ids.wo);
    return t.layer_norm_rows(t.add(q_in, mixed), ids.ln_gain, ids.ln_bias);
}

}  // namespace vrpseg
