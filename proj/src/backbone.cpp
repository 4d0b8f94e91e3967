#include "vrpseg/backbone.hpp"

#include <cmath>

#include "vrpseg/rng.hpp"

namespace vrpseg {

namespace {

// conv2x2, stride 2 (patchify), then ReLU. Input H,W even. Each output token
// covers exactly one 2x2 input block, so token centers stay aligned with the
// half-pixel convention the decoder's bilinear upsampling assumes.
FeatureMap conv_stage(const FeatureMap& in, const std::vector<double>& weight,
                      const std::vector<double>& bias, int out_ch) {
    const int oh = in.height / 2;
    const int ow = in.width / 2;
    FeatureMap out(out_ch, oh, ow);
    const std::size_t k_in = static_cast<std::size_t>(in.channels) * 4;
    for (int oc = 0; oc < out_ch; ++oc) {
        const double* w = weight.data() + static_cast<std::size_t>(oc) * k_in;
        for (int r = 0; r < oh; ++r) {
            for (int c = 0; c < ow; ++c) {
                double acc = bias[static_cast<std::size_t>(oc)];
                for (int ic = 0; ic < in.channels; ++ic) {
                    const double* wk = w + static_cast<std::size_t>(ic) * 4;
                    for (int kr = 0; kr < 2; ++kr) {
                        for (int kc = 0; kc < 2; ++kc) {
                            acc += wk[kr * 2 + kc] * in.at(ic, 2 * r + kr, 2 * c + kc);
                        }
                    }
                }
                out.at(oc, r, c) = acc > 0.0 ? acc : 0.0;
            }
        }
    }
    return out;
}

FeatureMap image_as_features(const Image& img) {
    FeatureMap f(3, img.height, img.width);
    f.data = img.data;
    return f;
}

}  // namespace

FeatureMap upsample2_nearest(const FeatureMap& f) {
    FeatureMap out(f.channels, f.height * 2, f.width * 2);
    for (int c = 0; c < f.channels; ++c)
        for (int r = 0; r < out.height; ++r)
            for (int col = 0; col < out.width; ++col)
                out.at(c, r, col) = f.at(c, r / 2, col / 2);
    return out;
}

ToyEncoder::ToyEncoder(EncoderConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.channels.size() != 4) {
        throw Error(ErrorCode::BadConfig, "encoder needs exactly 4 stage channel counts");
    }
    int in_ch = 3;
    for (std::size_t s = 0; s < cfg_.channels.size(); ++s) {
        ConvStage stage;
        stage.in_ch = in_ch;
        stage.out_ch = cfg_.channels[s];
        stage.weight.resize(static_cast<std::size_t>(stage.out_ch) * in_ch * 4);
        stage.bias.assign(static_cast<std::size_t>(stage.out_ch), 0.0);
        Rng rng(derive_seed(cfg_.weight_seed, s));
        const double sigma = std::sqrt(2.0 / (in_ch * 4));  // He init
        for (double& w : stage.weight) w = sigma * rng.gaussian();
        in_ch = stage.out_ch;
        stages_.push_back(std::move(stage));
    }
}

EncoderTaps ToyEncoder::encode(const Image& image) const {
    if (image.height % 16 != 0 || image.width % 16 != 0 || image.height == 0) {
        throw Error(ErrorCode::BadShape, "encoder input dimensions must be divisible by 16");
    }
    FeatureMap x = image_as_features(image);
    FeatureMap stage3;
    for (std::size_t s = 0; s < stages_.size(); ++s) {
        x = conv_stage(x, stages_[s].weight, stages_[s].bias, stages_[s].out_ch);
        if (s == 2) stage3 = x;
    }
    // x is now the stage-4 output (the high tap).
    EncoderTaps taps;
    taps.high = x;
    const FeatureMap up = upsample2_nearest(x);
    FeatureMap mid(stage3.channels + up.channels, stage3.height, stage3.width);
    std::copy(stage3.data.begin(), stage3.data.end(), mid.data.begin());
    std::copy(up.data.begin(), up.data.end(), mid.data.begin() + static_cast<std::ptrdiff_t>(stage3.data.size()));
    taps.mid = std::move(mid);
    return taps;
}

std::vector<NamedTensorView> ToyEncoder::parameters() {
    std::vector<NamedTensorView> out;
    for (std::size_t s = 0; s < stages_.size(); ++s) {
        ConvStage& st = stages_[s];
        out.push_back({"backbone/stage" + std::to_string(s) + "/weight",
                       {st.out_ch, st.in_ch, 2, 2}, st.weight.data(), st.weight.size(), false});
        out.push_back({"backbone/stage" + std::to_string(s) + "/bias",
                       {st.out_ch}, st.bias.data(), st.bias.size(), false});
    }
    return out;
}

std::uint64_t ToyEncoder::weights_hash() const {
    std::vector<std::uint64_t> parts;
    for (const ConvStage& st : stages_) {
        parts.push_back(fnv1a64(st.weight.data(), st.weight.size() * sizeof(double)));
        parts.push_back(fnv1a64(st.bias.data(), st.bias.size() * sizeof(double)));
    }
    return fnv1a64(parts.data(), parts.size() * sizeof(std::uint64_t));
}

int ToyEncoder::mid_channels() const { return cfg_.channels[2] + cfg_.channels[3]; }

int ToyEncoder::high_channels() const { return cfg_.channels[3]; }

}  // namespace vrpseg
