#include "vrpseg/model.hpp"

#include <bit>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <utility>

namespace vrpseg {
namespace {

static_assert(std::endian::native == std::endian::little,
              "tap cache and checkpoint formats are little-endian");

std::uint64_t image_key(const Image& image, std::uint64_t weights_hash) {
    const std::uint64_t body = fnv1a64(
        reinterpret_cast<const unsigned char*>(image.data.data()),
        image.data.size() * sizeof(double));
    const std::uint64_t header[4] = {body, static_cast<std::uint64_t>(image.height),
                                     static_cast<std::uint64_t>(image.width), weights_hash};
    return fnv1a64(reinterpret_cast<const unsigned char*>(header), sizeof(header));
}

std::filesystem::path cache_dir() {
    const char* env = std::getenv("VRPSEG_CACHE");
    return env && *env ? std::filesystem::path(env) : std::filesystem::path();
}

constexpr std::uint32_t kTapMagic = 0x50415456;  // "VTAP"

bool read_cached_taps(const std::filesystem::path& file, EncoderTaps* out) {
    std::ifstream in(file, std::ios::binary);
    if (!in) return false;
    std::uint32_t magic = 0, version = 0;
    std::int32_t dims[6] = {};
    in.read(reinterpret_cast<char*>(&magic), sizeof(magic));
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    if (!in || magic != kTapMagic || version != 1) return false;
    for (int d : dims) {
        if (d <= 0 || d > 1 << 20) return false;
    }
    EncoderTaps taps;
    taps.mid = FeatureMap(dims[0], dims[1], dims[2]);
    taps.high = FeatureMap(dims[3], dims[4], dims[5]);
    in.read(reinterpret_cast<char*>(taps.mid.data.data()),
            static_cast<std::streamsize>(taps.mid.data.size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(taps.high.data.data()),
            static_cast<std::streamsize>(taps.high.data.size() * sizeof(double)));
    if (!in) return false;
    in.peek();
    if (!in.eof()) return false;
    *out = std::move(taps);
    return true;
}

void write_cached_taps(const std::filesystem::path& file, const EncoderTaps& taps) {
    std::error_code ec;
    std::filesystem::create_directories(file.parent_path(), ec);
    const auto tmp = file.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) return;
        const std::uint32_t version = 1;
        const std::int32_t dims[6] = {taps.mid.channels,  taps.mid.height,  taps.mid.width,
                                      taps.high.channels, taps.high.height, taps.high.width};
        out.write(reinterpret_cast<const char*>(&kTapMagic), sizeof(kTapMagic));
        out.write(reinterpret_cast<const char*>(&version), sizeof(version));
        out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
        out.write(reinterpret_cast<const char*>(taps.mid.data.data()),
                  static_cast<std::streamsize>(taps.mid.data.size() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(taps.high.data.data()),
                  static_cast<std::streamsize>(taps.high.data.size() * sizeof(double)));
        if (!out) return;
    }
    std::filesystem::rename(tmp, file, ec);
    if (ec) std::remove(tmp.c_str());
}

std::string key_file_name(std::uint64_t key) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "taps_%016llx.bin",
                  static_cast<unsigned long long>(key));
    return buf;
}

}  // namespace

VrpSamModel::VrpSamModel(ModelConfig cfg)
    : cfg_(cfg),
      encoder_(cfg.encoder),
      vrp_(cfg.vrp, encoder_.mid_channels()),
      decoder_(cfg.decoder, encoder_.mid_channels()) {
    if (cfg_.vrp.dim != cfg_.decoder.dim) {
        throw Error(ErrorCode::BadConfig,
                    "vrp dim " + std::to_string(cfg_.vrp.dim) + " != decoder dim " +
                        std::to_string(cfg_.decoder.dim));
    }
}

EncoderTaps VrpSamModel::taps(const Image& image) const {
    const std::uint64_t key = image_key(image, encoder_.weights_hash());
    {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        const auto it = tap_cache_.find(key);
        if (it != tap_cache_.end()) return it->second;
    }
    const auto dir = cache_dir();
    EncoderTaps taps;
    bool from_disk = false;
    if (!dir.empty()) {
        from_disk = read_cached_taps(dir / key_file_name(key), &taps);
    }
    if (!from_disk) {
        taps = encoder_.encode(image);
        if (!dir.empty()) write_cached_taps(dir / key_file_name(key), taps);
    }
    std::lock_guard<std::mutex> lock(cache_mutex_);
    return tap_cache_.emplace(key, std::move(taps)).first->second;
}

VrpSamModel::EpisodeGraph VrpSamModel::build_episode_graph(Tape& t, const Episode& ep,
                                                           LossMode mode) const {
    const EncoderTaps ref = taps(ep.ref_image);
    const EncoderTaps tgt = taps(ep.tgt_image);
    EpisodeGraph g;
    g.prompts = vrp_.build_prompts(t, ref, tgt, ep.annotation, &g.binds);
    g.logits = decoder_.build_decode(t, tgt, g.prompts);
    g.loss = attach_loss(t, g.logits, ep.tgt_gt, mode);
    return g;
}

SimilarityMap VrpSamModel::predict(const Episode& ep) const {
    const EncoderTaps ref = taps(ep.ref_image);
    const EncoderTaps tgt = taps(ep.tgt_image);
    const PromptEmbedding prompts = vrp_.generate_prompts(ref, tgt, ep.annotation);
    return decoder_.decode(tgt, prompts);
}

SimilarityMap VrpSamModel::predict_multi(const std::vector<Episode>& refs) const {
    if (refs.empty()) {
        throw Error(ErrorCode::BadConfig, "predict_multi needs at least one reference");
    }
    for (const auto& ep : refs) {
        if (ep.class_id != refs[0].class_id) {
            throw Error(ErrorCode::ClassMismatch,
                        "reference classes differ: " + std::to_string(refs[0].class_id) +
                            " vs " + std::to_string(ep.class_id));
        }
    }
    const EncoderTaps tgt = taps(refs[0].tgt_image);
    PromptEmbedding all;
    all.dim = cfg_.vrp.dim;
    all.n = cfg_.vrp.n_queries * static_cast<int>(refs.size());
    all.data = Mat(all.n, all.dim);
    int row = 0;
    for (const auto& ep : refs) {
        const EncoderTaps ref = taps(ep.ref_image);
        const PromptEmbedding one = vrp_.generate_prompts(ref, tgt, ep.annotation);
        all.data.middleRows(row, one.n) = one.data;
        row += one.n;
    }
    return decoder_.decode(tgt, all);
}

SimilarityMap VrpSamModel::predict_geometric(const Episode& ep, GpKind kind,
                                             std::uint64_t seed) const {
    const EncoderTaps ref = taps(ep.ref_image);
    const EncoderTaps tgt = taps(ep.tgt_image);
    const BinaryMask ann_high = resize_mask_nonempty(ep.annotation.raster, ref.high.height,
                                                     ref.high.width);
    const SimilarityMap pm = pseudo_mask(ref.high, tgt.high, ann_high);
    const SimilarityMap pm_img =
        resize_similarity(pm, ep.tgt_image.height, ep.tgt_image.width);
    const GeometricPrompt gp = gp_prompts_from_pseudo_mask(pm_img, kind, seed);
    const PromptEmbedding prompts =
        decoder_.embed_geometric(gp, ep.tgt_image.height, ep.tgt_image.width);
    return decoder_.decode(tgt, prompts);
}

std::vector<NamedTensorView> VrpSamModel::trainable_parameters() {
    return vrp_.trainable_parameters();
}

std::vector<NamedTensorView> VrpSamModel::all_parameters() {
    std::vector<NamedTensorView> out = encoder_.parameters();
    for (auto& v : vrp_.trainable_parameters()) out.push_back(v);
    for (auto& v : decoder_.parameters()) out.push_back(v);
    return out;
}

std::uint64_t VrpSamModel::decoder_hash() {
    std::vector<double> flat;
    for (const auto& view : decoder_.parameters()) {
        flat.insert(flat.end(), view.data, view.data + view.size);
    }
    return fnv1a64(reinterpret_cast<const unsigned char*>(flat.data()),
                   flat.size() * sizeof(double));
}

}  // namespace vrpseg
