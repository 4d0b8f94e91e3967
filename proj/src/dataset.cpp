#include "vrpseg/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "json.hpp"
#include "vrpseg/error.hpp"

namespace vrpseg {
namespace {

using nlohmann::json;

constexpr double kMinRadiusFrac = 0.15;
constexpr double kMaxRadiusFrac = 0.30;
constexpr double kMinColorDist = 0.35;
constexpr double kTextureNoise = 0.15;

double thickness_ratio(const std::string& shape) {
    if (shape == "cross") return 0.30;
    if (shape == "ring") return 0.55;
    if (shape == "stripe") return 0.35;
    if (shape == "hbar") return 0.40;
    return 0.0;
}

bool known_shape(const std::string& shape) {
    const auto& all = default_shape_classes();
    return std::find(all.begin(), all.end(), shape) != all.end();
}

void validate_config(const SynthConfig& config) {
    if (config.classes.size() < 6) {
        throw Error(ErrorCode::BadConfig, "need at least 6 shape classes, got " +
                                              std::to_string(config.classes.size()));
    }
    std::set<std::string> seen;
    for (const auto& cls : config.classes) {
        if (!known_shape(cls)) {
            throw Error(ErrorCode::BadConfig, "unknown shape class '" + cls + "'");
        }
        if (!seen.insert(cls).second) {
            throw Error(ErrorCode::BadConfig, "duplicate shape class '" + cls + "'");
        }
    }
    if (config.size < 32 || config.size % 16 != 0) {
        throw Error(ErrorCode::BadConfig,
                    "size must be >= 32 and divisible by 16, got " + std::to_string(config.size));
    }
    if (config.per_class < 2) {
        throw Error(ErrorCode::BadConfig,
                    "per_class must be >= 2, got " + std::to_string(config.per_class));
    }
}

std::array<double, 3> draw_color(Rng& rng) {
    return {rng.uniform_real(), rng.uniform_real(), rng.uniform_real()};
}

double color_dist(const std::array<double, 3>& u, const std::array<double, 3>& v) {
    double s = 0.0;
    for (int c = 0; c < 3; ++c) s += (u[c] - v[c]) * (u[c] - v[c]);
    return std::sqrt(s);
}

/// Draw order is part of the format: shape params, background color,
/// foreground color (redrawn until separated), then per-pixel noise.
std::pair<Image, ClassMask> render_item(const SynthConfig& config, const std::string& shape,
                                        int class_id, std::uint64_t item_seed) {
    Rng rng(item_seed);
    const ShapeParams params = sample_shape(shape, config.size, config.size, rng);
    const auto bg = draw_color(rng);
    auto fg = draw_color(rng);
    while (color_dist(fg, bg) < kMinColorDist) fg = draw_color(rng);

    Image img(config.size, config.size);
    ClassMask mask(config.size, config.size);
    for (int r = 0; r < config.size; ++r) {
        for (int c = 0; c < config.size; ++c) {
            const bool inside = shape_contains(params, r, c);
            if (inside) mask.at(r, c) = static_cast<std::uint8_t>(class_id);
            const auto& base = inside ? fg : bg;
            for (int ch = 0; ch < 3; ++ch) {
                double v = base[static_cast<std::size_t>(ch)];
                if (config.style == RenderStyle::kTextured) {
                    v += rng.uniform_real(-kTextureNoise, kTextureNoise);
                }
                img.at(ch, r, c) = std::clamp(v, 0.0, 1.0);
            }
        }
    }
    return {std::move(img), std::move(mask)};
}

std::string item_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "item_%05zu.png", index);
    return buf;
}

json manifest_to_json(const DatasetManifest& m) {
    json items = json::array();
    for (const auto& it : m.items) {
        items.push_back({{"image", it.image_file},
                         {"mask", it.mask_file},
                         {"class_ids", it.class_ids},
                         {"seed", it.seed}});
    }
    return json{{"classes", m.classes}, {"items", items}};
}

}  // namespace

const char* render_style_name(RenderStyle style) {
    return style == RenderStyle::kTextured ? "textured" : "flat";
}

RenderStyle render_style_from_name(const std::string& name) {
    if (name == "textured") return RenderStyle::kTextured;
    if (name == "flat") return RenderStyle::kFlat;
    throw Error(ErrorCode::ConfigError, "unknown render style '" + name + "'");
}

const std::vector<std::string>& default_shape_classes() {
    static const std::vector<std::string> classes = {
        "circle", "square", "triangle", "cross", "ring", "stripe", "diamond", "hbar"};
    return classes;
}

ShapeParams sample_shape(const std::string& shape, int height, int width, Rng& rng) {
    if (!known_shape(shape)) {
        throw Error(ErrorCode::BadConfig, "unknown shape class '" + shape + "'");
    }
    ShapeParams p;
    p.shape = shape;
    const double lim = std::min(height, width);
    p.a = rng.uniform_real(kMinRadiusFrac * lim, kMaxRadiusFrac * lim);
    const double margin = p.a + 1.0;
    p.cy = rng.uniform_real(margin, height - margin);
    p.cx = rng.uniform_real(margin, width - margin);
    p.b = thickness_ratio(shape) * p.a;
    return p;
}

bool shape_contains(const ShapeParams& p, int r, int c) {
    const double dy = (r + 0.5) - p.cy;
    const double dx = (c + 0.5) - p.cx;
    const double ay = std::abs(dy);
    const double ax = std::abs(dx);
    if (p.shape == "circle") return dy * dy + dx * dx <= p.a * p.a;
    if (p.shape == "square") return std::max(ay, ax) <= p.a;
    if (p.shape == "triangle") {
        if (ay > p.a) return false;
        const double t = (dy + p.a) / (2.0 * p.a);
        return ax <= t * p.a;
    }
    if (p.shape == "cross") return (ay <= p.b && ax <= p.a) || (ax <= p.b && ay <= p.a);
    if (p.shape == "ring") {
        const double d2 = dy * dy + dx * dx;
        return p.b * p.b <= d2 && d2 <= p.a * p.a;
    }
    if (p.shape == "stripe") {
        return std::abs(dy - dx) / std::sqrt(2.0) <= p.b && std::max(ay, ax) <= p.a;
    }
    if (p.shape == "diamond") return ay + ax <= p.a;
    if (p.shape == "hbar") return ay <= p.b && ax <= p.a;
    throw Error(ErrorCode::BadConfig, "unknown shape class '" + p.shape + "'");
}

DatasetManifest synth_dataset(const SynthConfig& config, std::uint64_t seed,
                              const std::filesystem::path& root) {
    validate_config(config);
    std::filesystem::create_directories(root / "images");
    std::filesystem::create_directories(root / "masks");

    DatasetManifest m;
    m.root = root;
    m.classes = config.classes;
    std::size_t index = 0;
    for (std::size_t cls = 0; cls < config.classes.size(); ++cls) {
        const int class_id = static_cast<int>(cls) + 1;
        for (int inst = 0; inst < config.per_class; ++inst, ++index) {
            const std::uint64_t item_seed = derive_seed(seed, index);
            auto [img, mask] =
                render_item(config, config.classes[cls], class_id, item_seed);
            ManifestItem item;
            item.image_file = "images/" + item_name(index);
            item.mask_file = "masks/" + item_name(index);
            item.class_ids = {class_id};
            item.seed = item_seed;
            write_image_png((root / item.image_file).string(), img);
            write_mask_png((root / item.mask_file).string(), mask);
            m.items.push_back(std::move(item));
        }
    }
    std::ofstream out(root / "manifest.json");
    out << manifest_to_json(m).dump(2) << "\n";
    if (!out) {
        throw Error(ErrorCode::MissingFile,
                    "cannot write " + (root / "manifest.json").string());
    }
    return m;
}

ShapeParams item_shape_params(const SynthConfig& config, std::uint64_t item_seed,
                              const std::string& shape) {
    Rng rng(item_seed);
    return sample_shape(shape, config.size, config.size, rng);
}

DatasetManifest load_manifest(const std::filesystem::path& root) {
    const auto path = root / "manifest.json";
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::MissingFile, path.string());
    }
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::CorruptManifest, path.string() + ": " + e.what());
    }

    DatasetManifest m;
    m.root = root;
    try {
        m.classes = doc.at("classes").get<std::vector<std::string>>();
        for (const auto& entry : doc.at("items")) {
            ManifestItem item;
            item.image_file = entry.at("image").get<std::string>();
            item.mask_file = entry.at("mask").get<std::string>();
            item.class_ids = entry.at("class_ids").get<std::vector<int>>();
            item.seed = entry.at("seed").get<std::uint64_t>();
            m.items.push_back(std::move(item));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::CorruptManifest, path.string() + ": " + e.what());
    }
    if (m.classes.empty()) {
        throw Error(ErrorCode::CorruptManifest, path.string() + ": empty class vocabulary");
    }

    for (std::size_t i = 0; i < m.items.size(); ++i) {
        const auto& item = m.items[i];
        for (const auto& file : {item.image_file, item.mask_file}) {
            if (!std::filesystem::exists(m.root / file)) {
                throw Error(ErrorCode::MissingFile, (m.root / file).string());
            }
        }
        for (int id : item.class_ids) {
            if (id < 1 || id > static_cast<int>(m.classes.size())) {
                throw Error(ErrorCode::CorruptManifest,
                            path.string() + ": item " + std::to_string(i) +
                                " lists class id " + std::to_string(id) +
                                " outside the vocabulary");
            }
        }
        auto [img, mask] = load_item(m, i);
        for (int id : item.class_ids) {
            const auto target = static_cast<std::uint8_t>(id);
            if (std::find(mask.data.begin(), mask.data.end(), target) == mask.data.end()) {
                throw Error(ErrorCode::CorruptManifest,
                            path.string() + ": item " + std::to_string(i) +
                                " declares class id " + std::to_string(id) +
                                " absent from its mask");
            }
        }
    }
    return m;
}

std::pair<Image, ClassMask> load_item(const DatasetManifest& m, std::size_t index) {
    const auto& item = m.items.at(index);
    Image img = read_image_png((m.root / item.image_file).string());
    ClassMask mask = read_mask_png((m.root / item.mask_file).string());
    if (img.height != mask.height || img.width != mask.width) {
        throw Error(ErrorCode::ShapeMismatch,
                    (m.root / item.mask_file).string() + ": mask " +
                        std::to_string(mask.height) + "x" + std::to_string(mask.width) +
                        " vs image " + std::to_string(img.height) + "x" +
                        std::to_string(img.width));
    }
    return {std::move(img), std::move(mask)};
}

EpisodeSampler::EpisodeSampler(const DatasetManifest& manifest, const FoldSpec& spec,
                               Split split, AnnotationKind kind, std::uint64_t seed)
    : manifest_(&manifest), kind_(kind), seed_(seed) {
    const auto& names = split == Split::kTest ? spec.test_classes : spec.train_classes;
    for (const auto& name : names) {
        const auto it = std::find(manifest.classes.begin(), manifest.classes.end(), name);
        if (it == manifest.classes.end()) {
            throw Error(ErrorCode::EmptyClass, "class '" + name + "' not in the manifest");
        }
        const int class_id = static_cast<int>(it - manifest.classes.begin()) + 1;
        std::vector<std::size_t> holders;
        for (std::size_t i = 0; i < manifest.items.size(); ++i) {
            const auto& ids = manifest.items[i].class_ids;
            if (std::find(ids.begin(), ids.end(), class_id) != ids.end()) {
                holders.push_back(i);
            }
        }
        if (holders.empty()) {
            throw Error(ErrorCode::EmptyClass, "class '" + name + "' has no items");
        }
        if (holders.size() < 2) {
            throw Error(ErrorCode::InsufficientItems,
                        "class '" + name + "' needs >= 2 items for reference-target pairs");
        }
        class_ids_.push_back(class_id);
        items_by_class_.push_back(std::move(holders));
    }
}

Episode EpisodeSampler::episode(std::size_t index) const {
    const std::uint64_t episode_seed = derive_seed(seed_, index);
    Rng rng(episode_seed);
    const int pick = rng.uniform_int(0, static_cast<int>(class_ids_.size()) - 1);
    const auto& holders = items_by_class_[static_cast<std::size_t>(pick)];
    const int n = static_cast<int>(holders.size());
    const int ref_pick = rng.uniform_int(0, n - 1);
    int tgt_pick = rng.uniform_int(0, n - 2);
    if (tgt_pick >= ref_pick) ++tgt_pick;

    Episode ep;
    ep.class_id = class_ids_[static_cast<std::size_t>(pick)];
    ep.seed = episode_seed;
    auto [ref_img, ref_mask] = load_item(*manifest_, holders[static_cast<std::size_t>(ref_pick)]);
    auto [tgt_img, tgt_mask] = load_item(*manifest_, holders[static_cast<std::size_t>(tgt_pick)]);
    ep.ref_image = std::move(ref_img);
    ep.tgt_image = std::move(tgt_img);
    ep.ref_gt = binary_from_class(ref_mask, ep.class_id);
    ep.tgt_gt = binary_from_class(tgt_mask, ep.class_id);
    ep.annotation = simulate_annotation(ep.ref_gt, kind_, rng.next_u64(), ep.class_id);
    return ep;
}

std::vector<Episode> EpisodeSampler::multi_episode(std::size_t index, int n_refs) const {
    if (n_refs < 1) {
        throw Error(ErrorCode::BadConfig, "n_refs must be >= 1");
    }
    // Draw order matches episode(): class, reference, target, then one
    // annotation seed per reference; element 0 is bit-identical to episode().
    const std::uint64_t episode_seed = derive_seed(seed_, index);
    Rng rng(episode_seed);
    const int pick = rng.uniform_int(0, static_cast<int>(class_ids_.size()) - 1);
    const auto& holders = items_by_class_[static_cast<std::size_t>(pick)];
    const int n = static_cast<int>(holders.size());
    const int ref_pick = rng.uniform_int(0, n - 1);
    int tgt_pick = rng.uniform_int(0, n - 2);
    if (tgt_pick >= ref_pick) ++tgt_pick;
    const int class_id = class_ids_[static_cast<std::size_t>(pick)];

    auto [tgt_img, tgt_mask] = load_item(*manifest_, holders[static_cast<std::size_t>(tgt_pick)]);
    const BinaryMask tgt_gt = binary_from_class(tgt_mask, class_id);

    std::vector<Episode> out;
    std::vector<int> used = {ref_pick};
    int current = ref_pick;
    for (int k = 0; k < n_refs; ++k) {
        if (k > 0) {
            std::vector<int> cand;
            for (int i = 0; i < n; ++i) {
                if (i == tgt_pick) continue;
                if (std::find(used.begin(), used.end(), i) == used.end()) cand.push_back(i);
            }
            if (cand.empty()) {
                for (int i = 0; i < n; ++i) {
                    if (i != tgt_pick) cand.push_back(i);
                }
            }
            current = cand[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<int>(cand.size()) - 1))];
            used.push_back(current);
        }
        Episode ep;
        ep.class_id = class_id;
        ep.seed = episode_seed;
        auto [ref_img, ref_mask] =
            load_item(*manifest_, holders[static_cast<std::size_t>(current)]);
        ep.ref_image = std::move(ref_img);
        ep.ref_gt = binary_from_class(ref_mask, class_id);
        ep.tgt_image = tgt_img;
        ep.tgt_gt = tgt_gt;
        ep.annotation = simulate_annotation(ep.ref_gt, kind_, rng.next_u64(), class_id);
        out.push_back(std::move(ep));
    }
    return out;
}

std::vector<Episode> sample_episodes(const DatasetManifest& manifest, const FoldSpec& spec,
                                     Split split, std::size_t n, AnnotationKind kind,
                                     std::uint64_t seed) {
    EpisodeSampler sampler(manifest, spec, split, kind, seed);
    std::vector<Episode> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sampler.episode(i));
    return out;
}

}  // namespace vrpseg
