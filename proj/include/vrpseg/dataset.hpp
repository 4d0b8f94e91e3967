#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "vrpseg/folds.hpp"
#include "vrpseg/image.hpp"
#include "vrpseg/prompt_sim.hpp"
#include "vrpseg/rng.hpp"

namespace vrpseg {

enum class RenderStyle { kTextured, kFlat };

const char* render_style_name(RenderStyle style);
RenderStyle render_style_from_name(const std::string& name);  // ConfigError

/// circle, square, triangle, cross, ring, stripe, diamond, hbar.
const std::vector<std::string>& default_shape_classes();

struct SynthConfig {
    int size = 64;
    int per_class = 8;
    RenderStyle style = RenderStyle::kTextured;
    std::vector<std::string> classes = default_shape_classes();
};

/// Analytic geometry of one rendered shape. shape_contains is the exact
/// predicate the renderer rasterizes, so it doubles as the mask oracle.
struct ShapeParams {
    std::string shape;
    double cy = 0.0;  // center in pixel-center coordinates (row + 0.5)
    double cx = 0.0;
    double a = 0.0;  // primary radius
    double b = 0.0;  // secondary extent (bar half-thickness, ring bore)
};

ShapeParams sample_shape(const std::string& shape, int height, int width, Rng& rng);
bool shape_contains(const ShapeParams& p, int r, int c);

struct ManifestItem {
    std::string image_file;
    std::string mask_file;
    std::vector<int> class_ids;
    std::uint64_t seed = 0;

    bool operator==(const ManifestItem&) const = default;
};

/// Class id = vocabulary index + 1; 0 is background.
struct DatasetManifest {
    std::filesystem::path root;
    std::vector<std::string> classes;
    std::vector<ManifestItem> items;
};

/// Renders per_class images per class under root (images/, masks/,
/// manifest.json). Deterministic: item i uses derive_seed(seed, i).
DatasetManifest synth_dataset(const SynthConfig& config, std::uint64_t seed,
                              const std::filesystem::path& root);

/// Reconstructs the ShapeParams item i was rendered with.
ShapeParams item_shape_params(const SynthConfig& config, std::uint64_t item_seed,
                              const std::string& shape);

DatasetManifest load_manifest(const std::filesystem::path& root);

/// Reads one item's image and class mask, checking spatial alignment.
std::pair<Image, ClassMask> load_item(const DatasetManifest& m, std::size_t index);

enum class Split { kTrain, kTest };

struct Episode {
    Image ref_image;
    BinaryMask ref_gt;
    Annotation annotation;
    Image tgt_image;
    BinaryMask tgt_gt;
    int class_id = 0;
    std::uint64_t seed = 0;
};

/// Random-access episode stream: episode(i) depends only on the constructor
/// arguments and i, never on call order.
class EpisodeSampler {
public:
    EpisodeSampler(const DatasetManifest& manifest, const FoldSpec& spec, Split split,
                   AnnotationKind kind, std::uint64_t seed);

    Episode episode(std::size_t index) const;

    /// n_refs episodes sharing one target; element 0 equals episode(index)
    /// exactly. Extra references avoid the target and repeat existing
    /// references only when the class has too few items.
    std::vector<Episode> multi_episode(std::size_t index, int n_refs) const;

    const std::vector<int>& class_ids() const { return class_ids_; }

private:
    const DatasetManifest* manifest_;
    AnnotationKind kind_;
    std::uint64_t seed_;
    std::vector<int> class_ids_;
    std::vector<std::vector<std::size_t>> items_by_class_;
};

std::vector<Episode> sample_episodes(const DatasetManifest& manifest, const FoldSpec& spec,
                                     Split split, std::size_t n, AnnotationKind kind,
                                     std::uint64_t seed);

}  // namespace vrpseg
