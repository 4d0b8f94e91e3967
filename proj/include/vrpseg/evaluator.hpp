#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vrpseg/dataset.hpp"
#include "vrpseg/model.hpp"

namespace vrpseg {

/// |pred AND gt| / |pred OR gt|; 1 when both are empty. ShapeMismatch.
double iou(const BinaryMask& pred, const BinaryMask& gt);

/// Foreground iff logit >= 0 (sigmoid >= 0.5; ties go to foreground).
BinaryMask binarize(const SimilarityMap& logits);

/// Per-class pixel counts aggregated over episodes; IoU per class is the
/// ratio of summed intersection to summed union (dataset-level IoU).
struct IoUStats {
    std::vector<std::string> class_names;
    std::vector<long long> intersection;
    std::vector<long long> union_;
    std::vector<long> episodes;
    long n_episodes = 0;
    long empty_threshold_failures = 0;  // GP baseline only

    double class_iou(std::size_t i) const;
    double mean_iou() const;  // unweighted mean over classes
};

/// VRP inference over n deterministic episodes from the fold's test split.
IoUStats run_benchmark(VrpSamModel& model, const DatasetManifest& manifest,
                       const FoldSpec& spec, AnnotationKind kind, std::size_t n_episodes,
                       std::uint64_t seed, int workers = 1);

/// Geometric-prompt baseline over the same protocol (mask annotations drive
/// the pseudo-mask). EmptyAfterThreshold episodes score 0 and are counted.
IoUStats run_gp_baseline(VrpSamModel& model, const DatasetManifest& manifest,
                         const FoldSpec& spec, GpKind kind, std::size_t n_episodes,
                         std::uint64_t seed, int workers = 1);

/// n_vrp references per episode, prompt rows concatenated and decoded once.
IoUStats run_multi_vrp(VrpSamModel& model, const DatasetManifest& manifest,
                       const FoldSpec& spec, AnnotationKind kind, int n_vrp,
                       std::size_t n_episodes, std::uint64_t seed, int workers = 1);

struct ReportRun {
    std::string dataset;
    int fold = 0;
    std::string annotation_kind;
    long n_episodes = 0;
    std::map<std::string, double> per_class;
    double mean_iou = 0.0;
    std::optional<std::string> gp_variant;
};

ReportRun report_run(const IoUStats& stats, const FoldSpec& spec, const std::string& kind,
                     std::optional<std::string> gp_variant = std::nullopt);

/// Writes results.json ({"runs": [...]}), results.md (one row per run plus a
/// mean row) and results.svg (per-run mIoU bars) under dir.
void emit_report(const std::vector<ReportRun>& runs, const std::filesystem::path& dir);

}  // namespace vrpseg
