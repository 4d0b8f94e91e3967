#include "vrpseg/evaluator.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

#include "json.hpp"

namespace vrpseg {
namespace {

struct EpisodeCount {
    int class_id = 0;
    long long intersection = 0;
    long long union_ = 0;
    bool empty_failure = false;
};

/// Evaluates fn(i) for i in [0, n) across `workers` threads (i mod workers).
/// fn must be thread-safe; results land in per-index slots, so the reduction
/// is order-independent.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> threads;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (int w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
            try {
                for (std::size_t i = static_cast<std::size_t>(w); i < n;
                     i += static_cast<std::size_t>(workers)) {
                    fn(i);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

EpisodeCount count_prediction(const BinaryMask& pred, const BinaryMask& gt, int class_id) {
    if (!pred.same_shape(gt)) {
        throw Error(ErrorCode::ShapeMismatch, "prediction and gt sizes differ");
    }
    EpisodeCount c;
    c.class_id = class_id;
    for (std::size_t i = 0; i < gt.data.size(); ++i) {
        const bool p = pred.data[i] != 0;
        const bool g = gt.data[i] != 0;
        c.intersection += p && g;
        c.union_ += p || g;
    }
    return c;
}

IoUStats reduce_counts(const std::vector<EpisodeCount>& counts, const FoldSpec& spec,
                       const EpisodeSampler& sampler) {
    IoUStats stats;
    stats.class_names = spec.test_classes;
    stats.intersection.assign(stats.class_names.size(), 0);
    stats.union_.assign(stats.class_names.size(), 0);
    stats.episodes.assign(stats.class_names.size(), 0);
    const auto& ids = sampler.class_ids();
    for (const auto& c : counts) {
        const auto it = std::find(ids.begin(), ids.end(), c.class_id);
        const auto idx = static_cast<std::size_t>(it - ids.begin());
        stats.intersection[idx] += c.intersection;
        stats.union_[idx] += c.union_;
        stats.episodes[idx] += 1;
        stats.empty_threshold_failures += c.empty_failure;
        stats.n_episodes += 1;
    }
    return stats;
}

}  // namespace

double iou(const BinaryMask& pred, const BinaryMask& gt) {
    const EpisodeCount c = count_prediction(pred, gt, 0);
    if (c.union_ == 0) return 1.0;
    return static_cast<double>(c.intersection) / static_cast<double>(c.union_);
}

BinaryMask binarize(const SimilarityMap& logits) {
    BinaryMask out(logits.height, logits.width);
    for (std::size_t i = 0; i < logits.data.size(); ++i) {
        out.data[i] = logits.data[i] >= 0.0 ? 1 : 0;
    }
    return out;
}

double IoUStats::class_iou(std::size_t i) const {
    if (union_[i] == 0) return 1.0;
    return static_cast<double>(intersection[i]) / static_cast<double>(union_[i]);
}

double IoUStats::mean_iou() const {
    if (class_names.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < class_names.size(); ++i) sum += class_iou(i);
    return sum / static_cast<double>(class_names.size());
}

IoUStats run_benchmark(VrpSamModel& model, const DatasetManifest& manifest,
                       const FoldSpec& spec, AnnotationKind kind, std::size_t n_episodes,
                       std::uint64_t seed, int workers) {
    EpisodeSampler sampler(manifest, spec, Split::kTest, kind, seed);
    std::vector<EpisodeCount> counts(n_episodes);
    parallel_for(n_episodes, workers, [&](std::size_t i) {
        const Episode ep = sampler.episode(i);
        const BinaryMask pred = binarize(model.predict(ep));
        counts[i] = count_prediction(pred, ep.tgt_gt, ep.class_id);
    });
    return reduce_counts(counts, spec, sampler);
}

IoUStats run_gp_baseline(VrpSamModel& model, const DatasetManifest& manifest,
                         const FoldSpec& spec, GpKind kind, std::size_t n_episodes,
                         std::uint64_t seed, int workers) {
    EpisodeSampler sampler(manifest, spec, Split::kTest, AnnotationKind::mask, seed);
    std::vector<EpisodeCount> counts(n_episodes);
    parallel_for(n_episodes, workers, [&](std::size_t i) {
        const Episode ep = sampler.episode(i);
        try {
            const BinaryMask pred =
                binarize(model.predict_geometric(ep, kind, derive_seed(ep.seed, 1)));
            counts[i] = count_prediction(pred, ep.tgt_gt, ep.class_id);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::EmptyAfterThreshold) throw;
            counts[i] = count_prediction(BinaryMask(ep.tgt_gt.height, ep.tgt_gt.width),
                                         ep.tgt_gt, ep.class_id);
            counts[i].empty_failure = true;
        }
    });
    return reduce_counts(counts, spec, sampler);
}

IoUStats run_multi_vrp(VrpSamModel& model, const DatasetManifest& manifest,
                       const FoldSpec& spec, AnnotationKind kind, int n_vrp,
                       std::size_t n_episodes, std::uint64_t seed, int workers) {
    EpisodeSampler sampler(manifest, spec, Split::kTest, kind, seed);
    std::vector<EpisodeCount> counts(n_episodes);
    parallel_for(n_episodes, workers, [&](std::size_t i) {
        const std::vector<Episode> refs = sampler.multi_episode(i, n_vrp);
        const BinaryMask pred = binarize(model.predict_multi(refs));
        counts[i] = count_prediction(pred, refs[0].tgt_gt, refs[0].class_id);
    });
    return reduce_counts(counts, spec, sampler);
}

ReportRun report_run(const IoUStats& stats, const FoldSpec& spec, const std::string& kind,
                     std::optional<std::string> gp_variant) {
    ReportRun run;
    run.dataset = dataset_name(spec.dataset);
    run.fold = spec.fold;
    run.annotation_kind = kind;
    run.n_episodes = stats.n_episodes;
    for (std::size_t i = 0; i < stats.class_names.size(); ++i) {
        run.per_class[stats.class_names[i]] = stats.class_iou(i);
    }
    run.mean_iou = stats.mean_iou();
    run.gp_variant = std::move(gp_variant);
    return run;
}

void emit_report(const std::vector<ReportRun>& runs, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    nlohmann::json arr = nlohmann::json::array();
    for (const auto& run : runs) {
        nlohmann::json j = {{"dataset", run.dataset},
                            {"fold", run.fold},
                            {"annotation_kind", run.annotation_kind},
                            {"n_episodes", run.n_episodes},
                            {"per_class", run.per_class},
                            {"mean_iou", run.mean_iou}};
        if (run.gp_variant) j["gp_variant"] = *run.gp_variant;
        arr.push_back(std::move(j));
    }
    {
        std::ofstream out(dir / "results.json");
        out << nlohmann::json{{"runs", arr}}.dump(2) << "\n";
    }

    double mean_of_means = 0.0;
    {
        std::ofstream out(dir / "results.md");
        out << "| dataset | fold | annotation | variant | episodes | mIoU |\n";
        out << "|---|---|---|---|---|---|\n";
        char buf[32];
        for (const auto& run : runs) {
            std::snprintf(buf, sizeof(buf), "%.4f", run.mean_iou);
            out << "| " << run.dataset << " | " << run.fold << " | " << run.annotation_kind
                << " | " << (run.gp_variant ? *run.gp_variant : "vrp") << " | "
                << run.n_episodes << " | " << buf << " |\n";
            mean_of_means += run.mean_iou;
        }
        if (!runs.empty()) mean_of_means /= static_cast<double>(runs.size());
        std::snprintf(buf, sizeof(buf), "%.4f", mean_of_means);
        out << "| mean |  |  |  |  | " << buf << " |\n";
    }

    {
        const int bar_w = 48, gap = 16, left = 48, bottom = 240, top = 16;
        const int width = left + static_cast<int>(runs.size()) * (bar_w + gap) + gap;
        std::ofstream out(dir / "results.svg");
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
            << "\" height=\"280\">\n";
        out << "  <line x1=\"" << left - 8 << "\" y1=\"" << bottom << "\" x2=\"" << width - 8
            << "\" y2=\"" << bottom << "\" stroke=\"black\"/>\n";
        for (std::size_t i = 0; i < runs.size(); ++i) {
            const int h = static_cast<int>(runs[i].mean_iou * (bottom - top));
            const int x = left + static_cast<int>(i) * (bar_w + gap);
            char label[64];
            std::snprintf(label, sizeof(label), "%s/%d", runs[i].dataset.c_str(),
                          runs[i].fold);
            char value[32];
            std::snprintf(value, sizeof(value), "%.3f", runs[i].mean_iou);
            out << "  <rect x=\"" << x << "\" y=\"" << bottom - h << "\" width=\"" << bar_w
                << "\" height=\"" << h << "\" fill=\"#4878a8\"/>\n";
            out << "  <text x=\"" << x << "\" y=\"" << bottom + 16 << "\" font-size=\"10\">"
                << label << "</text>\n";
            out << "  <text x=\"" << x << "\" y=\"" << bottom - h - 4
                << "\" font-size=\"10\">" << value << "</text>\n";
        }
        out << "</svg>\n";
    }
}

}  // namespace vrpseg
