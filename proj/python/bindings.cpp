#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "vrpseg/cli_app.hpp"
#include "vrpseg/dataset.hpp"
#include "vrpseg/error.hpp"
#include "vrpseg/evaluator.hpp"
#include "vrpseg/folds.hpp"
#include "vrpseg/mask_ops.hpp"
#include "vrpseg/prompt_sim.hpp"
#include "vrpseg/run_config.hpp"

namespace py = pybind11;
using namespace vrpseg;

namespace {

using MaskArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using MapArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

BinaryMask mask_from_numpy(const MaskArray& a) {
    if (a.ndim() != 2) throw Error(ErrorCode::BadShape, "mask array must be 2-D");
    BinaryMask m(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
    const std::uint8_t* src = a.data();
    for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = src[i] != 0 ? 1 : 0;
    return m;
}

SimilarityMap map_from_numpy(const MapArray& a) {
    if (a.ndim() != 2) throw Error(ErrorCode::BadShape, "map array must be 2-D");
    SimilarityMap m(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
    const double* src = a.data();
    std::copy(src, src + m.data.size(), m.data.begin());
    return m;
}

FeatureMap features_from_numpy(const MapArray& a) {
    if (a.ndim() != 3) throw Error(ErrorCode::BadShape, "feature array must be 3-D (C, H, W)");
    FeatureMap f(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
                 static_cast<int>(a.shape(2)));
    const double* src = a.data();
    std::copy(src, src + f.data.size(), f.data.begin());
    return f;
}

py::array mask_to_numpy(const BinaryMask& m) {
    py::array_t<std::uint8_t> out({m.height, m.width});
    std::copy(m.data.begin(), m.data.end(), out.mutable_data());
    return out;
}

py::array map_to_numpy(const SimilarityMap& m) {
    py::array_t<double> out({m.height, m.width});
    std::copy(m.data.begin(), m.data.end(), out.mutable_data());
    return out;
}

py::dict report_to_dict(const ReportRun& run) {
    py::dict per_class;
    for (const auto& [name, value] : run.per_class) per_class[py::str(name)] = value;
    py::dict d;
    d["dataset"] = run.dataset;
    d["fold"] = run.fold;
    d["annotation_kind"] = run.annotation_kind;
    d["n_episodes"] = run.n_episodes;
    d["per_class"] = per_class;
    d["mean_iou"] = run.mean_iou;
    if (run.gp_variant) d["gp_variant"] = *run.gp_variant;
    return d;
}

}  // namespace

PYBIND11_MODULE(_vrpseg, m) {
    m.doc() = "Visual-reference prompt segmentation toolkit (C++ core bindings)";

    py::register_exception<Error>(m, "VrpsegError");

    m.def("version", [] { return std::string(kCliVersion); });

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int rc = 0;
            {
                py::gil_scoped_release release;
                rc = run_cli(args, out, err);
            }
            return std::make_tuple(rc, out.str(), err.str());
        },
        py::arg("args"),
        "Run a CLI invocation in-process; returns (exit_code, stdout, stderr).");

    m.def(
        "iou",
        [](const MaskArray& pred, const MaskArray& gt) {
            return iou(mask_from_numpy(pred), mask_from_numpy(gt));
        },
        py::arg("pred"), py::arg("gt"),
        "Intersection over union of two binary masks; 1.0 when both are empty.");

    m.def(
        "binarize",
        [](const MapArray& logits) { return mask_to_numpy(binarize(map_from_numpy(logits))); },
        py::arg("logits"), "Threshold a logit map at 0 (ties go to foreground).");

    m.def(
        "mask_avg_pool",
        [](const MapArray& features, const MaskArray& mask) {
            const Prototype p = mask_avg_pool(features_from_numpy(features), mask_from_numpy(mask));
            py::array_t<double> out(p.channels());
            std::copy(p.data.begin(), p.data.end(), out.mutable_data());
            return out;
        },
        py::arg("features"), py::arg("mask"),
        "Per-channel mean of (C, H, W) features over the mask foreground.");

    m.def(
        "pseudo_mask",
        [](const MapArray& ref_features, const MapArray& tgt_features, const MaskArray& ref_mask) {
            return map_to_numpy(pseudo_mask(features_from_numpy(ref_features),
                                            features_from_numpy(tgt_features),
                                            mask_from_numpy(ref_mask)));
        },
        py::arg("ref_features"), py::arg("tgt_features"), py::arg("ref_mask"),
        "Max cosine similarity of target features against reference foreground, min-max "
        "normalized.");

    m.def(
        "min_max_normalize",
        [](const MapArray& raw) { return map_to_numpy(min_max_normalize(map_from_numpy(raw))); },
        py::arg("raw"));

    m.def(
        "simulate_annotation",
        [](const MaskArray& gt, const std::string& kind, std::uint64_t seed, int class_id) {
            const Annotation ann = simulate_annotation(mask_from_numpy(gt),
                                                       annotation_kind_from_name(kind), seed,
                                                       class_id);
            py::dict d;
            d["raster"] = mask_to_numpy(ann.raster);
            d["kind"] = std::string(annotation_kind_name(ann.kind));
            d["k"] = ann.k;
            d["seed"] = ann.seed;
            return d;
        },
        py::arg("gt"), py::arg("kind"), py::arg("seed") = 0, py::arg("class_id") = 0,
        "Simulate a point/scribble/box/mask annotation from a binary ground-truth mask.");

    m.def(
        "fold_spec",
        [](const std::string& dataset, int fold) {
            const FoldSpec spec = fold_spec(dataset_from_name(dataset), fold);
            py::dict d;
            d["dataset"] = dataset_name(spec.dataset);
            d["fold"] = spec.fold;
            d["test_classes"] = spec.test_classes;
            d["train_classes"] = spec.train_classes;
            return d;
        },
        py::arg("dataset"), py::arg("fold"),
        "Golden fold table entry for pascal5i, coco20i or coco_to_pascal.");

    m.def("reference_config", [] { return run_config_text(RunConfig{}); },
          "Reference run config JSON with every default spelled out.");

    m.def(
        "evaluate",
        [](const std::string& checkpoint, std::size_t episodes, std::uint64_t seed,
           const std::string& data_root, int fold, const std::string& kind, int workers) {
            ReportRun run;
            {
                py::gil_scoped_release release;
                auto [cfg, model] = load_model_from_checkpoint(checkpoint);
                if (fold >= 0) cfg.data.fold = fold;
                if (!kind.empty()) cfg.data.annotation = annotation_kind_from_name(kind);
                if (!data_root.empty()) cfg.data.root = data_root;
                const DatasetManifest manifest = load_manifest(cfg.data.root);
                const FoldSpec spec = resolve_fold(cfg, manifest.classes);
                const IoUStats stats = run_benchmark(*model, manifest, spec, cfg.data.annotation,
                                                     episodes, seed, workers);
                run = report_run(stats, spec, annotation_kind_name(cfg.data.annotation));
            }
            return report_to_dict(run);
        },
        py::arg("checkpoint"), py::arg("episodes") = 1000, py::arg("seed") = 0,
        py::arg("data_root") = "", py::arg("fold") = -1, py::arg("kind") = "",
        py::arg("workers") = 1,
        "Benchmark a trained checkpoint; returns the report row as a dict.");
}
