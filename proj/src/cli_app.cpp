#include "vrpseg/cli_app.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <utility>

#include "CLI11.hpp"
#include "json.hpp"

#include "vrpseg/checkpoint.hpp"
#include "vrpseg/dataset.hpp"
#include "vrpseg/error.hpp"
#include "vrpseg/evaluator.hpp"
#include "vrpseg/image.hpp"
#include "vrpseg/model.hpp"
#include "vrpseg/prompt_sim.hpp"
#include "vrpseg/rng.hpp"
#include "vrpseg/run_config.hpp"
#include "vrpseg/trainer.hpp"

namespace fs = std::filesystem;

namespace vrpseg {

namespace {

std::vector<std::string> split_csv(const std::string& csv) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(csv);
    while (std::getline(in, item, ',')) {
        if (!item.empty()) parts.push_back(item);
    }
    return parts;
}

struct ParamCounts {
    long long backbone = 0;
    long long vrp = 0;
    long long decoder = 0;

    long long total() const { return backbone + vrp + decoder; }
};

ParamCounts count_parameters(VrpSamModel& model) {
    ParamCounts counts;
    for (const NamedTensorView& view : model.all_parameters()) {
        const auto n = static_cast<long long>(view.size);
        if (view.name.rfind("vrp/", 0) == 0) {
            counts.vrp += n;
        } else if (view.name.rfind("decoder/", 0) == 0) {
            counts.decoder += n;
        } else {
            counts.backbone += n;
        }
    }
    return counts;
}

void print_param_counts(VrpSamModel& model, std::ostream& out) {
    const ParamCounts c = count_parameters(model);
    out << "parameters:\n";
    out << "  backbone: " << c.backbone << " (frozen)\n";
    out << "  vrp:      " << c.vrp << " (trainable)\n";
    out << "  decoder:  " << c.decoder << " (frozen)\n";
    out << "total parameters: " << c.total() << "\n";
    out << "trainable parameters: " << c.vrp << "\n";
}

void print_table(const std::vector<ReportRun>& runs, std::ostream& out) {
    out << "| dataset | fold | annotation | variant | episodes | mIoU |\n";
    out << "|---|---|---|---|---|---|\n";
    for (const ReportRun& run : runs) {
        out << "| " << run.dataset << " | " << run.fold << " | " << run.annotation_kind << " | "
            << run.gp_variant.value_or("vrp") << " | " << run.n_episodes << " | " << std::fixed
            << std::setprecision(4) << run.mean_iou << " |\n";
        out.unsetf(std::ios::fixed);
    }
}

void print_per_class(const ReportRun& run, std::ostream& out) {
    out << "per-class IoU (" << run.gp_variant.value_or("vrp") << "):\n";
    for (const auto& [name, value] : run.per_class) {
        out << "  " << name << ": " << std::fixed << std::setprecision(4) << value << "\n";
        out.unsetf(std::ios::fixed);
    }
}

/// Queries land via reinit or checkpoint tensors, so construction always
/// uses the ctor-safe random mode regardless of the configured init.
std::unique_ptr<VrpSamModel> build_model_for(const RunConfig& cfg) {
    RunConfig safe = cfg;
    safe.vrp.query_init = QueryInit::random;
    return std::make_unique<VrpSamModel>(model_config(safe));
}

/// fp/bp prototypes are pooled from the augmented reference features of the
/// first training episode, matching the query width by construction.
void apply_query_init(VrpSamModel& model, const RunConfig& cfg, const DatasetManifest& manifest,
                      const FoldSpec& spec) {
    if (cfg.vrp.query_init == QueryInit::random) return;
    EpisodeSampler sampler(manifest, spec, Split::kTrain, cfg.data.annotation, cfg.train.seed);
    const Episode ep = sampler.episode(0);
    const EncoderTaps ref = model.taps(ep.ref_image);
    const EncoderTaps tgt = model.taps(ep.tgt_image);
    const auto [ref_aug, tgt_aug] = model.vrp().augment(ref, tgt, ep.annotation);
    const BinaryMask fg_mask =
        resize_mask_nonempty(ep.annotation.raster, ref_aug.height, ref_aug.width);
    BinaryMask bg_mask(fg_mask.height, fg_mask.width);
    bool any_bg = false;
    for (std::size_t i = 0; i < fg_mask.data.size(); ++i) {
        bg_mask.data[i] = fg_mask.data[i] ? 0 : 1;
        any_bg = any_bg || bg_mask.data[i];
    }
    const Prototype fg = mask_avg_pool(ref_aug, fg_mask);
    const Prototype bg = any_bg ? mask_avg_pool(ref_aug, bg_mask) : fg;
    model.vrp().reinit_queries(cfg.vrp.query_init, derive_seed(cfg.vrp.weight_seed, 0), &fg, &bg);
}

std::unique_ptr<VrpSamModel> train_fresh(const RunConfig& cfg, const DatasetManifest& manifest,
                                         const FoldSpec& spec) {
    auto model = build_model_for(cfg);
    apply_query_init(*model, cfg, manifest, spec);
    Trainer trainer(*model, cfg.train);
    train_loop(*model, trainer, manifest, spec, Split::kTrain, cfg.data.annotation, nullptr);
    return model;
}

struct SynthArgs {
    std::string out;
    std::uint64_t seed = 0;
    std::string classes;
    int size = 64;
    int per_class = 8;
    std::string style = "textured";
    bool force = false;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
    SynthConfig cfg;
    cfg.size = a.size;
    cfg.per_class = a.per_class;
    cfg.style = render_style_from_name(a.style);
    if (!a.classes.empty()) cfg.classes = split_csv(a.classes);
    const fs::path root(a.out);
    if (fs::exists(root) && !fs::is_empty(root) && !a.force) {
        throw Error(ErrorCode::ConfigError,
                    "output directory '" + root.string() + "' is not empty; pass --force to overwrite");
    }
    const DatasetManifest manifest = synth_dataset(cfg, a.seed, root);
    out << "wrote " << manifest.items.size() << " items across " << cfg.classes.size()
        << " classes (size " << cfg.size << ", " << render_style_name(cfg.style) << ") to "
        << root.string() << "\n";
    return 0;
}

struct SimulateArgs {
    std::string mask;
    std::string kind = "point";
    std::string out;
    std::uint64_t seed = 0;
    int class_id = 0;
};

int cmd_simulate_prompts(const SimulateArgs& a, std::ostream& out) {
    const ClassMask raster = read_mask_png(a.mask);
    BinaryMask gt(raster.height, raster.width);
    for (std::size_t i = 0; i < raster.data.size(); ++i) {
        if (a.class_id > 0) {
            gt.data[i] = raster.data[i] == a.class_id ? 1 : 0;
        } else {
            gt.data[i] = raster.data[i] != 0 ? 1 : 0;
        }
    }
    const AnnotationKind kind = annotation_kind_from_name(a.kind);
    const Annotation ann = simulate_annotation(gt, kind, a.seed, a.class_id);

    ClassMask png(gt.height, gt.width);
    for (std::size_t i = 0; i < png.data.size(); ++i) png.data[i] = ann.raster.data[i] ? 255 : 0;
    write_mask_png(a.out, png);

    nlohmann::json sidecar{{"kind", annotation_kind_name(kind)},
                           {"k", ann.k},
                           {"seed", ann.seed},
                           {"box", nullptr}};
    if (kind == AnnotationKind::box) {
        const BoxSpec box = extract_box(gt).first;
        sidecar["box"] = {{"row_min", box.row_min},
                          {"col_min", box.col_min},
                          {"row_max", box.row_max},
                          {"col_max", box.col_max}};
    }
    fs::path sidecar_path(a.out);
    sidecar_path.replace_extension(".json");
    std::ofstream side(sidecar_path, std::ios::binary);
    if (!side) {
        throw Error(ErrorCode::MissingFile, "cannot write sidecar: " + sidecar_path.string());
    }
    side << sidecar.dump(2) << "\n";
    out << "wrote " << a.out << " and " << sidecar_path.string() << "\n";
    return 0;
}

struct TrainArgs {
    std::string config;
    std::string out;
    bool dry_run = false;
    bool resume = false;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
    RunConfig cfg = load_run_config(a.config);
    if (a.seed_set) cfg.train.seed = a.seed;
    auto model = build_model_for(cfg);
    if (a.dry_run) {
        print_param_counts(*model, out);
        return 0;
    }

    const DatasetManifest manifest = load_manifest(cfg.data.root);
    const FoldSpec spec = resolve_fold(cfg, manifest.classes);
    apply_query_init(*model, cfg, manifest, spec);
    Trainer trainer(*model, cfg.train);

    const fs::path outdir(a.out);
    fs::create_directories(outdir);
    const fs::path ckpt_dir = outdir / "checkpoint";
    bool resumed = false;
    if (a.resume && fs::exists(ckpt_dir / "manifest.json")) {
        load_training_checkpoint(ckpt_dir, *model, trainer);
        resumed = true;
        out << "resumed at step " << trainer.current_step() << "\n";
    }
    save_run_config(cfg, outdir / "config.json");

    std::ofstream log(outdir / "train_log.jsonl",
                      resumed ? std::ios::app : std::ios::trunc);
    const TrainResult result =
        train_loop(*model, trainer, manifest, spec, Split::kTrain, cfg.data.annotation, &log);
    log.close();
    save_training_checkpoint(ckpt_dir, *model, trainer, run_config_to_json(cfg));

    out << "trained to step " << trainer.current_step() << " (loss " << std::fixed
        << std::setprecision(6) << result.last.loss_total << ")\n";
    out.unsetf(std::ios::fixed);
    out << "checkpoint: " << ckpt_dir.string() << "\n";
    return 0;
}

struct EvalArgs {
    std::string checkpoint;
    std::string data;
    std::string out;
    int fold = 0;
    bool fold_set = false;
    std::string kind;
    std::size_t episodes = 1000;
    std::uint64_t seed = 0;
    int workers = 1;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    auto [cfg, model] = load_model_from_checkpoint(a.checkpoint);
    if (a.fold_set) cfg.data.fold = a.fold;
    if (!a.kind.empty()) cfg.data.annotation = annotation_kind_from_name(a.kind);
    if (!a.data.empty()) cfg.data.root = a.data;

    const DatasetManifest manifest = load_manifest(cfg.data.root);
    const FoldSpec spec = resolve_fold(cfg, manifest.classes);
    const IoUStats stats = run_benchmark(*model, manifest, spec, cfg.data.annotation, a.episodes,
                                         a.seed, a.workers);
    const ReportRun run = report_run(stats, spec, annotation_kind_name(cfg.data.annotation));

    const fs::path outdir = a.out.empty() ? fs::path(a.checkpoint) / "eval" : fs::path(a.out);
    emit_report({run}, outdir);
    print_table({run}, out);
    print_per_class(run, out);
    out << "report: " << outdir.string() << "\n";
    return 0;
}

struct CompareArgs {
    std::string checkpoint;
    std::string data;
    std::string out;
    std::string kind = "points";
    int fold = 0;
    bool fold_set = false;
    std::size_t episodes = 1000;
    std::uint64_t seed = 0;
    int workers = 1;
};

int cmd_compare_gp(const CompareArgs& a, std::ostream& out) {
    auto [cfg, model] = load_model_from_checkpoint(a.checkpoint);
    if (a.fold_set) cfg.data.fold = a.fold;
    if (!a.data.empty()) cfg.data.root = a.data;
    const GpKind gp_kind = gp_kind_from_name(a.kind);

    const DatasetManifest manifest = load_manifest(cfg.data.root);
    const FoldSpec spec = resolve_fold(cfg, manifest.classes);

    const std::uint64_t hash_before = model->decoder_hash();
    const IoUStats vrp_stats = run_benchmark(*model, manifest, spec, cfg.data.annotation,
                                             a.episodes, a.seed, a.workers);
    const IoUStats gp_stats =
        run_gp_baseline(*model, manifest, spec, gp_kind, a.episodes, a.seed, a.workers);
    const std::uint64_t hash_after = model->decoder_hash();
    if (hash_before != hash_after) {
        throw Error(ErrorCode::BadConfig, "decoder weights changed between VRP and GP runs");
    }

    const std::vector<ReportRun> runs{
        report_run(vrp_stats, spec, annotation_kind_name(cfg.data.annotation)),
        report_run(gp_stats, spec, annotation_kind_name(AnnotationKind::mask),
                   std::string("gp_") + gp_kind_name(gp_kind))};
    const fs::path outdir =
        a.out.empty() ? fs::path(a.checkpoint) / "compare_gp" : fs::path(a.out);
    emit_report(runs, outdir);
    print_table(runs, out);
    out << "decoder hash: 0x" << std::hex << hash_before << std::dec << " (shared)\n";
    if (gp_stats.empty_threshold_failures > 0) {
        out << "gp empty-threshold episodes: " << gp_stats.empty_threshold_failures << "\n";
    }
    out << "report: " << outdir.string() << "\n";
    return 0;
}

struct AblateArgs {
    std::string config;
    std::string out;
    std::string which;
    std::size_t episodes = 1000;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::uint64_t eval_seed = 0;
    int workers = 1;
};

int cmd_ablate(const AblateArgs& a, std::ostream& out) {
    RunConfig base = load_run_config(a.config);
    if (a.seed_set) base.train.seed = a.seed;
    const DatasetManifest manifest = load_manifest(base.data.root);
    const FoldSpec spec = resolve_fold(base, manifest.classes);
    const char* kind_name = annotation_kind_name(base.data.annotation);

    std::vector<ReportRun> runs;
    auto eval_into = [&](VrpSamModel& model, const std::string& label) {
        const IoUStats stats = run_benchmark(model, manifest, spec, base.data.annotation,
                                             a.episodes, a.eval_seed, a.workers);
        runs.push_back(report_run(stats, spec, kind_name, label));
        out << label << ": mIoU " << std::fixed << std::setprecision(4) << stats.mean_iou()
            << "\n";
        out.unsetf(std::ios::fixed);
    };

    if (a.which == "loss") {
        for (const LossMode mode : {LossMode::bce, LossMode::dice, LossMode::bce_plus_dice}) {
            RunConfig cfg = base;
            cfg.train.loss = mode;
            auto model = train_fresh(cfg, manifest, spec);
            eval_into(*model, std::string("loss=") + loss_mode_name(mode));
        }
    } else if (a.which == "queries") {
        for (const int n : {10, 25, 50, 75, 100}) {
            RunConfig cfg = base;
            cfg.vrp.n_queries = n;
            auto model = train_fresh(cfg, manifest, spec);
            eval_into(*model, "queries=" + std::to_string(n));
        }
    } else if (a.which == "init") {
        for (const QueryInit mode :
             {QueryInit::random, QueryInit::fp, QueryInit::bp, QueryInit::half_fp_half_bp}) {
            RunConfig cfg = base;
            cfg.vrp.query_init = mode;
            auto model = train_fresh(cfg, manifest, spec);
            eval_into(*model, std::string("init=") + query_init_name(mode));
        }
    } else if (a.which == "nvrp") {
        auto model = train_fresh(base, manifest, spec);
        for (const int n : {1, 5}) {
            const IoUStats stats = run_multi_vrp(*model, manifest, spec, base.data.annotation, n,
                                                 a.episodes, a.eval_seed, a.workers);
            const std::string label = "nvrp=" + std::to_string(n);
            runs.push_back(report_run(stats, spec, kind_name, label));
            out << label << ": mIoU " << std::fixed << std::setprecision(4) << stats.mean_iou()
                << "\n";
            out.unsetf(std::ios::fixed);
        }
    } else {
        throw Error(ErrorCode::ConfigError, "unknown ablation sweep '" + a.which + "'");
    }

    emit_report(runs, fs::path(a.out));
    print_table(runs, out);
    out << "report: " << a.out << "\n";
    return 0;
}

struct InfoArgs {
    std::string config;
    std::string checkpoint;
};

int cmd_info(const InfoArgs& a, std::ostream& out) {
    RunConfig cfg;
    if (!a.checkpoint.empty()) {
        cfg = run_config_from_json(load_checkpoint(a.checkpoint).config);
    } else if (!a.config.empty()) {
        cfg = load_run_config(a.config);
    }
    out << "vrpseg " << kCliVersion << "\n";
    out << "dataset: " << dataset_name(cfg.data.dataset) << " fold " << cfg.data.fold
        << ", annotation " << annotation_kind_name(cfg.data.annotation) << "\n";
    out << "model: dim " << cfg.vrp.dim << ", " << cfg.vrp.n_queries << " queries, "
        << cfg.vrp.heads << " heads\n";
    auto model = build_model_for(cfg);
    print_param_counts(*model, out);
    return 0;
}

struct ConfigArgs {
    std::string out_file;
};

int cmd_config(const ConfigArgs& a, std::ostream& out) {
    const std::string text = run_config_text(RunConfig{});
    if (a.out_file.empty()) {
        out << text;
    } else {
        std::ofstream file(a.out_file, std::ios::binary);
        if (!file) {
            throw Error(ErrorCode::MissingFile, "cannot write config file: " + a.out_file);
        }
        file << text;
        out << "wrote " << a.out_file << "\n";
    }
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Visual-reference prompt segmentation pipeline"};
    app.name("vrpseg");
    app.require_subcommand(1);
    int rc = 0;

    SynthArgs synth;
    CLI::App* s = app.add_subcommand("synth", "Generate a synthetic shape dataset");
    s->add_option("--out", synth.out, "Output dataset directory")->required();
    s->add_option("--seed", synth.seed, "Generation seed")->capture_default_str();
    s->add_option("--classes", synth.classes, "Comma-separated shape classes (default: all 8)");
    s->add_option("--size", synth.size, "Image size in pixels")->capture_default_str();
    s->add_option("--per-class", synth.per_class, "Images per class")->capture_default_str();
    s->add_option("--style", synth.style, "Render style: textured or flat")->capture_default_str();
    s->add_flag("--force", synth.force, "Overwrite a non-empty output directory");
    s->callback([&] { rc = cmd_synth(synth, out); });

    SimulateArgs sim;
    CLI::App* p = app.add_subcommand("simulate-prompts", "Simulate an annotation from a mask PNG");
    p->add_option("--mask", sim.mask, "Ground-truth mask PNG (nonzero = foreground)")->required();
    p->add_option("--kind", sim.kind, "Annotation kind: point, scribble, box or mask")->capture_default_str();
    p->add_option("--out", sim.out, "Output annotation PNG (sidecar JSON sits beside it)")
        ->required();
    p->add_option("--seed", sim.seed, "Annotation seed")->capture_default_str();
    p->add_option("--class-id", sim.class_id, "Select one class id from the mask (0 = any nonzero)")->capture_default_str();
    p->callback([&] { rc = cmd_simulate_prompts(sim, out); });

    TrainArgs train;
    CLI::App* t = app.add_subcommand("train", "Train the prompt encoder");
    t->add_option("--config", train.config, "Run config JSON")->required();
    t->add_option("--out", train.out, "Output directory (checkpoint, log, config copy)")
        ->required();
    t->add_flag("--dry-run", train.dry_run, "Print parameter counts and exit");
    t->add_flag("--resume", train.resume, "Continue from an existing checkpoint in --out");
    CLI::Option* train_seed = t->add_option("--seed", train.seed, "Override train.seed");
    t->callback([&] {
        train.seed_set = train_seed->count() > 0;
        rc = cmd_train(train, out);
    });

    EvalArgs eval;
    CLI::App* e = app.add_subcommand("eval", "Evaluate a checkpoint on a fold");
    e->add_option("--checkpoint", eval.checkpoint, "Checkpoint directory")->required();
    CLI::Option* eval_fold = e->add_option("--fold", eval.fold, "Fold override");
    e->add_option("--kind", eval.kind, "Annotation kind override");
    e->add_option("--episodes", eval.episodes, "Episode count")->capture_default_str();
    e->add_option("--seed", eval.seed, "Evaluation seed")->capture_default_str();
    e->add_option("--data", eval.data, "Dataset root override");
    e->add_option("--out", eval.out, "Report directory (default: <checkpoint>/eval)");
    e->add_option("--workers", eval.workers, "Parallel evaluation workers")->capture_default_str();
    e->callback([&] {
        eval.fold_set = eval_fold->count() > 0;
        rc = cmd_eval(eval, out);
    });

    CompareArgs cmp;
    CLI::App* c = app.add_subcommand("compare-gp", "Compare VRP against the geometric-prompt baseline");
    c->add_option("--checkpoint", cmp.checkpoint, "Checkpoint directory")->required();
    c->add_option("--kind", cmp.kind, "GP variant: points, box or points_and_box")->capture_default_str();
    CLI::Option* cmp_fold = c->add_option("--fold", cmp.fold, "Fold override");
    c->add_option("--episodes", cmp.episodes, "Episode count")->capture_default_str();
    c->add_option("--seed", cmp.seed, "Evaluation seed")->capture_default_str();
    c->add_option("--data", cmp.data, "Dataset root override");
    c->add_option("--out", cmp.out, "Report directory (default: <checkpoint>/compare_gp)");
    c->add_option("--workers", cmp.workers, "Parallel evaluation workers")->capture_default_str();
    c->callback([&] {
        cmp.fold_set = cmp_fold->count() > 0;
        rc = cmd_compare_gp(cmp, out);
    });

    AblateArgs abl;
    CLI::App* b = app.add_subcommand("ablate", "Run an ablation sweep");
    b->add_option("--config", abl.config, "Run config JSON")->required();
    b->add_option("--which", abl.which, "Sweep: loss, queries, init or nvrp")
        ->required()
        ->check(CLI::IsMember({"loss", "queries", "init", "nvrp"}));
    b->add_option("--out", abl.out, "Report directory")->required();
    b->add_option("--episodes", abl.episodes, "Evaluation episodes per variant")->capture_default_str();
    CLI::Option* abl_seed = b->add_option("--seed", abl.seed, "Override train.seed");
    b->add_option("--eval-seed", abl.eval_seed, "Evaluation seed")->capture_default_str();
    b->add_option("--workers", abl.workers, "Parallel evaluation workers")->capture_default_str();
    b->callback([&] {
        abl.seed_set = abl_seed->count() > 0;
        rc = cmd_ablate(abl, out);
    });

    InfoArgs info;
    CLI::App* i = app.add_subcommand("info", "Show version and parameter counts");
    i->add_option("--config", info.config, "Run config JSON (default: reference config)");
    i->add_option("--checkpoint", info.checkpoint, "Read the config snapshot from a checkpoint");
    i->callback([&] { rc = cmd_info(info, out); });

    ConfigArgs conf;
    CLI::App* g = app.add_subcommand("config", "Emit the reference config with all defaults");
    g->add_option("--out", conf.out_file, "Write to a file instead of stdout");
    g->callback([&] { rc = cmd_config(conf, out); });

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("vrpseg");
    for (const std::string& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& ex) {
        return app.exit(ex, out, err);
    } catch (const CLI::CallForAllHelp& ex) {
        return app.exit(ex, out, err);
    } catch (const CLI::ParseError& ex) {
        app.exit(ex, out, err);
        return 2;
    } catch (const Error& ex) {
        err << "error: " << ex.what() << "\n";
        return error_exit_code(ex.code());
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << "\n";
        return 2;
    }
    return rc;
}

}  // namespace vrpseg
