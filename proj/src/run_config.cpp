#include "vrpseg/run_config.hpp"

#include <fstream>
#include <initializer_list>

#include "vrpseg/checkpoint.hpp"
#include "vrpseg/error.hpp"

namespace vrpseg {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

void check_keys(const json& j, const std::string& ctx, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) bad("config section '" + (ctx.empty() ? "<root>" : ctx) + "' must be a JSON object");
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* key : allowed) {
            if (item.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) bad("unknown config key '" + (ctx.empty() ? item.key() : ctx + "." + item.key()) + "'");
    }
}

template <typename T>
void take(const json& j, const std::string& ctx, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        bad("config key '" + ctx + key + "' has the wrong type");
    }
}

std::string take_name(const json& j, const std::string& ctx, const char* key, std::string current) {
    take(j, ctx, key, current);
    return current;
}

}  // namespace

json run_config_to_json(const RunConfig& cfg) {
    json j;
    j["data"] = {{"root", cfg.data.root},
                 {"dataset", dataset_name(cfg.data.dataset)},
                 {"fold", cfg.data.fold},
                 {"annotation", annotation_kind_name(cfg.data.annotation)}};
    j["encoder"] = {{"channels", cfg.encoder.channels}, {"weight_seed", cfg.encoder.weight_seed}};
    j["vrp"] = {{"dim", cfg.vrp.dim},
                {"heads", cfg.vrp.heads},
                {"n_queries", cfg.vrp.n_queries},
                {"posenc", cfg.vrp.posenc},
                {"query_init", query_init_name(cfg.vrp.query_init)},
                {"weight_seed", cfg.vrp.weight_seed}};
    j["decoder"] = {{"dim", cfg.decoder.dim},
                    {"heads", cfg.decoder.heads},
                    {"weight_seed", cfg.decoder.weight_seed}};
    j["train"] = {{"lr", cfg.train.lr},
                  {"batch", cfg.train.batch},
                  {"epochs", cfg.train.epochs},
                  {"steps", cfg.train.steps},
                  {"loss", loss_mode_name(cfg.train.loss)},
                  {"clip", cfg.train.clip},
                  {"clip_norm", cfg.train.clip_norm},
                  {"weight_decay", cfg.train.weight_decay},
                  {"beta1", cfg.train.beta1},
                  {"beta2", cfg.train.beta2},
                  {"adam_eps", cfg.train.adam_eps},
                  {"seed", cfg.train.seed}};
    j["workers"] = cfg.workers;
    return j;
}

RunConfig run_config_from_json(const json& j) {
    RunConfig cfg;
    check_keys(j, "", {"data", "encoder", "vrp", "decoder", "train", "workers"});
    if (j.contains("data")) {
        const json& d = j.at("data");
        check_keys(d, "data", {"root", "dataset", "fold", "annotation"});
        take(d, "data.", "root", cfg.data.root);
        cfg.data.dataset =
            dataset_from_name(take_name(d, "data.", "dataset", dataset_name(cfg.data.dataset)));
        take(d, "data.", "fold", cfg.data.fold);
        cfg.data.annotation = annotation_kind_from_name(
            take_name(d, "data.", "annotation", annotation_kind_name(cfg.data.annotation)));
    }
    if (j.contains("encoder")) {
        const json& e = j.at("encoder");
        check_keys(e, "encoder", {"channels", "weight_seed"});
        take(e, "encoder.", "channels", cfg.encoder.channels);
        take(e, "encoder.", "weight_seed", cfg.encoder.weight_seed);
    }
    if (j.contains("vrp")) {
        const json& v = j.at("vrp");
        check_keys(v, "vrp", {"dim", "heads", "n_queries", "posenc", "query_init", "weight_seed"});
        take(v, "vrp.", "dim", cfg.vrp.dim);
        take(v, "vrp.", "heads", cfg.vrp.heads);
        take(v, "vrp.", "n_queries", cfg.vrp.n_queries);
        take(v, "vrp.", "posenc", cfg.vrp.posenc);
        cfg.vrp.query_init =
            query_init_from_name(take_name(v, "vrp.", "query_init", query_init_name(cfg.vrp.query_init)));
        take(v, "vrp.", "weight_seed", cfg.vrp.weight_seed);
    }
    if (j.contains("decoder")) {
        const json& d = j.at("decoder");
        check_keys(d, "decoder", {"dim", "heads", "weight_seed"});
        take(d, "decoder.", "dim", cfg.decoder.dim);
        take(d, "decoder.", "heads", cfg.decoder.heads);
        take(d, "decoder.", "weight_seed", cfg.decoder.weight_seed);
    }
    if (j.contains("train")) {
        const json& t = j.at("train");
        check_keys(t, "train",
                   {"lr", "batch", "epochs", "steps", "loss", "clip", "clip_norm", "weight_decay",
                    "beta1", "beta2", "adam_eps", "seed"});
        take(t, "train.", "lr", cfg.train.lr);
        take(t, "train.", "batch", cfg.train.batch);
        take(t, "train.", "epochs", cfg.train.epochs);
        take(t, "train.", "steps", cfg.train.steps);
        cfg.train.loss =
            loss_mode_from_name(take_name(t, "train.", "loss", loss_mode_name(cfg.train.loss)));
        take(t, "train.", "clip", cfg.train.clip);
        take(t, "train.", "clip_norm", cfg.train.clip_norm);
        take(t, "train.", "weight_decay", cfg.train.weight_decay);
        take(t, "train.", "beta1", cfg.train.beta1);
        take(t, "train.", "beta2", cfg.train.beta2);
        take(t, "train.", "adam_eps", cfg.train.adam_eps);
        take(t, "train.", "seed", cfg.train.seed);
    }
    take(j, "", "workers", cfg.workers);
    if (cfg.workers < 1) bad("config key 'workers' must be >= 1");
    if (cfg.data.fold < 0) bad("config key 'data.fold' must be >= 0");
    return cfg;
}

std::string run_config_text(const RunConfig& cfg) { return run_config_to_json(cfg).dump(2) + "\n"; }

RunConfig load_run_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorCode::MissingFile, "config file not found: " + file.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, "config file " + file.string() + " is not valid JSON: " + e.what());
    }
    return run_config_from_json(j);
}

void save_run_config(const RunConfig& cfg, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw Error(ErrorCode::MissingFile, "cannot write config file: " + file.string());
    out << run_config_text(cfg);
}

ModelConfig model_config(const RunConfig& cfg) {
    ModelConfig m;
    m.encoder = cfg.encoder;
    m.vrp = cfg.vrp;
    m.decoder = cfg.decoder;
    return m;
}

FoldSpec resolve_fold(const RunConfig& cfg, const std::vector<std::string>& manifest_classes) {
    if (cfg.data.dataset == DatasetId::kSynthetic) {
        return synthetic_fold(manifest_classes, cfg.data.fold);
    }
    return fold_spec(cfg.data.dataset, cfg.data.fold);
}

std::pair<RunConfig, std::unique_ptr<VrpSamModel>> load_model_from_checkpoint(
    const std::filesystem::path& dir) {
    const LoadedCheckpoint ckpt = load_checkpoint(dir);
    RunConfig cfg = run_config_from_json(ckpt.config);
    RunConfig safe = cfg;
    safe.vrp.query_init = QueryInit::random;
    auto model = std::make_unique<VrpSamModel>(model_config(safe));
    apply_checkpoint(ckpt, model->all_parameters());
    return {std::move(cfg), std::move(model)};
}

}  // namespace vrpseg
