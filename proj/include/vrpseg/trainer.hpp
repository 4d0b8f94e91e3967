#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vrpseg/dataset.hpp"
#include "vrpseg/losses.hpp"
#include "vrpseg/model.hpp"

namespace vrpseg {

struct TrainConfig {
    double lr = 1e-4;  // COCO preset; the PASCAL preset is 2e-4
    int batch = 8;
    int epochs = 50;  // preset fidelity only; the loop is driven by `steps`
    long steps = 200;
    LossMode loss = LossMode::bce_plus_dice;
    bool clip = true;  // global-norm clipping, artifact default
    double clip_norm = 1.0;
    double weight_decay = 1e-2;  // applied to decay-flagged projections only
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
};

/// lr(0) = lr_init, lr(total) = 0, monotone nonincreasing cosine decay.
double cosine_lr(double lr_init, long step, long total_steps);

struct StepStats {
    long step = 0;  // index of the step just taken
    double loss_bce = 0.0;
    double loss_dice = 0.0;
    double loss_total = 0.0;
    double lr = 0.0;
    double grad_norm = 0.0;  // pre-clip global norm of the averaged gradient
};

/// AdamW over the model's trainable parameters, frozen everything else by
/// construction. Batch gradients accumulate sequentially in episode order and
/// are averaged, so a step is a deterministic function of (state, batch).
class Trainer {
public:
    Trainer(VrpSamModel& model, TrainConfig cfg);

    /// One optimizer step; throws DivergedLoss on a non-finite loss after
    /// dumping parameter norms to stderr.
    StepStats step(const std::vector<Episode>& batch);

    long current_step() const { return step_; }
    void set_step(long s) { step_ = s; }

    /// Adam moment views (opt/m/<name>, opt/v/<name>) for checkpointing.
    std::vector<NamedTensorView> optimizer_state();

    const TrainConfig& config() const { return cfg_; }

private:
    struct Slot {
        std::string name;
        double* data = nullptr;
        std::size_t size = 0;
        std::vector<int> shape;
        bool decay = false;
        std::vector<double> m, v, grad;
    };

    VrpSamModel* model_;
    TrainConfig cfg_;
    long step_ = 0;
    std::vector<Slot> slots_;
    std::map<std::string, std::size_t> index_;
};

struct TrainResult {
    long steps = 0;
    StepStats last;
};

/// Runs trainer.current_step()..cfg.steps-1 over episodes drawn from the
/// split (episode index = step * batch + position). Writes one JSON line
/// {step, loss_bce, loss_dice, lr} per step when log is non-null.
TrainResult train_loop(VrpSamModel& model, Trainer& trainer, const DatasetManifest& manifest,
                       const FoldSpec& spec, Split split, AnnotationKind kind,
                       std::ostream* log);

/// Model tensors + optimizer moments + step under one checkpoint directory.
void save_training_checkpoint(const std::filesystem::path& dir, VrpSamModel& model,
                              Trainer& trainer, const nlohmann::json& config);
void load_training_checkpoint(const std::filesystem::path& dir, VrpSamModel& model,
                              Trainer& trainer);

}  // namespace vrpseg
