#include "vrpseg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "vrpseg/checkpoint.hpp"
#include "vrpseg/tape.hpp"

namespace vrpseg {

double cosine_lr(double lr_init, long step, long total_steps) {
    if (total_steps <= 0) return lr_init;
    const double t = std::clamp(static_cast<double>(step), 0.0,
                                static_cast<double>(total_steps));
    constexpr double kPi = 3.14159265358979323846;
    return lr_init * 0.5 * (1.0 + std::cos(kPi * t / static_cast<double>(total_steps)));
}

Trainer::Trainer(VrpSamModel& model, TrainConfig cfg) : model_(&model), cfg_(cfg) {
    if (cfg_.lr <= 0.0) {
        throw Error(ErrorCode::BadConfig, "lr must be positive");
    }
    if (cfg_.batch < 1) {
        throw Error(ErrorCode::BadConfig, "batch must be >= 1");
    }
    if (cfg_.steps < 1) {
        throw Error(ErrorCode::BadConfig, "steps must be >= 1");
    }
    for (const auto& view : model.trainable_parameters()) {
        Slot slot;
        slot.name = view.name;
        slot.data = view.data;
        slot.size = view.size;
        slot.shape = view.shape;
        slot.decay = view.decay;
        slot.m.assign(view.size, 0.0);
        slot.v.assign(view.size, 0.0);
        slot.grad.assign(view.size, 0.0);
        index_[slot.name] = slots_.size();
        slots_.push_back(std::move(slot));
    }
}

StepStats Trainer::step(const std::vector<Episode>& batch) {
    if (batch.empty()) {
        throw Error(ErrorCode::BadConfig, "empty batch");
    }
    for (auto& slot : slots_) {
        std::fill(slot.grad.begin(), slot.grad.end(), 0.0);
    }

    StepStats stats;
    stats.step = step_;
    for (const auto& ep : batch) {
        Tape t;
        const auto g = model_->build_episode_graph(t, ep, cfg_.loss);
        const double bce = t.value(g.loss.bce)(0, 0);
        const double dice = t.value(g.loss.dice)(0, 0);
        const double total = t.value(g.loss.total)(0, 0);
        if (!std::isfinite(total)) {
            std::cerr << "diverged at step " << step_ << ": loss=" << total
                      << " bce=" << bce << " dice=" << dice << "\n";
            for (const auto& slot : slots_) {
                double norm = 0.0;
                for (std::size_t i = 0; i < slot.size; ++i) {
                    norm += slot.data[i] * slot.data[i];
                }
                std::cerr << "  " << slot.name << " l2=" << std::sqrt(norm) << "\n";
            }
            throw Error(ErrorCode::DivergedLoss,
                        "non-finite loss at step " + std::to_string(step_));
        }
        stats.loss_bce += bce;
        stats.loss_dice += dice;
        stats.loss_total += total;

        t.backward(g.loss.total);
        for (const auto& bind : g.binds) {
            auto& slot = slots_[index_.at(bind.name)];
            const Mat& grad = t.grad(bind.tape_id);
            const double* src = grad.data();
            for (std::size_t i = 0; i < slot.size; ++i) {
                slot.grad[i] += src[i];
            }
        }
    }

    const double inv_b = 1.0 / static_cast<double>(batch.size());
    stats.loss_bce *= inv_b;
    stats.loss_dice *= inv_b;
    stats.loss_total *= inv_b;

    double norm_sq = 0.0;
    for (auto& slot : slots_) {
        for (auto& g : slot.grad) {
            g *= inv_b;
            norm_sq += g * g;
        }
    }
    stats.grad_norm = std::sqrt(norm_sq);
    if (cfg_.clip && stats.grad_norm > cfg_.clip_norm) {
        const double scale = cfg_.clip_norm / stats.grad_norm;
        for (auto& slot : slots_) {
            for (auto& g : slot.grad) g *= scale;
        }
    }

    stats.lr = cosine_lr(cfg_.lr, step_, cfg_.steps);
    const double t_adam = static_cast<double>(step_) + 1.0;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_adam);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_adam);
    for (auto& slot : slots_) {
        for (std::size_t i = 0; i < slot.size; ++i) {
            const double g = slot.grad[i];
            slot.m[i] = cfg_.beta1 * slot.m[i] + (1.0 - cfg_.beta1) * g;
            slot.v[i] = cfg_.beta2 * slot.v[i] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = slot.m[i] / bc1;
            const double vhat = slot.v[i] / bc2;
            double update = mhat / (std::sqrt(vhat) + cfg_.adam_eps);
            if (slot.decay) update += cfg_.weight_decay * slot.data[i];
            slot.data[i] -= stats.lr * update;
        }
    }
    ++step_;
    return stats;
}

std::vector<NamedTensorView> Trainer::optimizer_state() {
    std::vector<NamedTensorView> out;
    for (auto& slot : slots_) {
        out.push_back({"opt/m/" + slot.name, slot.shape, slot.m.data(), slot.size, false});
        out.push_back({"opt/v/" + slot.name, slot.shape, slot.v.data(), slot.size, false});
    }
    return out;
}

TrainResult train_loop(VrpSamModel& model, Trainer& trainer, const DatasetManifest& manifest,
                       const FoldSpec& spec, Split split, AnnotationKind kind,
                       std::ostream* log) {
    const TrainConfig& cfg = trainer.config();
    EpisodeSampler sampler(manifest, spec, split, kind, cfg.seed);

    TrainResult result;
    for (long s = trainer.current_step(); s < cfg.steps; ++s) {
        std::vector<Episode> batch;
        batch.reserve(static_cast<std::size_t>(cfg.batch));
        for (int j = 0; j < cfg.batch; ++j) {
            batch.push_back(sampler.episode(
                static_cast<std::size_t>(s) * static_cast<std::size_t>(cfg.batch) +
                static_cast<std::size_t>(j)));
        }
        result.last = trainer.step(batch);
        ++result.steps;
        if (log) {
            nlohmann::json line = {{"step", result.last.step},
                                   {"loss_bce", result.last.loss_bce},
                                   {"loss_dice", result.last.loss_dice},
                                   {"lr", result.last.lr}};
            (*log) << line.dump() << "\n";
        }
    }
    return result;
}

void save_training_checkpoint(const std::filesystem::path& dir, VrpSamModel& model,
                              Trainer& trainer, const nlohmann::json& config) {
    std::vector<NamedTensorView> tensors = model.all_parameters();
    for (auto& v : trainer.optimizer_state()) tensors.push_back(v);
    save_checkpoint(dir, tensors, config, trainer.current_step());
}

void load_training_checkpoint(const std::filesystem::path& dir, VrpSamModel& model,
                              Trainer& trainer) {
    const LoadedCheckpoint ckpt = load_checkpoint(dir);
    std::vector<NamedTensorView> tensors = model.all_parameters();
    for (auto& v : trainer.optimizer_state()) tensors.push_back(v);
    apply_checkpoint(ckpt, tensors);
    trainer.set_step(ckpt.step);
}

}  // namespace vrpseg
