#include "vrpseg/losses.hpp"

#include <cmath>
#include <iostream>

namespace vrpseg {

namespace {

constexpr double kClamp = 1e-7;

void validate_gt(const BinaryMask& gt, Eigen::Index n_logits) {
    if (static_cast<Eigen::Index>(gt.data.size()) != n_logits) {
        throw Error(ErrorCode::ShapeMismatch, "logit count does not match gt pixel count");
    }
    for (auto v : gt.data) {
        if (v > 1) throw Error(ErrorCode::NonBinaryGT, "gt mask contains values outside {0,1}");
    }
}

Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& l) {
    return 1.0 / (1.0 + (-l).exp());
}

double bce_value(const Eigen::ArrayXd& p, const Eigen::ArrayXd& y) {
    const Eigen::ArrayXd pc = p.max(kClamp).min(1.0 - kClamp);
    return -(y * pc.log() + (1.0 - y) * (1.0 - pc).log()).mean();
}

// d(clamped BCE)/d(logit): (p - y)/N wherever the active clamp is inactive,
// 0 where the clamp has flattened the loss.
Eigen::ArrayXd bce_grad(const Eigen::ArrayXd& p, const Eigen::ArrayXd& y) {
    const double n = static_cast<double>(p.size());
    Eigen::ArrayXd g(p.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (y(i) > 0.5) {
            g(i) = p(i) > kClamp ? -(1.0 - p(i)) / n : 0.0;
        } else {
            g(i) = 1.0 - p(i) > kClamp ? p(i) / n : 0.0;
        }
    }
    return g;
}

double dice_value(const Eigen::ArrayXd& p, const Eigen::ArrayXd& y) {
    const double s = (p * y).sum();
    const double d = p.square().sum() + y.square().sum();
    return 1.0 - 2.0 * s / d;
}

Eigen::ArrayXd dice_grad(const Eigen::ArrayXd& p, const Eigen::ArrayXd& y) {
    const double s = (p * y).sum();
    const double d = p.square().sum() + y.square().sum();
    // d(dice)/dp_k = (-2 y_k d + 4 s p_k) / d^2, chained through sigmoid'.
    return ((-2.0 * y * d + 4.0 * s * p) / (d * d)) * p * (1.0 - p);
}

}  // namespace

const char* loss_mode_name(LossMode mode) {
    switch (mode) {
        case LossMode::bce: return "bce";
        case LossMode::dice: return "dice";
        case LossMode::bce_plus_dice: return "bce_plus_dice";
    }
    return "bce_plus_dice";
}

LossMode loss_mode_from_name(const std::string& name) {
    if (name == "bce") return LossMode::bce;
    if (name == "dice") return LossMode::dice;
    if (name == "bce_plus_dice") return LossMode::bce_plus_dice;
    throw Error(ErrorCode::ConfigError, "unknown loss mode: " + name);
}

LossReport bce_dice_loss(const SimilarityMap& logits, const BinaryMask& gt) {
    if (logits.height != gt.height || logits.width != gt.width) {
        throw Error(ErrorCode::ShapeMismatch, "logit map and gt differ in shape");
    }
    validate_gt(gt, static_cast<Eigen::Index>(logits.data.size()));
    Eigen::ArrayXd l(static_cast<Eigen::Index>(logits.data.size()));
    Eigen::ArrayXd y(l.size());
    for (Eigen::Index i = 0; i < l.size(); ++i) {
        l(i) = logits.data[static_cast<std::size_t>(i)];
        y(i) = gt.data[static_cast<std::size_t>(i)];
    }
    if (y.sum() == 0.0) {
        std::cerr << "warning: all-zero gt mask; dice degenerates to 1\n";
    }
    const Eigen::ArrayXd p = sigmoid(l);
    LossReport rep;
    rep.bce = bce_value(p, y);
    rep.dice = dice_value(p, y);
    rep.total = rep.bce + rep.dice;
    return rep;
}

LossNodes attach_loss(Tape& t, Tape::Id logits, const BinaryMask& gt, LossMode mode) {
    if (t.value(logits).cols() != 1) {
        throw Error(ErrorCode::ShapeMismatch, "loss expects an (H*W) x 1 logit column");
    }
    validate_gt(gt, t.value(logits).rows());

    const Eigen::ArrayXd l = t.value(logits).col(0).array();
    Eigen::ArrayXd y(l.size());
    for (Eigen::Index i = 0; i < l.size(); ++i) y(i) = gt.data[static_cast<std::size_t>(i)];
    if (y.sum() == 0.0) {
        std::cerr << "warning: all-zero gt mask; dice degenerates to 1\n";
    }
    const Eigen::ArrayXd p = sigmoid(l);

    Mat bce_val(1, 1), dice_val(1, 1);
    bce_val(0, 0) = bce_value(p, y);
    dice_val(0, 0) = dice_value(p, y);

    LossNodes nodes;
    nodes.bce = t.make_node(bce_val, {logits}, [logits, p, y](Tape& tt, Tape::Id self) {
        const double g = tt.grad(self)(0, 0);
        Mat gl = (g * bce_grad(p, y)).matrix();
        tt.accumulate(logits, gl);
    });
    nodes.dice = t.make_node(dice_val, {logits}, [logits, p, y](Tape& tt, Tape::Id self) {
        const double g = tt.grad(self)(0, 0);
        Mat gl = (g * dice_grad(p, y)).matrix();
        tt.accumulate(logits, gl);
    });
    switch (mode) {
        case LossMode::bce: nodes.total = nodes.bce; break;
        case LossMode::dice: nodes.total = nodes.dice; break;
        case LossMode::bce_plus_dice: nodes.total = t.add(nodes.bce, nodes.dice); break;
    }
    return nodes;
}

}  // namespace vrpseg
