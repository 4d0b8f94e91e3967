#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "vrpseg/error.hpp"

namespace vrpseg {

using Mat = Eigen::MatrixXd;

/// Reverse-mode autodiff over dense matrices. Nodes are appended in
/// topological order; backward() walks them in reverse. One tape per forward
/// pass; parameters enter as grad-leaves, frozen tensors as constants.
///
/// Feature maps travel through the tape as (H*W) x C token matrices; spatial
/// ops (pixel_shuffle2, bilinear_upsample2) carry their grid dims explicitly.
class Tape {
public:
    using Id = int;
    using BackwardFn = std::function<void(Tape&, Id self)>;

    Id leaf(Mat value, bool requires_grad);
    Id constant(Mat value) { return leaf(std::move(value), false); }

    Id add(Id a, Id b);
    Id scale(Id a, double s);
    /// a: N x C, row: 1 x C added to every row.
    Id add_row_broadcast(Id a, Id row);
    Id matmul(Id a, Id b);
    /// a * b^T
    Id matmul_nt(Id a, Id b);
    Id slice_cols(Id a, int begin, int n);
    Id concat_cols(const std::vector<Id>& parts);
    Id concat_rows(const std::vector<Id>& parts);
    Id softmax_rows(Id a);
    Id relu(Id a);
    Id layer_norm_rows(Id x, Id gain, Id bias, double eps = 1e-5);
    /// (h*w) x (4*C) -> (2h*2w) x C; column c*4 + di*2 + dj feeds output pixel
    /// (2i+di, 2j+dj). This is exactly a kernel-2 stride-2 transposed conv once
    /// the weight is laid out as (C_in x 4*C_out).
    Id pixel_shuffle2(Id a, int h, int w);
    /// (h*w) x C -> (2h*2w) x C, half-pixel-aligned bilinear interpolation.
    Id bilinear_upsample2(Id a, int h, int w);

    /// Extension point for fused ops (the loss uses it).
    Id make_node(Mat value, std::vector<Id> parents, BackwardFn backward);

    const Mat& value(Id id) const { return nodes_[id].value; }
    bool requires_grad(Id id) const { return nodes_[id].needs_grad; }
    /// True once backward() has deposited a gradient here.
    bool has_grad(Id id) const { return nodes_[id].grad.size() != 0; }
    const Mat& grad(Id id) const;
    /// Adds g into the node's gradient; no-op for constants.
    void accumulate(Id id, const Mat& g);

    /// root must be 1x1; seeds d(root)/d(root) = 1 and sweeps the tape.
    void backward(Id root);

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Mat value;
        Mat grad;
        bool needs_grad = false;
        BackwardFn backward;
    };

    bool any_requires(const std::vector<Id>& ids) const;

    std::vector<Node> nodes_;
};

}  // namespace vrpseg
