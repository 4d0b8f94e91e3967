#include "vrpseg/tape.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>
#include <utility>

namespace vrpseg {

Tape::Id Tape::leaf(Mat value, bool requires_grad) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size()) - 1;
}

Tape::Id Tape::make_node(Mat value, std::vector<Id> parents, BackwardFn backward) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = any_requires(parents);
    if (n.needs_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size()) - 1;
}

bool Tape::any_requires(const std::vector<Id>& ids) const {
    for (Id id : ids) {
        if (nodes_[id].needs_grad) return true;
    }
    return false;
}

const Mat& Tape::grad(Id id) const {
    if (nodes_[id].grad.size() == 0) {
        throw Error(ErrorCode::BadShape, "gradient not populated for this node");
    }
    return nodes_[id].grad;
}

void Tape::accumulate(Id id, const Mat& g) {
    Node& n = nodes_[id];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0) {
        n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    }
    n.grad += g;
}

void Tape::backward(Id root) {
    if (value(root).rows() != 1 || value(root).cols() != 1) {
        throw Error(ErrorCode::BadShape, "backward root must be a 1x1 scalar node");
    }
    if (!nodes_[root].needs_grad) return;
    nodes_[root].grad = Mat::Ones(1, 1);
    for (Id id = root; id >= 0; --id) {
        Node& n = nodes_[id];
        if (n.needs_grad && n.grad.size() != 0 && n.backward) n.backward(*this, id);
    }
}

Tape::Id Tape::add(Id a, Id b) {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
        throw Error(ErrorCode::ShapeMismatch, "add: operand shapes differ");
    }
    return make_node(value(a) + value(b), {a, b}, [a, b](Tape& t, Id self) {
        t.accumulate(a, t.grad(self));
        t.accumulate(b, t.grad(self));
    });
}

Tape::Id Tape::scale(Id a, double s) {
    return make_node(value(a) * s, {a}, [a, s](Tape& t, Id self) {
        t.accumulate(a, t.grad(self) * s);
    });
}

Tape::Id Tape::add_row_broadcast(Id a, Id row) {
    if (value(row).rows() != 1 || value(row).cols() != value(a).cols()) {
        throw Error(ErrorCode::ShapeMismatch, "add_row_broadcast: row must be 1 x cols(a)");
    }
    Mat out = value(a);
    out.rowwise() += value(row).row(0);
    return make_node(std::move(out), {a, row}, [a, row](Tape& t, Id self) {
        const Mat& g = t.grad(self);
        t.accumulate(a, g);
        t.accumulate(row, g.colwise().sum());
    });
}

Tape::Id Tape::matmul(Id a, Id b) {
    if (value(a).cols() != value(b).rows()) {
        throw Error(ErrorCode::ShapeMismatch, "matmul: inner dimensions differ");
    }
    return make_node(value(a) * value(b), {a, b}, [a, b](Tape& t, Id self) {
        const Mat& g = t.grad(self);
        t.accumulate(a, g * t.value(b).transpose());
        t.accumulate(b, t.value(a).transpose() * g);
    });
}

Tape::Id Tape::matmul_nt(Id a, Id b) {
    if (value(a).cols() != value(b).cols()) {
        throw Error(ErrorCode::ShapeMismatch, "matmul_nt: column dimensions differ");
    }
    return make_node(value(a) * value(b).transpose(), {a, b}, [a, b](Tape& t, Id self) {
        const Mat& g = t.grad(self);
        t.accumulate(a, g * t.value(b));
        t.accumulate(b, g.transpose() * t.value(a));
    });
}

Tape::Id Tape::slice_cols(Id a, int begin, int n) {
    return make_node(value(a).middleCols(begin, n), {a}, [a, begin, n](Tape& t, Id self) {
        Mat full = Mat::Zero(t.value(a).rows(), t.value(a).cols());
        full.middleCols(begin, n) = t.grad(self);
        t.accumulate(a, full);
    });
}

Tape::Id Tape::concat_cols(const std::vector<Id>& parts) {
    Eigen::Index rows = value(parts.front()).rows();
    Eigen::Index cols = 0;
    for (Id p : parts) {
        if (value(p).rows() != rows) throw Error(ErrorCode::ShapeMismatch, "concat_cols: row counts differ");
        cols += value(p).cols();
    }
    Mat out(rows, cols);
    Eigen::Index off = 0;
    for (Id p : parts) {
        out.middleCols(off, value(p).cols()) = value(p);
        off += value(p).cols();
    }
    return make_node(std::move(out), parts, [parts](Tape& t, Id self) {
        const Mat& g = t.grad(self);
        Eigen::Index off = 0;
        for (Id p : parts) {
            const Eigen::Index w = t.value(p).cols();
            t.accumulate(p, g.middleCols(off, w));
            off += w;
        }
    });
}

Tape::Id Tape::concat_rows(const std::vector<Id>& parts) {
    Eigen::Index cols = value(parts.front()).cols();
    Eigen::Index rows = 0;
    for (Id p : parts) {
        if (value(p).cols() != cols) throw Error(ErrorCode::ShapeMismatch, "concat_rows: column counts differ");
        rows += value(p).rows();
    }
    Mat out(rows, cols);
    Eigen::Index off = 0;
    for (Id p : parts) {
        out.middleRows(off, value(p).rows()) = value(p);
        off += value(p).rows();
    }
    return make_node(std::move(out), parts, [parts](Tape& t, Id self) {
        const Mat& g = t.grad(self);
        Eigen::Index off = 0;
        for (Id p : parts) {
            const Eigen::Index h = t.value(p).rows();
            t.accumulate(p, g.middleRows(off, h));
            off += h;
        }
    });
}

Tape::Id Tape::softmax_rows(Id a) {
    Mat out = value(a);
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        const double m = out.row(r).maxCoeff();
        out.row(r) = (out.row(r).array() - m).exp();
        out.row(r) /= out.row(r).sum();
    }
    return make_node(std::move(out), {a}, [a](Tape& t, Id self) {
        const Mat& y = t.value(self);
        const Mat& g = t.grad(self);
        Mat gx(y.rows(), y.cols());
        for (Eigen::Index r = 0; r < y.rows(); ++r) {
            const double dot = (g.row(r).array() * y.row(r).array()).sum();
            gx.row(r) = y.row(r).array() * (g.row(r).array() - dot);
        }
        t.accumulate(a, gx);
    });
}

Tape::Id Tape::relu(Id a) {
    return make_node(value(a).cwiseMax(0.0), {a}, [a](Tape& t, Id self) {
        const Mat& x = t.value(a);
        Mat gx = (x.array() > 0.0).cast<double>() * t.grad(self).array();
        t.accumulate(a, gx);
    });
}

Tape::Id Tape::layer_norm_rows(Id x, Id gain, Id bias, double eps) {
    const Mat& xv = value(x);
    const Eigen::Index cols = xv.cols();
    if (value(gain).cols() != cols || value(bias).cols() != cols) {
        throw Error(ErrorCode::ShapeMismatch, "layer_norm_rows: gain/bias must be 1 x cols(x)");
    }
    Mat out(xv.rows(), cols);
    for (Eigen::Index r = 0; r < xv.rows(); ++r) {
        const double mu = xv.row(r).mean();
        const double var = (xv.row(r).array() - mu).square().mean();
        const double inv = 1.0 / std::sqrt(var + eps);
        out.row(r) = ((xv.row(r).array() - mu) * inv) * value(gain).row(0).array() +
                     value(bias).row(0).array();
    }
    return make_node(std::move(out), {x, gain, bias}, [x, gain, bias, eps](Tape& t, Id self) {
        const Mat& xv = t.value(x);
        const Mat& g = t.grad(self);
        const auto gain_row = t.value(gain).row(0);
        const Eigen::Index cols = xv.cols();
        const double n = static_cast<double>(cols);
        Mat gx(xv.rows(), cols);
        Mat ggain = Mat::Zero(1, cols);
        Mat gbias = Mat::Zero(1, cols);
        for (Eigen::Index r = 0; r < xv.rows(); ++r) {
            const double mu = xv.row(r).mean();
            const double var = (xv.row(r).array() - mu).square().mean();
            const double inv = 1.0 / std::sqrt(var + eps);
            Eigen::RowVectorXd xhat = (xv.row(r).array() - mu) * inv;
            Eigen::RowVectorXd dxhat = g.row(r).array() * gain_row.array();
            const double sum_dxhat = dxhat.sum();
            const double sum_dxhat_xhat = (dxhat.array() * xhat.array()).sum();
            // dx = inv/n * (n*dxhat - sum(dxhat) - xhat * sum(dxhat*xhat))
            gx.row(r) = (inv / n) *
                        (n * dxhat.array() - sum_dxhat - xhat.array() * sum_dxhat_xhat);
            ggain.row(0).array() += g.row(r).array() * xhat.array();
            gbias.row(0) += g.row(r);
        }
        t.accumulate(x, gx);
        t.accumulate(gain, ggain);
        t.accumulate(bias, gbias);
    });
}

Tape::Id Tape::pixel_shuffle2(Id a, int h, int w) {
    const Mat& xv = value(a);
    if (xv.rows() != static_cast<Eigen::Index>(h) * w || xv.cols() % 4 != 0) {
        throw Error(ErrorCode::ShapeMismatch, "pixel_shuffle2: expected (h*w) x (4*C)");
    }
    const int co = static_cast<int>(xv.cols()) / 4;
    Mat out(static_cast<Eigen::Index>(4) * h * w, co);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            for (int di = 0; di < 2; ++di) {
                for (int dj = 0; dj < 2; ++dj) {
                    const Eigen::Index dst = static_cast<Eigen::Index>(2 * i + di) * (2 * w) + (2 * j + dj);
                    const Eigen::Index src = static_cast<Eigen::Index>(i) * w + j;
                    for (int c = 0; c < co; ++c) {
                        out(dst, c) = xv(src, c * 4 + di * 2 + dj);
                    }
                }
            }
        }
    }
    return make_node(std::move(out), {a}, [a, h, w, co](Tape& t, Id self) {
        const Mat& g = t.grad(self);
        Mat gx = Mat::Zero(static_cast<Eigen::Index>(h) * w, static_cast<Eigen::Index>(co) * 4);
        for (int i = 0; i < h; ++i) {
            for (int j = 0; j < w; ++j) {
                for (int di = 0; di < 2; ++di) {
                    for (int dj = 0; dj < 2; ++dj) {
                        const Eigen::Index dst = static_cast<Eigen::Index>(2 * i + di) * (2 * w) + (2 * j + dj);
                        const Eigen::Index src = static_cast<Eigen::Index>(i) * w + j;
                        for (int c = 0; c < co; ++c) {
                            gx(src, c * 4 + di * 2 + dj) = g(dst, c);
                        }
                    }
                }
            }
        }
        t.accumulate(a, gx);
    });
}

namespace {

struct BilinearTap {
    Eigen::Index src[4];
    double w[4];
};

std::vector<BilinearTap> bilinear2x_taps(int h, int w) {
    std::vector<BilinearTap> taps(static_cast<std::size_t>(4) * h * w);
    auto split = [](double coord, int n) {
        double c = coord;
        int lo = static_cast<int>(std::floor(c));
        double frac = c - lo;
        int hi = lo + 1;
        lo = std::clamp(lo, 0, n - 1);
        hi = std::clamp(hi, 0, n - 1);
        return std::tuple<int, int, double>(lo, hi, frac);
    };
    for (int r = 0; r < 2 * h; ++r) {
        auto [r0, r1, fy] = split((r + 0.5) / 2.0 - 0.5, h);
        for (int c = 0; c < 2 * w; ++c) {
            auto [c0, c1, fx] = split((c + 0.5) / 2.0 - 0.5, w);
            BilinearTap& t = taps[static_cast<std::size_t>(r) * (2 * w) + c];
            t.src[0] = static_cast<Eigen::Index>(r0) * w + c0;
            t.src[1] = static_cast<Eigen::Index>(r0) * w + c1;
            t.src[2] = static_cast<Eigen::Index>(r1) * w + c0;
            t.src[3] = static_cast<Eigen::Index>(r1) * w + c1;
            t.w[0] = (1 - fy) * (1 - fx);
            t.w[1] = (1 - fy) * fx;
            t.w[2] = fy * (1 - fx);
            t.w[3] = fy * fx;
        }
    }
    return taps;
}

}  // namespace

Tape::Id Tape::bilinear_upsample2(Id a, int h, int w) {
    const Mat& xv = value(a);
    if (xv.rows() != static_cast<Eigen::Index>(h) * w) {
        throw Error(ErrorCode::ShapeMismatch, "bilinear_upsample2: expected (h*w) rows");
    }
    auto taps = bilinear2x_taps(h, w);
    Mat out = Mat::Zero(static_cast<Eigen::Index>(4) * h * w, xv.cols());
    for (std::size_t o = 0; o < taps.size(); ++o) {
        for (int k = 0; k < 4; ++k) {
            out.row(static_cast<Eigen::Index>(o)) += taps[o].w[k] * xv.row(taps[o].src[k]);
        }
    }
    return make_node(std::move(out), {a}, [a, taps](Tape& t, Id self) {
        const Mat& g = t.grad(self);
        Mat gx = Mat::Zero(t.value(a).rows(), t.value(a).cols());
        for (std::size_t o = 0; o < taps.size(); ++o) {
            for (int k = 0; k < 4; ++k) {
                gx.row(taps[o].src[k]) += taps[o].w[k] * g.row(static_cast<Eigen::Index>(o));
            }
        }
        t.accumulate(a, gx);
    });
}

}  // namespace vrpseg
