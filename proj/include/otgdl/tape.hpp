#pragma once

#include <array>
#include <functional>
#include <vector>

#include "otgdl/tensor.hpp"

namespace otgdl {

// Reverse-mode autodiff over dense tensors, define-by-run. A Tape owns every
// intermediate value; ops evaluate eagerly and record the backward rule.
// Single-threaded by construction; run one Tape per worker.
class Tape {
public:
    using Id = int;

    enum class Op {
        Leaf,
        Add,
        Sub,
        Mul,
        Scale,
        MatMul,
        Transpose,
        Exp,
        Log,
        Relu,
        RowSoftmax,
        RowLogSumExp,
        ReduceSum,
        RowSum,
        ColSum,
        BroadcastRow,
        BroadcastCol,
        ConcatCols,
        SliceCols,
        Reshape,
    };

    Id input(Tensor v) { return push(Op::Leaf, {-1, -1}, std::move(v), true); }
    Id constant(Tensor v) { return push(Op::Leaf, {-1, -1}, std::move(v), false); }
    Id constant(const Mat& m) { return constant(Tensor::from_mat(m)); }
    Id constant(double v) { return constant(Tensor::scalar(v)); }

    Id add(Id a, Id b) {
        check_same(a, b, "add");
        Tensor out = val(a);
        out.map() += val(b).map();
        return push(Op::Add, {a, b}, std::move(out));
    }

    Id sub(Id a, Id b) {
        check_same(a, b, "sub");
        Tensor out = val(a);
        out.map() -= val(b).map();
        return push(Op::Sub, {a, b}, std::move(out));
    }

    Id mul(Id a, Id b) {
        check_same(a, b, "mul");
        Tensor out = val(a);
        out.map().array() *= val(b).map().array();
        return push(Op::Mul, {a, b}, std::move(out));
    }

    Id scale(Id a, double c) {
        Tensor out = val(a);
        out.map() *= c;
        Id id = push(Op::Scale, {a, -1}, std::move(out));
        nodes_[id].aux_scalar = c;
        return id;
    }

    Id matmul(Id a, Id b) {
        const Tensor& A = val(a);
        const Tensor& B = val(b);
        require(A.cols() == B.rows(), "ShapeMismatch", "matmul inner dimensions");
        Tensor out(A.rows(), B.cols());
        out.map().noalias() = A.map() * B.map();
        return push(Op::MatMul, {a, b}, std::move(out));
    }

    Id transpose(Id a) {
        const Tensor& A = val(a);
        Tensor out(A.cols(), A.rows());
        out.map() = A.map().transpose();
        return push(Op::Transpose, {a, -1}, std::move(out));
    }

    Id exp(Id a) {
        Tensor out = val(a);
        out.map() = out.map().array().exp().matrix();
        return push(Op::Exp, {a, -1}, std::move(out));
    }

    Id log(Id a) {
        Tensor out = val(a);
        out.map() = out.map().array().log().matrix();
        return push(Op::Log, {a, -1}, std::move(out));
    }

    Id relu(Id a) {
        Tensor out = val(a);
        for (double& v : out.data) v = v > 0.0 ? v : 0.0;
        return push(Op::Relu, {a, -1}, std::move(out));
    }

    Id row_softmax(Id a) {
        const Tensor& A = val(a);
        Tensor out(A.rows(), A.cols());
        for (int i = 0; i < A.rows(); ++i) {
            double m = -1e300;
            for (int j = 0; j < A.cols(); ++j) m = std::max(m, A.at(i, j));
            double s = 0.0;
            for (int j = 0; j < A.cols(); ++j) s += std::exp(A.at(i, j) - m);
            for (int j = 0; j < A.cols(); ++j) out.at(i, j) = std::exp(A.at(i, j) - m) / s;
        }
        return push(Op::RowSoftmax, {a, -1}, std::move(out));
    }

    // n x m -> n x 1, lse per row; backward uses the row softmax.
    Id row_logsumexp(Id a) {
        const Tensor& A = val(a);
        Tensor out(A.rows(), 1);
        for (int i = 0; i < A.rows(); ++i) {
            double m = -1e300;
            for (int j = 0; j < A.cols(); ++j) m = std::max(m, A.at(i, j));
            double s = 0.0;
            for (int j = 0; j < A.cols(); ++j) s += std::exp(A.at(i, j) - m);
            out.at(i, 0) = m + std::log(s);
        }
        return push(Op::RowLogSumExp, {a, -1}, std::move(out));
    }

    Id reduce_sum(Id a) { return push(Op::ReduceSum, {a, -1}, Tensor::scalar(val(a).map().sum())); }

    Id row_sum(Id a) {
        const Tensor& A = val(a);
        Tensor out(A.rows(), 1);
        out.map() = A.map().rowwise().sum();
        return push(Op::RowSum, {a, -1}, std::move(out));
    }

    Id col_sum(Id a) {
        const Tensor& A = val(a);
        Tensor out(1, A.cols());
        out.map() = A.map().colwise().sum();
        return push(Op::ColSum, {a, -1}, std::move(out));
    }

    Id broadcast_row(Id a, int n) {
        const Tensor& A = val(a);
        require(A.rows() == 1, "ShapeMismatch", "broadcast_row wants a 1 x m input");
        Tensor out(n, A.cols());
        out.map() = A.map().replicate(n, 1);
        return push(Op::BroadcastRow, {a, -1}, std::move(out));
    }

    Id broadcast_col(Id a, int m) {
        const Tensor& A = val(a);
        require(A.cols() == 1, "ShapeMismatch", "broadcast_col wants an n x 1 input");
        Tensor out(A.rows(), m);
        out.map() = A.map().replicate(1, m);
        return push(Op::BroadcastCol, {a, -1}, std::move(out));
    }

    Id concat_cols(Id a, Id b) {
        const Tensor& A = val(a);
        const Tensor& B = val(b);
        require(A.rows() == B.rows(), "ShapeMismatch", "concat_cols row counts");
        Tensor out(A.rows(), A.cols() + B.cols());
        out.map().leftCols(A.cols()) = A.map();
        out.map().rightCols(B.cols()) = B.map();
        return push(Op::ConcatCols, {a, b}, std::move(out));
    }

    Id slice_cols(Id a, int c0, int c1) {
        const Tensor& A = val(a);
        require(0 <= c0 && c0 < c1 && c1 <= A.cols(), "ShapeMismatch", "slice_cols range");
        Tensor out(A.rows(), c1 - c0);
        out.map() = A.map().middleCols(c0, c1 - c0);
        Id id = push(Op::SliceCols, {a, -1}, std::move(out));
        nodes_[id].aux0 = c0;
        nodes_[id].aux1 = c1;
        return id;
    }

    // row-major reinterpretation; data order unchanged
    Id reshape(Id a, int r, int c) {
        const Tensor& A = val(a);
        require(static_cast<std::size_t>(r) * c == A.numel(), "ShapeMismatch", "reshape element count");
        Tensor out = A;
        out.shape = {r, c};
        return push(Op::Reshape, {a, -1}, std::move(out));
    }

    const Tensor& val(Id id) const { return nodes_[id].value; }

    // Gradient of the last backward() loss w.r.t. node id. Leaves never
    // touched by the loss get a zero gradient.
    const Tensor& grad(Id id) const {
        const Node& n = nodes_[id];
        if (n.grad.numel() == 0) {
            zero_cache_ = Tensor::zeros(n.value.rows(), n.value.cols());
            return zero_cache_;
        }
        return n.grad;
    }

    std::size_t size() const { return nodes_.size(); }

    void backward(Id loss) {
        require(val(loss).numel() == 1, "ShapeMismatch", "backward needs a scalar loss");
        for (auto& n : nodes_) n.grad = Tensor();
        nodes_[loss].grad = Tensor::scalar(1.0);
        for (Id id = loss; id >= 0; --id) {
            Node& n = nodes_[id];
            if (n.grad.numel() == 0 || !n.needs_grad || n.op == Op::Leaf) continue;
            backward_node(id);
        }
    }

private:
    struct Node {
        Op op;
        std::array<Id, 2> in;
        Tensor value;
        Tensor grad;
        bool needs_grad = false;
        double aux_scalar = 0.0;
        int aux0 = 0, aux1 = 0;
    };

    Id push(Op op, std::array<Id, 2> in, Tensor v, bool leaf_needs_grad = false) {
        Node n;
        n.op = op;
        n.in = in;
        n.value = std::move(v);
        n.needs_grad = leaf_needs_grad;
        for (Id i : in)
            if (i >= 0 && nodes_[i].needs_grad) n.needs_grad = true;
        nodes_.push_back(std::move(n));
        return static_cast<Id>(nodes_.size() - 1);
    }

    void check_same(Id a, Id b, const char* what) {
        require(val(a).same_shape(val(b)), "ShapeMismatch", std::string(what) + " operand shapes differ");
    }

    void accumulate(Id id, const Tensor& g) {
        if (id < 0 || !nodes_[id].needs_grad) return;
        Node& n = nodes_[id];
        if (n.grad.numel() == 0) {
            n.grad = g;
        } else {
            n.grad.map() += g.map();
        }
    }

    void backward_node(Id id) {
        Node& n = nodes_[id];
        const Tensor& g = n.grad;
        const Id a = n.in[0];
        const Id b = n.in[1];
        switch (n.op) {
        case Op::Leaf:
            break;
        case Op::Add:
            accumulate(a, g);
            accumulate(b, g);
            break;
        case Op::Sub: {
            accumulate(a, g);
            if (b >= 0 && nodes_[b].needs_grad) {
                Tensor gb = g;
                gb.map() *= -1.0;
                accumulate(b, gb);
            }
            break;
        }
        case Op::Mul: {
            if (nodes_[a].needs_grad) {
                Tensor ga = g;
                ga.map().array() *= val(b).map().array();
                accumulate(a, ga);
            }
            if (nodes_[b].needs_grad) {
                Tensor gb = g;
                gb.map().array() *= val(a).map().array();
                accumulate(b, gb);
            }
            break;
        }
        case Op::Scale: {
            Tensor ga = g;
            ga.map() *= n.aux_scalar;
            accumulate(a, ga);
            break;
        }
        case Op::MatMul: {
            if (nodes_[a].needs_grad) {
                Tensor ga(val(a).rows(), val(a).cols());
                ga.map().noalias() = g.map() * val(b).map().transpose();
                accumulate(a, ga);
            }
            if (nodes_[b].needs_grad) {
                Tensor gb(val(b).rows(), val(b).cols());
                gb.map().noalias() = val(a).map().transpose() * g.map();
                accumulate(b, gb);
            }
            break;
        }
        case Op::Transpose: {
            Tensor ga(g.cols(), g.rows());
            ga.map() = g.map().transpose();
            accumulate(a, ga);
            break;
        }
        case Op::Exp: {
            Tensor ga = g;
            ga.map().array() *= n.value.map().array();
            accumulate(a, ga);
            break;
        }
        case Op::Log: {
            Tensor ga = g;
            ga.map().array() /= val(a).map().array();
            accumulate(a, ga);
            break;
        }
        case Op::Relu: {
            Tensor ga = g;
            const Tensor& x = val(a);
            for (std::size_t i = 0; i < ga.data.size(); ++i)
                if (x.data[i] <= 0.0) ga.data[i] = 0.0;
            accumulate(a, ga);
            break;
        }
        case Op::RowSoftmax: {
            // ds = s .* (g - rowsum(g .* s))
            const Tensor& s = n.value;
            Tensor ga(s.rows(), s.cols());
            for (int i = 0; i < s.rows(); ++i) {
                double dot = 0.0;
                for (int j = 0; j < s.cols(); ++j) dot += g.at(i, j) * s.at(i, j);
                for (int j = 0; j < s.cols(); ++j) ga.at(i, j) = s.at(i, j) * (g.at(i, j) - dot);
            }
            accumulate(a, ga);
            break;
        }
        case Op::RowLogSumExp: {
            // d lse_i / d x_ij = softmax(x)_ij
            const Tensor& x = val(a);
            Tensor ga(x.rows(), x.cols());
            for (int i = 0; i < x.rows(); ++i) {
                const double lse = n.value.at(i, 0);
                for (int j = 0; j < x.cols(); ++j) ga.at(i, j) = g.at(i, 0) * std::exp(x.at(i, j) - lse);
            }
            accumulate(a, ga);
            break;
        }
        case Op::ReduceSum: {
            Tensor ga(val(a).rows(), val(a).cols());
            ga.map().setConstant(g.data[0]);
            accumulate(a, ga);
            break;
        }
        case Op::RowSum: {
            Tensor ga(val(a).rows(), val(a).cols());
            ga.map() = g.map().replicate(1, val(a).cols());
            accumulate(a, ga);
            break;
        }
        case Op::ColSum: {
            Tensor ga(val(a).rows(), val(a).cols());
            ga.map() = g.map().replicate(val(a).rows(), 1);
            accumulate(a, ga);
            break;
        }
        case Op::BroadcastRow: {
            Tensor ga(1, g.cols());
            ga.map() = g.map().colwise().sum();
            accumulate(a, ga);
            break;
        }
        case Op::BroadcastCol: {
            Tensor ga(g.rows(), 1);
            ga.map() = g.map().rowwise().sum();
            accumulate(a, ga);
            break;
        }
        case Op::ConcatCols: {
            if (nodes_[a].needs_grad) {
                Tensor ga(val(a).rows(), val(a).cols());
                ga.map() = g.map().leftCols(val(a).cols());
                accumulate(a, ga);
            }
            if (nodes_[b].needs_grad) {
                Tensor gb(val(b).rows(), val(b).cols());
                gb.map() = g.map().rightCols(val(b).cols());
                accumulate(b, gb);
            }
            break;
        }
        case Op::SliceCols: {
            Tensor ga = Tensor::zeros(val(a).rows(), val(a).cols());
            ga.map().middleCols(n.aux0, n.aux1 - n.aux0) = g.map();
            accumulate(a, ga);
            break;
        }
        case Op::Reshape: {
            Tensor ga = g;
            ga.shape = val(a).shape;
            accumulate(a, ga);
            break;
        }
        }
    }

    std::vector<Node> nodes_;
    mutable Tensor zero_cache_;
};

// Central-difference check of analytic gradients. h is relative to the
// coordinate magnitude. Coordinates where one-sided slopes disagree (kinks,
// e.g. relu at 0) are flagged and excluded from pass/fail.
struct GradcheckReport {
    double max_rel_err = 0.0;
    int n_checked = 0;
    int n_kinks = 0;
    bool pass = false;
};

template <typename F>
GradcheckReport gradcheck(F f, std::vector<Tensor> x, const std::vector<Tensor>& analytic, double tol,
                          double h_rel = 1e-5) {
    GradcheckReport rep;
    const double f0 = f(x);
    for (std::size_t t = 0; t < x.size(); ++t) {
        for (std::size_t i = 0; i < x[t].data.size(); ++i) {
            const double orig = x[t].data[i];
            const double h = h_rel * std::max(1.0, std::abs(orig));
            x[t].data[i] = orig + h;
            const double fp = f(x);
            x[t].data[i] = orig - h;
            const double fm = f(x);
            x[t].data[i] = orig;
            const double fd_c = (fp - fm) / (2.0 * h);
            const double fd_p = (fp - f0) / h;
            const double fd_m = (f0 - fm) / h;
            if (std::abs(fd_p - fd_m) > 0.1 * std::max(1.0, std::abs(fd_c))) {
                ++rep.n_kinks;
                continue;
            }
            const double g = analytic[t].data[i];
            const double err = std::abs(g - fd_c) / std::max({1.0, std::abs(g), std::abs(fd_c)});
            rep.max_rel_err = std::max(rep.max_rel_err, err);
            ++rep.n_checked;
        }
    }
    rep.pass = rep.max_rel_err <= tol;
    return rep;
}

} // namespace otgdl
