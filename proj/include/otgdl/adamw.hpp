#pragma once

#include <vector>

#include "otgdl/tensor.hpp"

namespace otgdl {

// AdamW: adaptive moments with decoupled weight decay
//   p <- p - lr * mhat / (sqrt(vhat) + eps) - lr * wd * p
class AdamW {
public:
    AdamW(double lr, double weight_decay, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), wd_(weight_decay), b1_(beta1), b2_(beta2), eps_(eps) {}

    void step(std::vector<Tensor*> params, const std::vector<Tensor>& grads) {
        require(params.size() == grads.size(), "ShapeMismatch", "param/grad count mismatch");
        if (m_.empty()) {
            for (const auto* p : params) {
                m_.push_back(Tensor::zeros(p->rows(), p->cols()));
                v_.push_back(Tensor::zeros(p->rows(), p->cols()));
            }
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(b1_, t_);
        const double bc2 = 1.0 - std::pow(b2_, t_);
        for (std::size_t k = 0; k < params.size(); ++k) {
            Tensor& p = *params[k];
            const Tensor& g = grads[k];
            require(p.same_shape(g), "ShapeMismatch", "param/grad shapes differ");
            for (std::size_t i = 0; i < p.data.size(); ++i) {
                const double gi = g.data[i];
                require(std::isfinite(gi), "NonFiniteEntry", "non-finite gradient in optimizer");
                m_[k].data[i] = b1_ * m_[k].data[i] + (1.0 - b1_) * gi;
                v_[k].data[i] = b2_ * v_[k].data[i] + (1.0 - b2_) * gi * gi;
                const double mhat = m_[k].data[i] / bc1;
                const double vhat = v_[k].data[i] / bc2;
                p.data[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_) + lr_ * wd_ * p.data[i];
            }
        }
    }

    long step_count() const { return t_; }

private:
    double lr_, wd_, b1_, b2_, eps_;
    long t_ = 0;
    std::vector<Tensor> m_, v_;
};

} // namespace otgdl
