#pragma once

#include <cmath>
#include <vector>

#include "exai5g/autodiff.hpp"

namespace exai5g {

struct AdamWConfig {
    double learning_rate = 1e-4;
    double weight_decay = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with decoupled weight decay. Each step first shrinks the weights by
/// (1 - lr * weight_decay), then applies the bias-corrected Adam update; the
/// decay never enters the moment estimates.
template <typename Scalar>
class AdamW {
public:
    explicit AdamW(AdamWConfig cfg) : cfg_(cfg) {}

    /// `params[i]` is updated with `grads[i]`; an empty gradient counts as zero.
    void step(const std::vector<Mat<Scalar>*>& params, const std::vector<const Mat<Scalar>*>& grads) {
        if (m_.empty()) {
            for (const auto* p : params) {
                m_.push_back(Mat<Scalar>::Zero(p->rows(), p->cols()));
                v_.push_back(Mat<Scalar>::Zero(p->rows(), p->cols()));
            }
        }
        ++t_;
        const Scalar lr = Scalar(cfg_.learning_rate);
        const Scalar b1 = Scalar(cfg_.beta1);
        const Scalar b2 = Scalar(cfg_.beta2);
        const Scalar c1 = Scalar(1) - Scalar(std::pow(cfg_.beta1, double(t_)));
        const Scalar c2 = Scalar(1) - Scalar(std::pow(cfg_.beta2, double(t_)));
        const Scalar shrink = Scalar(1) - lr * Scalar(cfg_.weight_decay);
        for (std::size_t i = 0; i < params.size(); ++i) {
            Mat<Scalar>& p = *params[i];
            p *= shrink;
            if (grads[i] == nullptr || grads[i]->size() == 0) {
                m_[i] *= b1;
                v_[i] *= b2;
            } else {
                const Mat<Scalar>& g = *grads[i];
                m_[i] = b1 * m_[i] + (Scalar(1) - b1) * g;
                v_[i] = b2 * v_[i] + (Scalar(1) - b2) * g.cwiseAbs2();
            }
            p.array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + Scalar(cfg_.eps));
        }
    }

    long long steps() const { return t_; }

private:
    AdamWConfig cfg_;
    std::vector<Mat<Scalar>> m_;
    std::vector<Mat<Scalar>> v_;
    long long t_ = 0;
};

}  // namespace exai5g
