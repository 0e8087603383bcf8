#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "exai5g/dataset.hpp"
#include "exai5g/errors.hpp"
#include "exai5g/metrics.hpp"
#include "exai5g/model.hpp"
#include "exai5g/optim.hpp"

namespace exai5g {

/// How default inverse-frequency weights are rescaled.
enum class WeightNorm { Mean, Min };

struct TrainConfig {
    int batch_size = 256;
    double learning_rate = 1e-4;
    double weight_decay = 1e-2;
    /// Focal-loss class weights; empty means inverse class frequency of the
    /// training split normalized to mean 1.
    std::vector<double> class_weights;
    /// Mean: average weight 1. Min: the most frequent class gets weight 1.
    WeightNorm weight_norm = WeightNorm::Min;
    int max_epochs = 30;
    int patience = 5;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    double loss = 0.0;
    double val_macro_f1 = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    int best_epoch = 0;
    double best_macro_f1 = -1.0;
    bool stopped_early = false;
    std::vector<double> class_weights;

    /// epoch,loss,macro_f1
    std::string to_csv() const;
};

template <typename Scalar>
struct TrainResult {
    ModelParams<Scalar> params;
    TrainHistory history;
};

/// 1 / n_c rescaled to mean 1 or to a minimum of 1; absent classes count as one sample.
std::vector<double> inverse_frequency_weights(const Dataset& train, WeightNorm norm = WeightNorm::Mean);

template <typename To, typename From>
ModelParams<To> cast_params(const ModelParams<From>& src) {
    ModelParams<To> out = init_params<To>(src.config, 0);
    std::vector<const Mat<From>*> from;
    src.visit([&](const std::string&, const Mat<From>& m) { from.push_back(&m); });
    std::size_t i = 0;
    out.visit([&](const std::string&, Mat<To>& m) { m = from[i++]->template cast<To>(); });
    return out;
}

/// Predicted class per row of a (standardized) dataset.
template <typename Scalar>
std::vector<int> predict(const ModelParams<Scalar>& params, const Eigen::MatrixXd& rows) {
    return argmax_rows(predict_logits_chunked(params, Mat<Scalar>(rows.cast<Scalar>())));
}

/// Mini-batch AdamW on the focal loss with early stopping on validation
/// macro-F1. The returned parameters are those of the best epoch.
template <typename Scalar>
TrainResult<Scalar> train(ModelParams<Scalar> model, const TrainConfig& cfg, const Dataset& train_set,
                          const Dataset& val_set,
                          const std::function<void(const EpochRecord&)>& on_epoch = {}) {
    cfg.validate();
    if (train_set.rows() == 0) throw EmptyTrain("training split is empty");
    TrainResult<Scalar> result;
    auto& hist = result.history;
    hist.class_weights = cfg.class_weights.empty() ? inverse_frequency_weights(train_set, cfg.weight_norm) : cfg.class_weights;
    if (hist.class_weights.size() != static_cast<std::size_t>(model.config.n_classes)) {
        throw ConfigInvalid("train.class_weights", "needs one weight per class");
    }
    const std::vector<Scalar> alpha(hist.class_weights.begin(), hist.class_weights.end());

    AdamW<Scalar> opt(AdamWConfig{cfg.learning_rate, cfg.weight_decay, cfg.beta1, cfg.beta2, cfg.eps});
    std::vector<Mat<Scalar>*> slots;
    model.visit([&](const std::string&, Mat<Scalar>& m) { slots.push_back(&m); });

    const Mat<Scalar> xs = train_set.records.cast<Scalar>();
    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(train_set.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    result.params = model;
    int since_best = 0;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        int batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += std::size_t(cfg.batch_size), ++batch_index) {
            const std::size_t n = std::min<std::size_t>(std::size_t(cfg.batch_size), order.size() - start);
            Mat<Scalar> xb(static_cast<Eigen::Index>(n), xs.cols());
            std::vector<int> yb(n);
            for (std::size_t i = 0; i < n; ++i) {
                xb.row(static_cast<Eigen::Index>(i)) = xs.row(static_cast<Eigen::Index>(order[start + i]));
                yb[i] = train_set.labels[order[start + i]];
            }
            Tape<Scalar> tape;
            const auto w = bind(tape, model, true);
            const Var x = tape.leaf(std::move(xb));
            const Var logits = forward(tape, model.config, w, x);
            const Var loss = focal_loss<Scalar>(tape, logits, yb, alpha);
            const double lv = double(tape.value(loss)(0, 0));
            if (!std::isfinite(lv)) throw NonFiniteLoss(epoch, batch_index);
            tape.backward(loss);
            std::vector<const Mat<Scalar>*> grads;
            auto wv = w;
            wv.visit([&](const std::string&, Var& v) { grads.push_back(&tape.grad(v)); });
            opt.step(slots, grads);
            loss_sum += lv * double(n);
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.loss = loss_sum / double(order.size());
        rec.val_macro_f1 = val_set.rows() ? macro_f1(val_set.labels, predict(model, val_set.records)) : 0.0;
        hist.epochs.push_back(rec);
        if (on_epoch) on_epoch(rec);
        if (rec.val_macro_f1 > hist.best_macro_f1) {
            hist.best_macro_f1 = rec.val_macro_f1;
            hist.best_epoch = epoch;
            result.params = model;
            since_best = 0;
        } else if (++since_best > cfg.patience) {
            hist.stopped_early = true;
            break;
        }
    }
    return result;
}

}  // namespace exai5g
