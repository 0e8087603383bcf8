#include "exai5g/train.hpp"

#include <cstdio>

namespace exai5g {

void TrainConfig::validate() const {
    if (batch_size <= 0) throw ConfigInvalid("train.batch_size", "must be positive");
    if (!(learning_rate >= 0.0)) throw ConfigInvalid("train.learning_rate", "must be non-negative");
    if (!(weight_decay >= 0.0)) throw ConfigInvalid("train.weight_decay", "must be non-negative");
    if (max_epochs <= 0) throw ConfigInvalid("train.max_epochs", "must be positive");
    if (patience < 0) throw ConfigInvalid("train.patience", "must be non-negative");
    for (double a : class_weights) {
        if (!(a > 0.0)) throw ConfigInvalid("train.class_weights", "entries must be strictly positive");
    }
}

std::vector<double> inverse_frequency_weights(const Dataset& train, WeightNorm norm) {
    const auto counts = train.class_counts();
    std::vector<double> w(counts.size());
    double sum = 0.0;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        w[c] = 1.0 / double(std::max<std::size_t>(counts[c], 1));
        sum += w[c];
    }
    const double scale = norm == WeightNorm::Mean ? sum / double(w.size()) : *std::min_element(w.begin(), w.end());
    for (double& v : w) v /= scale;
    return w;
}

std::string TrainHistory::to_csv() const {
    std::string out = "epoch,loss,macro_f1\n";
    char buf[96];
    for (const auto& e : epochs) {
        std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g\n", e.epoch, e.loss, e.val_macro_f1);
        out += buf;
    }
    return out;
}

}  // namespace exai5g
