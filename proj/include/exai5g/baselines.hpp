#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "exai5g/dataset.hpp"
#include "exai5g/tree.hpp"

namespace exai5g {

struct BaselineResult {
    std::string name;
    double val_macro_f1 = 0.0;
    double test_macro_f1 = 0.0;
    double test_accuracy = 0.0;
};

/// CART on the ground-truth labels of the unscaled training split.
BaselineResult tree_baseline(const Dataset& train, const Dataset& val, const Dataset& test, const TreeConfig& cfg);

struct MlpConfig {
    std::vector<int> hidden{256, 128};
    double learning_rate = 1e-3;
    double weight_decay = 1e-2;
    int batch_size = 256;
    int max_epochs = 20;
    int patience = 5;
    std::uint64_t seed = 0;
};

/// Fully connected GELU network trained with the same focal loss and AdamW
/// as the transformer, early-stopped on validation macro-F1. Inputs standardized.
BaselineResult mlp_baseline(const Dataset& train, const Dataset& val, const Dataset& test, const MlpConfig& cfg);

std::string baselines_csv(const std::vector<BaselineResult>& rows);

}  // namespace exai5g
