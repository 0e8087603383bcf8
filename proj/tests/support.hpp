#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "exai5g/model.hpp"

namespace testing {

/// Model with every weight drawn from N(0, scale^2), LayerNorm gains near 1.
inline exai5g::ModelParams<double> random_params(const exai5g::ModelConfig& cfg, std::uint64_t seed,
                                                 double scale = 0.5) {
    auto p = exai5g::init_params<double>(cfg, seed);
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> n(0.0, scale);
    p.visit([&](const std::string& name, exai5g::Mat<double>& m) {
        const bool gain = name.find("gain") != std::string::npos;
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = (gain ? 1.0 : 0.0) + n(rng);
    });
    return p;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("exai5g_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testing
