#pragma once

#include <cstddef>

#include "exai5g/dataset.hpp"
#include "exai5g/metrics.hpp"
#include "exai5g/model.hpp"

namespace exai5g {

/// Times single-flow forward passes over the first `n` rows of a standardized
/// dataset after `warmup` untimed calls. Single-threaded, monotonic clock.
LatencyReport latency_bench(const ModelParams<double>& model, const Dataset& test, std::size_t n = 200,
                            std::size_t warmup = 20);

}  // namespace exai5g
