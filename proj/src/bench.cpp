#include "exai5g/bench.hpp"

#include <chrono>

#include "exai5g/errors.hpp"

namespace exai5g {

LatencyReport latency_bench(const ModelParams<double>& model, const Dataset& test, std::size_t n,
                            std::size_t warmup) {
    if (n == 0 || n > test.rows()) {
        throw SampleTooLarge("latency bench needs 1.." + std::to_string(test.rows()) + " rows, got " +
                             std::to_string(n));
    }
    auto row = [&](std::size_t i) { return Mat<double>(test.records.row(static_cast<Eigen::Index>(i % n))); };
    volatile double sink = 0.0;
    for (std::size_t i = 0; i < warmup; ++i) sink = sink + predict_logits(model, row(i))(0, 0);
    std::vector<double> samples;
    samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Mat<double> x = row(i);
        const auto start = std::chrono::steady_clock::now();
        const Mat<double> logits = predict_logits(model, x);
        const auto stop = std::chrono::steady_clock::now();
        sink = sink + logits(0, 0);
        samples.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
    }
    return summarize_latency(std::move(samples));
}

}  // namespace exai5g
