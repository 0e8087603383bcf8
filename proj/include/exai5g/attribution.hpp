#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "exai5g/dataset.hpp"
#include "exai5g/errors.hpp"
#include "exai5g/model.hpp"

namespace exai5g {

/// Anything with class scores and their input gradients at a batch of points.
template <typename T>
concept AttributionTarget = requires(const T& t, const Eigen::VectorXd& x, const Eigen::MatrixXd& pts, int c) {
    { t.logits(x) } -> std::convertible_to<Eigen::VectorXd>;
    { t.input_gradients(pts, c) } -> std::convertible_to<Eigen::MatrixXd>;
};

/// Frozen transformer as an attribution target; gradients in bounded chunks.
class ModelTarget {
public:
    explicit ModelTarget(const ModelParams<double>& params, Eigen::Index chunk = 256)
        : params_(&params), chunk_(chunk) {}

    Eigen::VectorXd logits(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd input_gradients(const Eigen::MatrixXd& points, int cls) const;

private:
    const ModelParams<double>* params_;
    Eigen::Index chunk_;
};

/// logits = W^T x + b, with W of shape features x classes.
struct LinearHead {
    Eigen::MatrixXd weight;
    Eigen::VectorXd bias;

    Eigen::VectorXd logits(const Eigen::VectorXd& x) const { return weight.transpose() * x + bias; }
    Eigen::MatrixXd input_gradients(const Eigen::MatrixXd& points, int cls) const {
        return weight.col(cls).transpose().replicate(points.rows(), 1);
    }
};

struct AttributionConfig {
    int steps = 50;
    /// Empty means the all-zeros baseline.
    Eigen::VectorXd baseline;
    std::size_t sample_size = 100;
    std::uint64_t seed = 0;

    void validate() const {
        if (steps < 1) throw ConfigInvalid("attribution.steps", "must be at least 1");
        if (sample_size < 1) throw ConfigInvalid("attribution.sample_size", "must be at least 1");
    }
};

struct AttributionVector {
    Eigen::VectorXd values;
    int predicted_class = 0;
    /// |sum(values) - (F(x) - F(baseline))|
    double completeness_residual = 0.0;
    /// F(x) - F(baseline) for the predicted class logit.
    double output_delta = 0.0;
};

/// Integrated Gradients of the predicted-class logit, midpoint Riemann rule:
/// IG_i = (x_i - b_i) * mean_k dF/dx_i at b + ((k - 0.5) / m) (x - b).
template <AttributionTarget Target>
AttributionVector integrated_gradients(const Target& target, const Eigen::VectorXd& x, const AttributionConfig& cfg) {
    cfg.validate();
    const Eigen::VectorXd baseline = cfg.baseline.size() ? cfg.baseline : Eigen::VectorXd::Zero(x.size());
    if (baseline.size() != x.size()) throw ShapeMismatch("integrated_gradients: baseline width");
    const Eigen::VectorXd at_x = target.logits(x);
    Eigen::Index cls = 0;
    for (Eigen::Index c = 1; c < at_x.size(); ++c) {
        if (at_x(c) > at_x(cls)) cls = c;
    }
    const Eigen::VectorXd diff = x - baseline;
    Eigen::MatrixXd points(cfg.steps, x.size());
    for (int k = 0; k < cfg.steps; ++k) {
        const double alpha = (double(k) + 0.5) / double(cfg.steps);
        points.row(k) = (baseline + alpha * diff).transpose();
    }
    const Eigen::MatrixXd grads = target.input_gradients(points, static_cast<int>(cls));
    AttributionVector out;
    out.predicted_class = static_cast<int>(cls);
    out.values = diff.cwiseProduct(grads.colwise().mean().transpose());
    out.output_delta = at_x(cls) - target.logits(baseline)(cls);
    out.completeness_residual = std::abs(out.values.sum() - out.output_delta);
    return out;
}

struct FeatureImportance {
    std::size_t feature = 0;
    std::string name;
    double mean_abs = 0.0;
};

struct GlobalImportance {
    /// Descending by mean |IG|; ties by ascending feature index.
    std::vector<FeatureImportance> ranking;
    std::vector<std::size_t> instances;
    std::vector<AttributionVector> attributions;

    /// rank,feature,mean_abs
    std::string ranking_csv() const;
};

/// Seeded uniform sample of `n` distinct row indices, ascending.
std::vector<std::size_t> sample_indices(std::size_t rows, std::size_t n, std::uint64_t seed);

GlobalImportance rank_features(std::vector<std::size_t> instances, std::vector<AttributionVector> attributions);

/// Mean absolute IG over a seeded sample of rows, each attributed to its own
/// predicted class.
template <AttributionTarget Target>
GlobalImportance global_importance(const Target& target, const Dataset& test, const AttributionConfig& cfg) {
    cfg.validate();
    if (test.rows() < cfg.sample_size) {
        throw SampleTooSmall("global_importance needs " + std::to_string(cfg.sample_size) + " rows, dataset has " +
                             std::to_string(test.rows()));
    }
    auto idx = sample_indices(test.rows(), cfg.sample_size, cfg.seed);
    std::vector<AttributionVector> attrs;
    attrs.reserve(idx.size());
    for (std::size_t i : idx) {
        attrs.push_back(integrated_gradients(target, test.records.row(static_cast<Eigen::Index>(i)).transpose(), cfg));
    }
    return rank_features(std::move(idx), std::move(attrs));
}

/// {features: [{name, value, standardized, attribution}], predicted_class, residual}
std::string attribution_json(const AttributionVector& a, std::size_t record_id, const Eigen::VectorXd& raw,
                             const Eigen::VectorXd& standardized);

}  // namespace exai5g
