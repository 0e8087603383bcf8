#include "exai5g/attribution.hpp"

#include "json.hpp"

#include "exai5g/schema.hpp"

namespace exai5g {

Eigen::VectorXd ModelTarget::logits(const Eigen::VectorXd& x) const {
    const Mat<double> row = x.transpose();
    return predict_logits(*params_, row).row(0).transpose();
}

Eigen::MatrixXd ModelTarget::input_gradients(const Eigen::MatrixXd& points, int cls) const {
    Eigen::MatrixXd out(points.rows(), points.cols());
    for (Eigen::Index start = 0; start < points.rows(); start += chunk_) {
        const Eigen::Index n = std::min(chunk_, points.rows() - start);
        out.middleRows(start, n) = grad_input_batch(*params_, Mat<double>(points.middleRows(start, n)), cls);
    }
    return out;
}

std::vector<std::size_t> sample_indices(std::size_t rows, std::size_t n, std::uint64_t seed) {
    if (n > rows) {
        throw SampleTooLarge("cannot sample " + std::to_string(n) + " of " + std::to_string(rows) + " rows");
    }
    std::vector<std::size_t> idx(rows);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    // Partial Fisher-Yates: the first n slots end up a uniform sample.
    for (std::size_t i = 0; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, rows - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
    return idx;
}

GlobalImportance rank_features(std::vector<std::size_t> instances, std::vector<AttributionVector> attributions) {
    GlobalImportance g;
    g.instances = std::move(instances);
    g.attributions = std::move(attributions);
    const auto& schema = FeatureSchema::standard();
    const Eigen::Index width = g.attributions.empty() ? Eigen::Index(schema.size()) : g.attributions[0].values.size();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(width);
    for (const auto& a : g.attributions) sum += a.values.cwiseAbs();
    if (!g.attributions.empty()) sum /= double(g.attributions.size());
    for (Eigen::Index f = 0; f < width; ++f) {
        const auto fi = static_cast<std::size_t>(f);
        g.ranking.push_back({fi, fi < schema.size() ? std::string(schema.name(fi)) : std::to_string(fi), sum(f)});
    }
    std::stable_sort(g.ranking.begin(), g.ranking.end(),
                     [](const FeatureImportance& a, const FeatureImportance& b) { return a.mean_abs > b.mean_abs; });
    return g;
}

std::string GlobalImportance::ranking_csv() const {
    std::string out = "rank,feature,mean_abs\n";
    char buf[64];
    for (std::size_t r = 0; r < ranking.size(); ++r) {
        std::snprintf(buf, sizeof buf, "%.9g", ranking[r].mean_abs);
        out += std::to_string(r + 1) + "," + ranking[r].name + "," + buf + "\n";
    }
    return out;
}

std::string attribution_json(const AttributionVector& a, std::size_t record_id, const Eigen::VectorXd& raw,
                             const Eigen::VectorXd& standardized) {
    const auto& schema = FeatureSchema::standard();
    nlohmann::ordered_json j;
    j["record_id"] = record_id;
    j["predicted_class"] = class_name(a.predicted_class);
    j["residual"] = a.completeness_residual;
    j["output_delta"] = a.output_delta;
    nlohmann::ordered_json feats = nlohmann::ordered_json::array();
    for (Eigen::Index f = 0; f < a.values.size(); ++f) {
        feats.push_back({{"name", schema.name(static_cast<std::size_t>(f))},
                         {"value", raw(f)},
                         {"standardized", standardized(f)},
                         {"attribution", a.values(f)}});
    }
    j["features"] = std::move(feats);
    return j.dump();
}

}  // namespace exai5g
