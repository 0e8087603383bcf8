#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "exai5g/schema.hpp"
#include "exai5g/tree.hpp"

namespace exai5g {

struct Condition {
    std::size_t feature = 0;
    std::string name;
    RuleOp op = RuleOp::LessEqual;
    double threshold = 0.0;

    bool holds(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
        const double v = row(static_cast<Eigen::Index>(feature));
        return op == RuleOp::Greater ? v > threshold : v <= threshold;
    }
};

/// One root-to-leaf path of a fitted tree.
struct RuleClause {
    int leaf_index = 0;
    int node = 0;
    std::vector<Condition> conditions;
    int predicted_class = 0;
    /// Test rows routed to this leaf, ascending.
    std::vector<std::size_t> support;

    bool matches(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
    /// `class(C) :- f <= t, g > u` with thresholds to four decimals.
    std::string render() const;
};

struct RuleSetMetrics {
    double coverage = 0.0;
    double fidelity = 0.0;
    double redundancy = 0.0;
    std::size_t n_rules = 0;
    std::size_t n_nonzero_support = 0;
};

struct RuleSet {
    std::vector<RuleClause> clauses;
    RuleSetMetrics metrics;

    /// {rules: [{class, conditions: [{feature, op, threshold}], support_size}], metrics}
    std::string to_json() const;
    std::string to_text() const;
};

struct PruningPoint {
    std::size_t k = 0;
    double coverage = 0.0;
    double fidelity = 0.0;
};

std::vector<RuleClause> clauses_of(const DecisionTree& tree);

/// One clause per leaf with test supports; fidelity is measured against
/// `model_preds`, the transformer's predictions on the same rows.
RuleSet extract_rules(const DecisionTree& tree, const Eigen::MatrixXd& test, const std::vector<int>& model_preds);

/// Coverage, fidelity and mean pairwise Jaccard redundancy over the supports.
RuleSetMetrics rule_metrics(const std::vector<RuleClause>& rules, const std::vector<int>& model_preds,
                            std::size_t n_test);

double jaccard(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b);

/// Coverage and fidelity of each prefix of the rules in descending support order.
std::vector<PruningPoint> pruning_curve(const std::vector<RuleClause>& rules, const std::vector<int>& model_preds,
                                        std::size_t n_test);
std::string pruning_curve_csv(const std::vector<PruningPoint>& curve);

/// Drops the rule with the smallest support; on ties the higher leaf index goes.
std::vector<RuleClause> prune_least_supported(const std::vector<RuleClause>& rules);

}  // namespace exai5g
