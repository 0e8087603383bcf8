#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "exai5g/dataset.hpp"
#include "exai5g/errors.hpp"

namespace exai5g {

struct TreeConfig {
    int max_depth = 4;
    std::size_t min_samples_leaf = 40;

    void validate() const {
        if (max_depth < 1) throw ConfigInvalid("tree.max_depth", "must be at least 1");
        if (min_samples_leaf < 1) throw ConfigInvalid("tree.min_samples_leaf", "must be at least 1");
    }
};

/// Internal nodes route x[feature] <= threshold left, otherwise right.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int depth = 0;
    /// Majority training label, ties to the lowest code.
    int cls = 0;
    std::size_t count = 0;
    double gini = 0.0;
    /// Position among leaves in depth-first, left-first order; -1 for internal nodes.
    int leaf_index = -1;

    bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
    /// nodes[0] is the root; preorder, left child first.
    std::vector<TreeNode> nodes;
    std::size_t n_features = 0;
    std::size_t n_classes = 0;

    /// Index of the leaf node `row` lands in.
    int route(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
    int predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const { return nodes[route(row)].cls; }
    std::vector<int> predict(const Eigen::MatrixXd& rows) const;
    /// Node ids of the leaves, ordered by leaf_index.
    std::vector<int> leaves() const;
    int depth() const;

    std::string to_json() const;
    static DecisionTree from_json(const std::string& text);
};

struct SplitChoice {
    std::size_t feature = 0;
    double threshold = 0.0;
    /// Size-weighted mean Gini impurity of the two children.
    double impurity = 0.0;
    std::size_t n_left = 0;
};

double gini(std::span<const std::size_t> class_counts, std::size_t total);

/// Best legal split of the rows in `idx` (both sides >= min_leaf), scanning
/// midpoints between adjacent distinct values. Ties go to the lower feature,
/// then the lower threshold.
std::optional<SplitChoice> best_split(const Eigen::MatrixXd& x, std::span<const int> y, std::size_t n_classes,
                                      std::span<const std::size_t> idx, std::size_t min_leaf);

/// Greedy CART with Gini impurity. Growth stops at max_depth, at a pure node
/// or when no split leaves min_samples_leaf rows on both sides.
DecisionTree fit_tree(const Eigen::MatrixXd& x, std::span<const int> labels, const TreeConfig& cfg,
                      std::size_t n_classes = 9);
DecisionTree fit_tree(const Dataset& train, std::span<const int> pseudolabels, const TreeConfig& cfg);

}  // namespace exai5g
