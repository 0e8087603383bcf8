#include "exai5g/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

namespace exai5g {

namespace {

constexpr double kTieTolerance = 1e-12;

int majority(std::span<const std::size_t> counts) {
    return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

// Sum over classes of c^2 / n, so that n * gini = n - sum_sq_over_n.
double sum_sq_over_n(const std::vector<std::size_t>& counts, std::size_t n) {
    if (n == 0) return 0.0;
    double s = 0.0;
    for (std::size_t c : counts) s += double(c) * double(c);
    return s / double(n);
}

struct Builder {
    const Eigen::MatrixXd& x;
    std::span<const int> y;
    const TreeConfig& cfg;
    std::size_t n_classes;
    DecisionTree tree;
    int next_leaf = 0;

    int grow(std::vector<std::size_t> idx, int depth) {
        std::vector<std::size_t> counts(n_classes, 0);
        for (std::size_t i : idx) ++counts[static_cast<std::size_t>(y[i])];
        const int id = static_cast<int>(tree.nodes.size());
        TreeNode node;
        node.depth = depth;
        node.count = idx.size();
        node.cls = majority(counts);
        node.gini = gini(counts, idx.size());
        tree.nodes.push_back(node);

        const bool pure = counts[static_cast<std::size_t>(node.cls)] == idx.size();
        std::optional<SplitChoice> split;
        if (depth < cfg.max_depth && !pure && idx.size() >= 2 * cfg.min_samples_leaf) {
            split = best_split(x, y, n_classes, idx, cfg.min_samples_leaf);
        }
        if (!split) {
            tree.nodes[static_cast<std::size_t>(id)].leaf_index = next_leaf++;
            return id;
        }
        std::vector<std::size_t> left, right;
        left.reserve(split->n_left);
        right.reserve(idx.size() - split->n_left);
        const auto f = static_cast<Eigen::Index>(split->feature);
        for (std::size_t i : idx) {
            (x(static_cast<Eigen::Index>(i), f) <= split->threshold ? left : right).push_back(i);
        }
        idx.clear();
        idx.shrink_to_fit();
        tree.nodes[static_cast<std::size_t>(id)].feature = static_cast<int>(split->feature);
        tree.nodes[static_cast<std::size_t>(id)].threshold = split->threshold;
        const int l = grow(std::move(left), depth + 1);
        const int r = grow(std::move(right), depth + 1);
        tree.nodes[static_cast<std::size_t>(id)].left = l;
        tree.nodes[static_cast<std::size_t>(id)].right = r;
        return id;
    }
};

}  // namespace

double gini(std::span<const std::size_t> class_counts, std::size_t total) {
    if (total == 0) return 0.0;
    double g = 1.0;
    for (std::size_t c : class_counts) {
        const double p = double(c) / double(total);
        g -= p * p;
    }
    return g;
}

std::optional<SplitChoice> best_split(const Eigen::MatrixXd& x, std::span<const int> y, std::size_t n_classes,
                                      std::span<const std::size_t> idx, std::size_t min_leaf) {
    const std::size_t n = idx.size();
    if (n < 2 * min_leaf || n < 2) return std::nullopt;
    std::vector<std::size_t> total(n_classes, 0);
    for (std::size_t i : idx) ++total[static_cast<std::size_t>(y[i])];

    std::optional<SplitChoice> best;
    std::vector<std::size_t> order(idx.begin(), idx.end());
    std::vector<std::size_t> left(n_classes), right(n_classes);
    for (Eigen::Index f = 0; f < x.cols(); ++f) {
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double va = x(static_cast<Eigen::Index>(a), f);
            const double vb = x(static_cast<Eigen::Index>(b), f);
            return va < vb || (va == vb && a < b);
        });
        std::fill(left.begin(), left.end(), 0);
        right = total;
        for (std::size_t k = 0; k + 1 < n; ++k) {
            const auto cls = static_cast<std::size_t>(y[order[k]]);
            ++left[cls];
            --right[cls];
            const double v = x(static_cast<Eigen::Index>(order[k]), f);
            const double next = x(static_cast<Eigen::Index>(order[k + 1]), f);
            if (!(v < next)) continue;
            const std::size_t nl = k + 1;
            const std::size_t nr = n - nl;
            if (nl < min_leaf || nr < min_leaf) continue;
            // Weighted child Gini: (nl*g_l + nr*g_r)/n.
            const double impurity = (double(n) - sum_sq_over_n(left, nl) - sum_sq_over_n(right, nr)) / double(n);
            if (!best || impurity < best->impurity - kTieTolerance) {
                double t = 0.5 * (v + next);
                if (!(t < next)) t = v;
                best = SplitChoice{static_cast<std::size_t>(f), t, impurity, nl};
            }
        }
    }
    return best;
}

DecisionTree fit_tree(const Eigen::MatrixXd& x, std::span<const int> labels, const TreeConfig& cfg,
                      std::size_t n_classes) {
    cfg.validate();
    if (x.rows() == 0) throw EmptyTrain("fit_tree: no training rows");
    if (static_cast<std::size_t>(x.rows()) != labels.size()) {
        throw LengthMismatch("fit_tree: " + std::to_string(labels.size()) + " labels for " +
                             std::to_string(x.rows()) + " rows");
    }
    for (int c : labels) {
        if (c < 0 || static_cast<std::size_t>(c) >= n_classes) throw ShapeMismatch("fit_tree: label out of range");
    }
    Builder b{x, labels, cfg, n_classes, {}, 0};
    b.tree.n_features = static_cast<std::size_t>(x.cols());
    b.tree.n_classes = n_classes;
    std::vector<std::size_t> idx(static_cast<std::size_t>(x.rows()));
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    b.grow(std::move(idx), 0);
    return std::move(b.tree);
}

DecisionTree fit_tree(const Dataset& train, std::span<const int> pseudolabels, const TreeConfig& cfg) {
    return fit_tree(train.records, pseudolabels, cfg, kNumClasses);
}

int DecisionTree::route(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
    int id = 0;
    while (!nodes[static_cast<std::size_t>(id)].is_leaf()) {
        const auto& n = nodes[static_cast<std::size_t>(id)];
        id = row(n.feature) <= n.threshold ? n.left : n.right;
    }
    return id;
}

std::vector<int> DecisionTree::predict(const Eigen::MatrixXd& rows) const {
    std::vector<int> out(static_cast<std::size_t>(rows.rows()));
    for (Eigen::Index i = 0; i < rows.rows(); ++i) out[static_cast<std::size_t>(i)] = predict_row(rows.row(i));
    return out;
}

std::vector<int> DecisionTree::leaves() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].is_leaf()) out.push_back(static_cast<int>(i));
    }
    std::sort(out.begin(), out.end(), [&](int a, int b) {
        return nodes[static_cast<std::size_t>(a)].leaf_index < nodes[static_cast<std::size_t>(b)].leaf_index;
    });
    return out;
}

int DecisionTree::depth() const {
    int d = 0;
    for (const auto& n : nodes) d = std::max(d, n.depth);
    return d;
}

std::string DecisionTree::to_json() const {
    nlohmann::ordered_json j;
    j["format"] = "exai5g-tree";
    j["version"] = 1;
    j["n_features"] = n_features;
    j["n_classes"] = n_classes;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& n : nodes) {
        nlohmann::ordered_json e;
        e["feature"] = n.feature;
        e["threshold"] = n.threshold;
        e["left"] = n.left;
        e["right"] = n.right;
        e["depth"] = n.depth;
        e["class"] = n.cls;
        e["count"] = n.count;
        e["gini"] = n.gini;
        e["leaf_index"] = n.leaf_index;
        arr.push_back(std::move(e));
    }
    j["nodes"] = std::move(arr);
    return j.dump(1);
}

DecisionTree DecisionTree::from_json(const std::string& text) {
    DecisionTree t;
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.at("format") != "exai5g-tree") throw ParseError("not a tree file");
        t.n_features = j.at("n_features").get<std::size_t>();
        t.n_classes = j.at("n_classes").get<std::size_t>();
        for (const auto& e : j.at("nodes")) {
            TreeNode n;
            n.feature = e.at("feature").get<int>();
            n.threshold = e.at("threshold").get<double>();
            n.left = e.at("left").get<int>();
            n.right = e.at("right").get<int>();
            n.depth = e.at("depth").get<int>();
            n.cls = e.at("class").get<int>();
            n.count = e.at("count").get<std::size_t>();
            n.gini = e.at("gini").get<double>();
            n.leaf_index = e.at("leaf_index").get<int>();
            t.nodes.push_back(n);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("tree json: ") + e.what());
    }
    if (t.nodes.empty()) throw ParseError("tree json: no nodes");
    return t;
}

}  // namespace exai5g
