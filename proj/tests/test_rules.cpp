#include <random>

#include "doctest.h"
#include "exai5g/errors.hpp"
#include "exai5g/rules.hpp"

using namespace exai5g;

namespace {

// f0 <= 0.5 -> class 0; else f1 <= 2 -> class 4; else class 2.
DecisionTree hand_tree() {
    DecisionTree t;
    t.n_features = 2;
    t.n_classes = 9;
    TreeNode root;
    root.feature = 0;
    root.threshold = 0.5;
    root.left = 1;
    root.right = 2;
    TreeNode a;
    a.cls = 0;
    a.depth = 1;
    a.leaf_index = 0;
    TreeNode inner;
    inner.feature = 1;
    inner.threshold = 2.0;
    inner.left = 3;
    inner.right = 4;
    inner.depth = 1;
    TreeNode b;
    b.cls = 4;
    b.depth = 2;
    b.leaf_index = 1;
    TreeNode c;
    c.cls = 2;
    c.depth = 2;
    c.leaf_index = 2;
    t.nodes = {root, a, inner, b, c};
    return t;
}

RuleClause with_support(int leaf, std::vector<std::size_t> support, int cls = 0) {
    RuleClause r;
    r.leaf_index = leaf;
    r.support = std::move(support);
    r.predicted_class = cls;
    return r;
}

}  // namespace

TEST_SUITE("rules") {
    TEST_CASE("clauses render root-to-leaf conditions") {
        const auto clauses = clauses_of(hand_tree());
        REQUIRE(clauses.size() == 3);
        CHECK(clauses[0].render() == "class(Benign) :- http.request.uri <= 0.5000");
        CHECK(clauses[1].render() == "class(DoS_MQTT) :- http.request.uri > 0.5000, http.request <= 2.0000");
        CHECK(clauses[2].render() == "class(DDoS) :- http.request.uri > 0.5000, http.request > 2.0000");
        DecisionTree leaf;
        leaf.nodes.resize(1);
        leaf.nodes[0].leaf_index = 0;
        CHECK(clauses_of(leaf)[0].render() == "class(Benign) :- true");
    }

    TEST_CASE("12-row hand case: supports, coverage, fidelity") {
        Eigen::MatrixXd x(12, 2);
        x << 0, 0, 0.2, 5, 0.5, 1, 1, 0, 1, 2, 3, 1.5, 2, 3, 9, 2.5, 0.4, 9, 0.6, 2.0001, 7, -1, 0.51, 1;
        // Routing by hand: rows 0,1,2,8 -> leaf 0; rows 3,4,5,10,11 -> leaf 1; rows 6,7,9 -> leaf 2.
        const std::vector<int> model{0, 0, 4, 4, 4, 2, 2, 2, 0, 4, 4, 4};
        const auto rs = extract_rules(hand_tree(), x, model);
        REQUIRE(rs.clauses.size() == 3);
        CHECK(rs.clauses[0].support == std::vector<std::size_t>{0, 1, 2, 8});
        CHECK(rs.clauses[1].support == std::vector<std::size_t>{3, 4, 5, 10, 11});
        CHECK(rs.clauses[2].support == std::vector<std::size_t>{6, 7, 9});
        // Agreements: leaf 0 rows 0,1,8 (3); leaf 1 rows 3,4,10,11 (4); leaf 2 rows 6,7 (2).
        CHECK(rs.metrics.fidelity == doctest::Approx(9.0 / 12.0).epsilon(1e-15));
        CHECK(rs.metrics.coverage == 1.0);
        CHECK(rs.metrics.redundancy == 0.0);
        CHECK(rs.metrics.n_rules == 3);
        CHECK(rs.metrics.n_nonzero_support == 3);
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            int matched = 0;
            for (const auto& c : rs.clauses) matched += c.matches(x.row(i));
            CHECK(matched == 1);
        }
    }

    TEST_CASE("jaccard of overlapping and empty supports") {
        CHECK(jaccard({1, 2, 3}, {2, 3, 4}) == doctest::Approx(0.5));
        CHECK(jaccard({}, {}) == 0.0);
        CHECK(jaccard({1}, {2}) == 0.0);
        const std::vector<RuleClause> overlapping{with_support(0, {0, 1, 2}), with_support(1, {1, 2, 3})};
        CHECK(rule_metrics(overlapping, {0, 0, 0, 0}, 4).redundancy == doctest::Approx(0.5));
    }

    TEST_CASE("pruning curve is a non-decreasing prefix union") {
        const std::vector<RuleClause> rules{with_support(0, {0}, 0), with_support(1, {1, 2, 3}, 1),
                                            with_support(2, {4, 5}, 1), with_support(3, {6, 7, 8, 9}, 0)};
        const std::vector<int> model{0, 1, 1, 0, 1, 1, 0, 0, 0, 0};
        const auto curve = pruning_curve(rules, model, 10);
        REQUIRE(curve.size() == 4);
        CHECK(curve[0].coverage == doctest::Approx(0.4));
        CHECK(curve[1].coverage == doctest::Approx(0.7));
        for (std::size_t k = 1; k < curve.size(); ++k) CHECK(curve[k].coverage >= curve[k - 1].coverage);
        CHECK(curve.back().coverage == 1.0);
        CHECK(curve.back().fidelity == doctest::Approx(rule_metrics(rules, model, 10).fidelity));
        CHECK(pruning_curve_csv(curve).rfind("k,coverage,fidelity\n1,0.400000,1.000000\n", 0) == 0);
    }

    TEST_CASE("pruning drops the least-supported rule") {
        std::vector<RuleClause> rules{with_support(0, std::vector<std::size_t>(100)),
                                      with_support(1, std::vector<std::size_t>(5)),
                                      with_support(2, std::vector<std::size_t>(200))};
        for (std::size_t i = 0; i < 100; ++i) rules[0].support[i] = i;
        for (std::size_t i = 0; i < 5; ++i) rules[1].support[i] = 100 + i;
        for (std::size_t i = 0; i < 200; ++i) rules[2].support[i] = 105 + i;
        const std::vector<int> model(305, 0);
        const auto kept = prune_least_supported(rules);
        REQUIRE(kept.size() == 2);
        CHECK(kept[0].leaf_index == 0);
        CHECK(kept[1].leaf_index == 2);
        const double before = rule_metrics(rules, model, 305).coverage;
        const double after = rule_metrics(kept, model, 305).coverage;
        CHECK(before - after == doctest::Approx(5.0 / 305.0));

        std::vector<RuleClause> sixteen;
        for (int i = 0; i < 16; ++i) sixteen.push_back(with_support(i, {std::size_t(i)}));
        const auto fifteen = prune_least_supported(sixteen);
        CHECK(fifteen.size() == 15);
        CHECK(fifteen.back().leaf_index == 14);
        CHECK_THROWS_AS(prune_least_supported({with_support(0, {0})}), TooFewRules);
    }

    TEST_CASE("fitted trees partition random data") {
        std::mt19937_64 rng(3);
        Eigen::MatrixXd x(500, 3);
        std::vector<int> y;
        for (int i = 0; i < 500; ++i) {
            for (int f = 0; f < 3; ++f) x(i, f) = double(rng() % 100);
            y.push_back(int(rng() % 3));
        }
        const auto tree = fit_tree(x, y, {4, 10});
        const auto pred = tree.predict(x);
        const auto rs = extract_rules(tree, x, pred);
        CHECK(rs.metrics.coverage == 1.0);
        CHECK(rs.metrics.redundancy == 0.0);
        CHECK(rs.metrics.fidelity == 1.0);
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            const int leaf = tree.nodes[std::size_t(tree.route(x.row(i)))].leaf_index;
            for (const auto& c : rs.clauses) CHECK(c.matches(x.row(i)) == (c.leaf_index == leaf));
        }
    }
}
