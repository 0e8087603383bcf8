#include <random>

#include "doctest.h"
#include "exai5g/errors.hpp"
#include "exai5g/tree.hpp"
#include "oracles.hpp"

using namespace exai5g;

TEST_SUITE("tree") {
    TEST_CASE("gini of simple count vectors") {
        const std::vector<std::size_t> pure{4, 0, 0};
        const std::vector<std::size_t> even{2, 2, 0};
        CHECK(gini(pure, 4) == 0.0);
        CHECK(gini(even, 4) == doctest::Approx(0.5));
    }

    TEST_CASE("one-class labels give a single leaf") {
        Eigen::MatrixXd x = Eigen::MatrixXd::Random(100, 3);
        const std::vector<int> y(100, 4);
        const auto t = fit_tree(x, y, {4, 5});
        REQUIRE(t.nodes.size() == 1);
        CHECK(t.nodes[0].is_leaf());
        CHECK(t.nodes[0].cls == 4);
    }

    TEST_CASE("50 rows with min leaf 40 cannot split") {
        Eigen::MatrixXd x(50, 1);
        std::vector<int> y;
        for (int i = 0; i < 50; ++i) {
            x(i, 0) = i;
            y.push_back(i < 25 ? 0 : 1);
        }
        const auto t = fit_tree(x, y, {4, 40});
        CHECK(t.nodes.size() == 1);
    }

    TEST_CASE("separable 1-D data splits at the straddling midpoint") {
        Eigen::MatrixXd x(6, 1);
        x << 0.1, 0.2, 0.4, 0.6, 0.7, 0.9;
        const std::vector<int> y{0, 0, 0, 1, 1, 1};
        const auto t = fit_tree(x, y, {3, 1});
        REQUIRE(t.nodes.size() == 3);
        CHECK(t.nodes[0].feature == 0);
        CHECK(t.nodes[0].threshold == doctest::Approx(0.5));
        CHECK(t.nodes[t.nodes[0].left].gini == 0.0);
        CHECK(t.nodes[t.nodes[0].right].gini == 0.0);
        CHECK(t.nodes[t.nodes[0].left].cls == 0);
        CHECK(t.nodes[t.nodes[0].right].cls == 1);
        CHECK(oracle::best_split_gini(x, y, 2, 1) == 0.0);
    }

    TEST_CASE("root split matches the exhaustive Gini optimum") {
        std::mt19937_64 rng(42);
        for (int trial = 0; trial < 30; ++trial) {
            const int rows = 20 + int(rng() % 181);
            const int feats = 1 + int(rng() % 3);
            const int classes = 2 + int(rng() % 3);
            Eigen::MatrixXd x(rows, feats);
            std::vector<int> y;
            for (int i = 0; i < rows; ++i) {
                for (int f = 0; f < feats; ++f) x(i, f) = double(rng() % 15);
                y.push_back(int(rng() % std::uint64_t(classes)));
            }
            const std::size_t min_leaf = 1 + rng() % 10;
            std::vector<std::size_t> idx(static_cast<std::size_t>(rows));
            for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
            const auto split = best_split(x, y, std::size_t(classes), idx, min_leaf);
            const double expect = oracle::best_split_gini(x, y, classes, min_leaf);
            if (std::isinf(expect)) {
                CHECK(!split);
            } else {
                REQUIRE(split);
                CHECK(split->impurity == doctest::Approx(expect).epsilon(1e-12));
            }
        }
    }

    TEST_CASE("ties go to the lower feature") {
        Eigen::MatrixXd x(4, 2);
        x << 0, 0, 0, 0, 1, 1, 1, 1;
        const std::vector<int> y{0, 0, 1, 1};
        std::vector<std::size_t> idx{0, 1, 2, 3};
        const auto s = best_split(x, y, 2, idx, 1);
        REQUIRE(s);
        CHECK(s->feature == 0);
    }

    TEST_CASE("depth limit, leaf order and JSON round trip") {
        std::mt19937_64 rng(7);
        Eigen::MatrixXd x(400, 3);
        std::vector<int> y;
        for (int i = 0; i < 400; ++i) {
            for (int f = 0; f < 3; ++f) x(i, f) = double(rng() % 1000) / 10.0;
            y.push_back((x(i, 0) > 50) + 2 * (x(i, 1) > 30));
        }
        const auto t = fit_tree(x, y, {2, 5});
        CHECK(t.depth() <= 2);
        const auto leaves = t.leaves();
        for (std::size_t i = 0; i < leaves.size(); ++i) CHECK(t.nodes[std::size_t(leaves[i])].leaf_index == int(i));
        for (std::size_t i = 1; i < leaves.size(); ++i) CHECK(leaves[i] > leaves[i - 1]);
        const auto back = DecisionTree::from_json(t.to_json());
        CHECK(back.to_json() == t.to_json());
        CHECK(back.predict(x) == t.predict(x));
        std::size_t correct = 0;
        const auto p = t.predict(x);
        for (std::size_t i = 0; i < y.size(); ++i) correct += p[i] == y[i];
        CHECK(correct == y.size());
    }

    TEST_CASE("bad inputs are rejected") {
        Eigen::MatrixXd x(3, 1);
        x << 1, 2, 3;
        CHECK_THROWS_AS(fit_tree(x, std::vector<int>{0, 1}, {}), LengthMismatch);
        CHECK_THROWS_AS(fit_tree(Eigen::MatrixXd(0, 1), std::vector<int>{}, {}), EmptyTrain);
    }
}
