#include <random>
#include <set>

#include "doctest.h"
#include "exai5g/attribution.hpp"
#include "exai5g/errors.hpp"
#include "support.hpp"

using namespace exai5g;

namespace {

LinearHead random_head(int features, int classes, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    LinearHead h{Eigen::MatrixXd(features, classes), Eigen::VectorXd(classes)};
    for (Eigen::Index i = 0; i < h.weight.size(); ++i) h.weight.data()[i] = n(rng);
    for (Eigen::Index i = 0; i < h.bias.size(); ++i) h.bias(i) = n(rng);
    return h;
}

}  // namespace

TEST_SUITE("attribution") {
    TEST_CASE("linear model with w=(1,2), x=(3,4) gives IG=(3,8)") {
        LinearHead h{Eigen::MatrixXd(2, 1), Eigen::VectorXd::Zero(1)};
        h.weight << 1, 2;
        const Eigen::Vector2d x(3, 4);
        for (int m : {1, 7, 100}) {
            AttributionConfig cfg;
            cfg.steps = m;
            const auto a = integrated_gradients(h, x, cfg);
            CHECK(a.values(0) == doctest::Approx(3.0).epsilon(1e-12));
            CHECK(a.values(1) == doctest::Approx(8.0).epsilon(1e-12));
            CHECK(a.completeness_residual < 1e-12);
        }
    }

    TEST_CASE("random linear heads give w times x for the predicted class") {
        for (std::uint64_t s = 0; s < 10; ++s) {
            const auto h = random_head(6, 4, s);
            std::mt19937_64 rng(s + 100);
            std::normal_distribution<double> n;
            Eigen::VectorXd x(6);
            for (Eigen::Index i = 0; i < 6; ++i) x(i) = n(rng);
            for (int m : {1, 100}) {
                AttributionConfig cfg;
                cfg.steps = m;
                const auto a = integrated_gradients(h, x, cfg);
                Eigen::Index c = 0;
                h.logits(x).maxCoeff(&c);
                CHECK(a.predicted_class == c);
                CHECK((a.values - h.weight.col(c).cwiseProduct(x)).cwiseAbs().maxCoeff() < 1e-9);
            }
        }
    }

    TEST_CASE("input equal to the baseline gives zero attributions") {
        const auto p = testing::random_params(ModelConfig{8, 1, 2, 16, 4, 9}, 3);
        const ModelTarget target(p);
        AttributionConfig cfg;
        cfg.baseline = Eigen::Vector4d(0.5, -1.0, 2.0, 0.0);
        const auto a = integrated_gradients(target, cfg.baseline, cfg);
        CHECK(a.values.cwiseAbs().maxCoeff() == 0.0);
    }

    TEST_CASE("IG on a transformer satisfies completeness up to quadrature error") {
        const auto p = testing::random_params(ModelConfig{8, 1, 2, 16, 4, 9}, 4, 0.3);
        const ModelTarget target(p);
        const Eigen::Vector4d x(0.3, -0.8, 1.1, 0.4);
        AttributionConfig coarse;
        coarse.steps = 10;
        AttributionConfig fine;
        fine.steps = 400;
        const auto a = integrated_gradients(target, x, coarse);
        const auto b = integrated_gradients(target, x, fine);
        CHECK(b.completeness_residual <= a.completeness_residual + 1e-12);
        CHECK(b.completeness_residual / std::abs(b.output_delta) < 0.01);
        CHECK(a.output_delta == doctest::Approx(b.output_delta));
    }

    TEST_CASE("sample indices are sorted, distinct and seeded") {
        const auto a = sample_indices(50, 20, 7);
        const auto b = sample_indices(50, 20, 7);
        CHECK(a == b);
        CHECK(std::set<std::size_t>(a.begin(), a.end()).size() == 20);
        CHECK(std::is_sorted(a.begin(), a.end()));
        CHECK(a.back() < 50);
        const auto all = sample_indices(5, 5, 1);
        CHECK(all == std::vector<std::size_t>{0, 1, 2, 3, 4});
        CHECK_THROWS_AS(sample_indices(3, 4, 1), SampleTooLarge);
    }

    TEST_CASE("global importance ranks by mean absolute IG") {
        LinearHead h{Eigen::MatrixXd::Zero(29, 1), Eigen::VectorXd::Zero(1)};
        h.weight(3, 0) = 5.0;
        h.weight(10, 0) = -2.0;
        Dataset d;
        d.records = Eigen::MatrixXd::Ones(30, 29);
        d.labels.assign(30, 0);
        AttributionConfig cfg;
        cfg.sample_size = 10;
        const auto g = global_importance(h, d, cfg);
        REQUIRE(g.ranking.size() == 29);
        CHECK(g.ranking[0].feature == 3);
        CHECK(g.ranking[1].feature == 10);
        CHECK(g.ranking[0].mean_abs == doctest::Approx(5.0));
        CHECK(g.ranking[2].feature == 0);
        CHECK(g.ranking[3].feature == 1);
        CHECK(g.ranking_csv().rfind("rank,feature,mean_abs\n1,", 0) == 0);
        cfg.sample_size = 31;
        CHECK_THROWS_AS(global_importance(h, d, cfg), SampleTooSmall);
    }

    TEST_CASE("zero head ties are broken by feature index") {
        auto p = testing::random_params(ModelConfig{8, 1, 2, 16, 29, 9}, 5);
        p.weights.head_weight.setZero();
        const ModelTarget target(p);
        Dataset d;
        d.records = Eigen::MatrixXd::Random(12, 29);
        d.labels.assign(12, 0);
        AttributionConfig cfg;
        cfg.sample_size = 4;
        cfg.steps = 5;
        const auto g = global_importance(target, d, cfg);
        for (std::size_t i = 0; i < g.ranking.size(); ++i) {
            CHECK(g.ranking[i].feature == i);
            CHECK(g.ranking[i].mean_abs == 0.0);
        }
    }

    TEST_CASE("chunked gradients match a single batch") {
        const auto p = testing::random_params(ModelConfig{8, 1, 2, 16, 4, 9}, 6);
        const Eigen::MatrixXd pts = Eigen::MatrixXd::Random(10, 4);
        const auto a = ModelTarget(p, 3).input_gradients(pts, 2);
        const auto b = ModelTarget(p, 256).input_gradients(pts, 2);
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
    }
}
