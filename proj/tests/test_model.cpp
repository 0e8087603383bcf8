#include <cmath>
#include <random>

#include "doctest.h"
#include "exai5g/metrics.hpp"
#include "exai5g/model.hpp"
#include "exai5g/train.hpp"
#include "support.hpp"

using namespace exai5g;

namespace {

ModelConfig tiny(int n_features = 5) { return ModelConfig{8, 1, 2, 16, n_features, 9}; }

Dataset blobs(std::size_t per_class, int n_features, std::uint64_t seed, int n_classes = 3) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.6);
    Dataset d;
    d.records.resize(static_cast<Eigen::Index>(per_class * std::size_t(n_classes)), n_features);
    for (int c = 0; c < n_classes; ++c) {
        for (std::size_t i = 0; i < per_class; ++i) {
            const auto r = static_cast<Eigen::Index>(std::size_t(c) * per_class + i);
            for (int f = 0; f < n_features; ++f) d.records(r, f) = (f % n_classes == c ? 2.0 : 0.0) + noise(rng);
            d.labels.push_back(c);
        }
    }
    return d;
}

}  // namespace

TEST_SUITE("model") {
    TEST_CASE("batch of one yields a 1 x 9 logit row") {
        const auto p = init_params<double>(ModelConfig{}, 3);
        const Mat<double> x = Mat<double>::Zero(1, ModelConfig{}.n_features);
        const auto logits = predict_logits(p, x);
        CHECK(logits.rows() == 1);
        CHECK(logits.cols() == 9);
    }

    TEST_CASE("zero head gives a uniform softmax") {
        auto p = testing::random_params(tiny(), 4);
        p.weights.head_weight.setZero();
        p.weights.head_bias.setZero();
        std::mt19937_64 rng(5);
        std::normal_distribution<double> n;
        Mat<double> x(3, 5);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
        const auto probs = softmax_rows(predict_logits(p, x));
        for (Eigen::Index i = 0; i < probs.size(); ++i) CHECK(probs.data()[i] == doctest::Approx(1.0 / 9.0));
    }

    TEST_CASE("duplicated rows give identical logits") {
        const auto p = testing::random_params(tiny(), 6);
        Mat<double> x(2, 5);
        x.row(0) << 0.1, -1.0, 2.0, 0.5, 0.0;
        x.row(1) = x.row(0);
        const auto logits = predict_logits(p, x);
        CHECK((logits.row(0) - logits.row(1)).cwiseAbs().maxCoeff() == 0.0);
    }

    TEST_CASE("rows are independent of the rest of the batch") {
        const auto p = testing::random_params(tiny(), 7);
        Mat<double> x(3, 5);
        x << 0.1, 0.2, 0.3, 0.4, 0.5, -1, -2, 0, 1, 2, 3, 0, 0, 1, 1;
        const auto all = predict_logits(p, x);
        const auto one = predict_logits(p, Mat<double>(x.row(2)));
        CHECK((all.row(2) - one.row(0)).cwiseAbs().maxCoeff() < 1e-12);
    }

    TEST_CASE("input gradient vanishes when the class head column is zero") {
        auto p = testing::random_params(tiny(), 8);
        p.weights.head_weight.col(4).setZero();
        const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(5, -1.0, 1.0);
        CHECK(grad_input(p, x, 4).cwiseAbs().maxCoeff() == 0.0);
    }

    TEST_CASE("input gradient is deterministic and matches central differences") {
        const auto p = testing::random_params(tiny(), 9);
        const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(5, -0.7, 1.3);
        const auto g1 = grad_input(p, x, 2);
        const auto g2 = grad_input(p, x, 2);
        CHECK((g1 - g2).cwiseAbs().maxCoeff() == 0.0);
        const double h = 1e-4;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            Eigen::VectorXd up = x, down = x;
            up(i) += h;
            down(i) -= h;
            const double fd = (predict_logits(p, Mat<double>(up.transpose()))(0, 2) -
                               predict_logits(p, Mat<double>(down.transpose()))(0, 2)) /
                              (2 * h);
            CHECK(std::abs(g1(i) - fd) / (std::abs(g1(i)) + 1e-8) < 1e-3);
        }
    }

    TEST_CASE("checkpoint round trip is exact") {
        const auto p = testing::random_params(tiny(), 10);
        const auto q = checkpoint_from_json(checkpoint_json(p));
        CHECK(q.config == p.config);
        std::vector<const Mat<double>*> a;
        p.visit([&](const std::string&, const Mat<double>& m) { a.push_back(&m); });
        std::size_t i = 0;
        q.visit([&](const std::string&, const Mat<double>& m) { CHECK((m - *a[i++]).cwiseAbs().maxCoeff() == 0.0); });
        CHECK(i == a.size());
    }

    TEST_CASE("patience zero stops after the first non-improving epoch") {
        const auto train_set = blobs(40, 5, 11);
        const auto val_set = blobs(15, 5, 12);
        TrainConfig tc;
        tc.batch_size = 16;
        tc.learning_rate = 3e-3;
        tc.max_epochs = 25;
        tc.patience = 0;
        tc.class_weights.assign(9, 1.0);
        const auto r = train<double>(init_params<double>(tiny(), 1), tc, train_set, val_set);
        const auto& e = r.history.epochs;
        REQUIRE(!e.empty());
        if (r.history.stopped_early) {
            CHECK(e.back().val_macro_f1 <= e[e.size() - 2].val_macro_f1);
            for (std::size_t i = 1; i + 1 < e.size(); ++i) CHECK(e[i].val_macro_f1 > e[i - 1].val_macro_f1);
        } else {
            CHECK(e.size() == 25);
        }
    }

    TEST_CASE("training restores the best epoch and learns separable blobs") {
        const auto train_set = blobs(60, 5, 13);
        const auto val_set = blobs(20, 5, 14);
        TrainConfig tc;
        tc.batch_size = 32;
        tc.learning_rate = 3e-3;
        tc.max_epochs = 30;
        tc.patience = 4;
        const auto r = train<double>(init_params<double>(tiny(), 2), tc, train_set, val_set);
        const auto& h = r.history;
        REQUIRE(h.best_epoch >= 1);
        CHECK(h.epochs[std::size_t(h.best_epoch - 1)].val_macro_f1 == h.best_macro_f1);
        for (const auto& e : h.epochs) CHECK(e.val_macro_f1 <= h.best_macro_f1);
        CHECK(macro_f1(val_set.labels, predict(r.params, val_set.records)) == h.best_macro_f1);
        CHECK(h.best_macro_f1 > 0.9);
    }

    TEST_CASE("inverse frequency weights under both normalizations") {
        Dataset d;
        d.records = Eigen::MatrixXd::Zero(6, 1);
        d.labels = {0, 0, 0, 0, 1, 2};
        const auto w = inverse_frequency_weights(d, WeightNorm::Mean);
        REQUIRE(w.size() == 9);
        double sum = 0;
        for (double v : w) sum += v;
        CHECK(sum / 9.0 == doctest::Approx(1.0));
        CHECK(w[1] == doctest::Approx(4 * w[0]));
        const auto m = inverse_frequency_weights(d, WeightNorm::Min);
        CHECK(m[0] == doctest::Approx(1.0));
        CHECK(m[1] == doctest::Approx(4.0));
        CHECK(m[8] == doctest::Approx(4.0));
    }
}
