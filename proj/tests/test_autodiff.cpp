#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"
#include "exai5g/autodiff.hpp"
#include "exai5g/optim.hpp"

using exai5g::Mat;
using exai5g::Tape;
using exai5g::Var;

namespace {

using Op = std::function<Var(Tape<double>&, Var)>;

Mat<double> random_mat(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Mat<double> m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    return m;
}

// Projects the op output onto a fixed random direction and compares the
// tape gradient with central differences, coordinate by coordinate.
void check_gradient(const Op& op, Mat<double> x, std::uint64_t seed, double h = 1e-5, double tol = 1e-6) {
    std::mt19937_64 rng(seed);
    Mat<double> dir;
    Mat<double> analytic;
    {
        Tape<double> t;
        const Var xv = t.leaf(x, true);
        const Var out = op(t, xv);
        dir = random_mat(t.value(out).rows(), t.value(out).cols(), rng);
        t.backward(out, dir);
        analytic = t.grad(xv);
    }
    auto objective = [&](const Mat<double>& at) {
        Tape<double> t = Tape<double>::inference();
        return (t.value(op(t, t.leaf(at))).array() * dir.array()).sum();
    };
    REQUIRE(analytic.rows() == x.rows());
    REQUIRE(analytic.cols() == x.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Mat<double> up = x, down = x;
        up.data()[i] += h;
        down.data()[i] -= h;
        const double fd = (objective(up) - objective(down)) / (2 * h);
        CHECK(std::abs(analytic.data()[i] - fd) <= tol * (1.0 + std::abs(fd)));
    }
}

}  // namespace

TEST_SUITE("autodiff") {
    TEST_CASE("matmul, add and add_row gradients") {
        std::mt19937_64 rng(1);
        const Mat<double> w = random_mat(4, 3, rng);
        const Mat<double> b = random_mat(1, 3, rng);
        const Mat<double> other = random_mat(5, 3, rng);
        check_gradient([&](Tape<double>& t, Var x) { return matmul(t, x, t.leaf(w)); }, random_mat(5, 4, rng), 2);
        check_gradient([&](Tape<double>& t, Var x) { return matmul(t, t.leaf(Mat<double>(w.transpose())), x); },
                       random_mat(4, 2, rng), 3);
        check_gradient([&](Tape<double>& t, Var x) { return add(t, x, t.leaf(other)); }, random_mat(5, 3, rng), 4);
        check_gradient([&](Tape<double>& t, Var x) { return add_row(t, t.leaf(other), x); }, b, 5);
        check_gradient([&](Tape<double>& t, Var x) { return add(t, x, x); }, random_mat(2, 3, rng), 6);
    }

    TEST_CASE("gelu and layer_norm gradients") {
        std::mt19937_64 rng(7);
        const Mat<double> gain = random_mat(1, 6, rng);
        const Mat<double> bias = random_mat(1, 6, rng);
        const Mat<double> input = random_mat(4, 6, rng);
        check_gradient([](Tape<double>& t, Var x) { return gelu(t, x); }, random_mat(3, 5, rng), 8);
        check_gradient([&](Tape<double>& t, Var x) { return layer_norm(t, x, t.leaf(gain), t.leaf(bias)); }, input, 9);
        check_gradient([&](Tape<double>& t, Var g) { return layer_norm(t, t.leaf(input), g, t.leaf(bias)); }, gain, 10);
        check_gradient([&](Tape<double>& t, Var b) { return layer_norm(t, t.leaf(input), t.leaf(gain), b); }, bias, 11);
    }

    TEST_CASE("attention, tokenize and strided_rows gradients") {
        std::mt19937_64 rng(12);
        const Eigen::Index batch = 2, seq = 4, d = 6, heads = 2;
        check_gradient([&](Tape<double>& t, Var qkv) { return attention(t, qkv, batch, seq, heads); },
                       random_mat(batch * seq, 3 * d, rng), 13);
        const Mat<double> emb = random_mat(3, d, rng);
        const Mat<double> fb = random_mat(3, d, rng);
        const Mat<double> cls = random_mat(1, d, rng);
        check_gradient([&](Tape<double>& t, Var x) { return tokenize(t, x, t.leaf(emb), t.leaf(fb), t.leaf(cls)); },
                       random_mat(batch, 3, rng), 14);
        const Mat<double> xs = random_mat(batch, 3, rng);
        check_gradient([&](Tape<double>& t, Var e) { return tokenize(t, t.leaf(xs), e, t.leaf(fb), t.leaf(cls)); },
                       emb, 15);
        check_gradient([&](Tape<double>& t, Var c) { return tokenize(t, t.leaf(xs), t.leaf(emb), t.leaf(fb), c); },
                       cls, 16);
        check_gradient([&](Tape<double>& t, Var a) { return strided_rows(t, a, 3); }, random_mat(6, 2, rng), 17);
    }

    TEST_CASE("focal loss gradient with respect to logits") {
        std::mt19937_64 rng(18);
        const std::vector<int> labels{0, 2, 1, 2};
        const std::vector<double> alpha{0.5, 1.0, 2.0};
        check_gradient(
            [&](Tape<double>& t, Var l) {
                return exai5g::focal_loss<double>(t, l, labels, alpha);
            },
            random_mat(4, 3, rng), 19);
    }

    TEST_CASE("focal loss scalar oracles") {
        // Uniform logits over two classes: CE = ln 2, p = 1/2.
        const Mat<double> logits = Mat<double>::Zero(1, 2);
        const std::vector<int> y{0};
        const double ce = std::log(2.0);
        const std::vector<double> one{1.0, 1.0};
        CHECK(exai5g::focal_loss_value<double>(logits, y, one) == doctest::Approx(0.25 * ce).epsilon(1e-12));
        CHECK(exai5g::focal_loss_value<double>(logits, y, one) == doctest::Approx(0.1733).epsilon(1e-3));

        const std::vector<double> two{2.0, 1.0};
        const double p = 0.5;
        CHECK(exai5g::focal_loss_value<double>(logits, y, two) ==
              doctest::Approx((1 - p * p) * (1 - p * p) * 2 * ce).epsilon(1e-12));

        Mat<double> sure = Mat<double>::Zero(1, 2);
        sure(0, 0) = 40.0;
        CHECK(exai5g::focal_loss_value<double>(sure, y, one) < 1e-30);
    }

    TEST_CASE("focal loss is nonnegative and bounded by weighted cross-entropy") {
        std::mt19937_64 rng(20);
        for (int trial = 0; trial < 20; ++trial) {
            const Mat<double> l = random_mat(1, 4, rng) * 3.0;
            const std::vector<int> y{trial % 4};
            const std::vector<double> alpha{0.3, 1.0, 1.7, 2.5};
            const double loss = exai5g::focal_loss_value<double>(l, y, alpha);
            const double ce = alpha[std::size_t(y[0])] * exai5g::neg_log_softmax<double>(l.row(0), y[0]);
            CHECK(loss >= 0.0);
            CHECK(loss <= ce + 1e-12);
        }
    }

    TEST_CASE("AdamW with zero learning rate leaves parameters unchanged") {
        std::mt19937_64 rng(21);
        Mat<double> p = random_mat(3, 3, rng);
        const Mat<double> before = p;
        const Mat<double> g = random_mat(3, 3, rng);
        exai5g::AdamW<double> opt({0.0, 0.01, 0.9, 0.999, 1e-8});
        for (int i = 0; i < 3; ++i) opt.step({&p}, {&g});
        CHECK((p - before).cwiseAbs().maxCoeff() == 0.0);
    }

    TEST_CASE("AdamW first step matches the closed form") {
        // Bias correction makes the first update lr * g / (|g| + eps) after decay.
        Mat<double> p(1, 2);
        p << 1.0, -2.0;
        Mat<double> g(1, 2);
        g << 0.5, -4.0;
        const double lr = 0.1, wd = 0.01;
        exai5g::AdamW<double> opt({lr, wd, 0.9, 0.999, 1e-8});
        opt.step({&p}, {&g});
        CHECK(p(0, 0) == doctest::Approx(1.0 * (1 - lr * wd) - lr * 0.5 / (0.5 + 1e-8)).epsilon(1e-12));
        CHECK(p(0, 1) == doctest::Approx(-2.0 * (1 - lr * wd) + lr * 4.0 / (4.0 + 1e-8)).epsilon(1e-12));
    }

    TEST_CASE("inference tape evaluates forward values") {
        auto t = Tape<double>::inference();
        const Var x = t.leaf(Mat<double>::Ones(2, 2), true);
        const Var y = gelu(t, x);
        CHECK(t.value(y).rows() == 2);
    }
}
