#include "exai5g/baselines.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "exai5g/autodiff.hpp"
#include "exai5g/metrics.hpp"
#include "exai5g/optim.hpp"
#include "exai5g/train.hpp"

namespace exai5g {

namespace {

using Real = float;

struct Mlp {
    std::vector<Mat<Real>> weights;
    std::vector<Mat<Real>> biases;
};

Mlp init_mlp(Eigen::Index in, const std::vector<int>& hidden, Eigen::Index out, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Mlp m;
    Eigen::Index prev = in;
    std::vector<Eigen::Index> widths(hidden.begin(), hidden.end());
    widths.push_back(out);
    for (Eigen::Index w : widths) {
        const double limit = std::sqrt(6.0 / double(prev + w));
        std::uniform_real_distribution<double> u(-limit, limit);
        Mat<Real> W(prev, w);
        for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = Real(u(rng));
        m.weights.push_back(std::move(W));
        m.biases.push_back(Mat<Real>::Zero(1, w));
        prev = w;
    }
    return m;
}

Var mlp_forward(Tape<Real>& t, const std::vector<Var>& w, const std::vector<Var>& b, Var x) {
    Var h = x;
    for (std::size_t l = 0; l < w.size(); ++l) {
        h = add_row(t, matmul(t, h, w[l]), b[l]);
        if (l + 1 < w.size()) h = gelu(t, h);
    }
    return h;
}

std::vector<int> mlp_predict(const Mlp& m, const Eigen::MatrixXd& rows) {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(rows.rows()));
    for (Eigen::Index start = 0; start < rows.rows(); start += 1024) {
        const Eigen::Index n = std::min<Eigen::Index>(1024, rows.rows() - start);
        auto t = Tape<Real>::inference();
        std::vector<Var> w, b;
        for (std::size_t l = 0; l < m.weights.size(); ++l) {
            w.push_back(t.leaf(m.weights[l]));
            b.push_back(t.leaf(m.biases[l]));
        }
        const Var x = t.leaf(Mat<Real>(rows.middleRows(start, n).cast<Real>()));
        const auto pred = argmax_rows(t.value(mlp_forward(t, w, b, x)));
        out.insert(out.end(), pred.begin(), pred.end());
    }
    return out;
}

BaselineResult score(std::string name, const std::vector<int>& val_pred, const std::vector<int>& test_pred,
                     const Dataset& val, const Dataset& test) {
    BaselineResult r;
    r.name = std::move(name);
    r.val_macro_f1 = val.rows() ? macro_f1(val.labels, val_pred) : 0.0;
    if (test.rows()) {
        const auto rep = class_report(test.labels, test_pred);
        r.test_macro_f1 = rep.macro.f1;
        r.test_accuracy = rep.accuracy;
    }
    return r;
}

}  // namespace

BaselineResult tree_baseline(const Dataset& train, const Dataset& val, const Dataset& test, const TreeConfig& cfg) {
    const auto tree = fit_tree(train, train.labels, cfg);
    return score("decision_tree_depth" + std::to_string(cfg.max_depth), tree.predict(val.records),
                 tree.predict(test.records), val, test);
}

BaselineResult mlp_baseline(const Dataset& train, const Dataset& val, const Dataset& test, const MlpConfig& cfg) {
    if (train.rows() == 0) throw EmptyTrain("mlp_baseline: training split is empty");
    const auto weights = inverse_frequency_weights(train, WeightNorm::Min);
    const std::vector<Real> alpha(weights.begin(), weights.end());
    Mlp m = init_mlp(train.records.cols(), cfg.hidden, static_cast<Eigen::Index>(kNumClasses), cfg.seed);
    Mlp best = m;
    double best_f1 = -1.0;
    int since_best = 0;

    AdamW<Real> opt(AdamWConfig{cfg.learning_rate, cfg.weight_decay, 0.9, 0.999, 1e-8});
    std::vector<Mat<Real>*> slots;
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        slots.push_back(&m.weights[l]);
        slots.push_back(&m.biases[l]);
    }
    const Mat<Real> xs = train.records.cast<Real>();
    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(train.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += std::size_t(cfg.batch_size)) {
            const std::size_t n = std::min<std::size_t>(std::size_t(cfg.batch_size), order.size() - start);
            Mat<Real> xb(static_cast<Eigen::Index>(n), xs.cols());
            std::vector<int> yb(n);
            for (std::size_t i = 0; i < n; ++i) {
                xb.row(static_cast<Eigen::Index>(i)) = xs.row(static_cast<Eigen::Index>(order[start + i]));
                yb[i] = train.labels[order[start + i]];
            }
            Tape<Real> t;
            std::vector<Var> w, b;
            for (std::size_t l = 0; l < m.weights.size(); ++l) {
                w.push_back(t.leaf(m.weights[l], true));
                b.push_back(t.leaf(m.biases[l], true));
            }
            const Var x = t.leaf(std::move(xb));
            const Var loss = focal_loss<Real>(t, mlp_forward(t, w, b, x), yb, alpha);
            if (!std::isfinite(double(t.value(loss)(0, 0)))) throw NonFiniteLoss(epoch, int(start / cfg.batch_size));
            t.backward(loss);
            std::vector<const Mat<Real>*> grads;
            for (std::size_t l = 0; l < w.size(); ++l) {
                grads.push_back(&t.grad(w[l]));
                grads.push_back(&t.grad(b[l]));
            }
            opt.step(slots, grads);
        }
        const double f1 = val.rows() ? macro_f1(val.labels, mlp_predict(m, val.records)) : 0.0;
        if (f1 > best_f1) {
            best_f1 = f1;
            best = m;
            since_best = 0;
        } else if (++since_best > cfg.patience) {
            break;
        }
    }
    std::string name = "mlp";
    for (int h : cfg.hidden) name += "_" + std::to_string(h);
    return score(name, mlp_predict(best, val.records), mlp_predict(best, test.records), val, test);
}

std::string baselines_csv(const std::vector<BaselineResult>& rows) {
    std::string out = "model,val_macro_f1,test_macro_f1,test_accuracy\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%.4f,%.4f,%.4f\n", r.name.c_str(), r.val_macro_f1, r.test_macro_f1,
                      r.test_accuracy);
        out += buf;
    }
    return out;
}

}  // namespace exai5g
