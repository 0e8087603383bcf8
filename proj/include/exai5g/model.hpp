#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "exai5g/autodiff.hpp"
#include "exai5g/errors.hpp"
#include "exai5g/schema.hpp"

namespace exai5g {

struct ModelConfig {
    int d_model = 32;
    int n_layers = 2;
    int n_heads = 4;
    int d_ff = 64;
    int n_features = static_cast<int>(kNumFeatures);
    int n_classes = static_cast<int>(kNumClasses);

    /// 128-wide, 6 layers, 8 heads.
    static ModelConfig full_scale() { return ModelConfig{128, 6, 8, 256}; }

    void validate() const;
    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Per-layer weights. `T` is a matrix type for parameters or `Var` for tape handles.
template <typename T>
struct EncoderLayerWeights {
    T w_qkv, b_qkv;
    T w_out, b_out;
    T ln1_gain, ln1_bias;
    T w_ff1, b_ff1;
    T w_ff2, b_ff2;
    T ln2_gain, ln2_bias;

    template <typename Fn>
    void visit(const std::string& prefix, Fn&& fn) {
        fn(prefix + "w_qkv", w_qkv);
        fn(prefix + "b_qkv", b_qkv);
        fn(prefix + "w_out", w_out);
        fn(prefix + "b_out", b_out);
        fn(prefix + "ln1_gain", ln1_gain);
        fn(prefix + "ln1_bias", ln1_bias);
        fn(prefix + "w_ff1", w_ff1);
        fn(prefix + "b_ff1", b_ff1);
        fn(prefix + "w_ff2", w_ff2);
        fn(prefix + "b_ff2", b_ff2);
        fn(prefix + "ln2_gain", ln2_gain);
        fn(prefix + "ln2_bias", ln2_bias);
    }
};

template <typename T>
struct ModelWeights {
    T feature_embedding;  // F x d
    T feature_bias;       // F x d
    T cls_token;          // 1 x d
    std::vector<EncoderLayerWeights<T>> layers;
    T head_weight;  // d x C
    T head_bias;    // 1 x C

    /// Calls fn(name, slot) for every weight in a fixed order.
    template <typename Fn>
    void visit(Fn&& fn) {
        fn(std::string("feature_embedding"), feature_embedding);
        fn(std::string("feature_bias"), feature_bias);
        fn(std::string("cls_token"), cls_token);
        for (std::size_t i = 0; i < layers.size(); ++i) {
            layers[i].visit("layer" + std::to_string(i) + ".", fn);
        }
        fn(std::string("head_weight"), head_weight);
        fn(std::string("head_bias"), head_bias);
    }
};

template <typename Scalar>
struct ModelParams {
    ModelConfig config;
    ModelWeights<Mat<Scalar>> weights;

    template <typename Fn>
    void visit(Fn&& fn) { weights.visit(fn); }
    template <typename Fn>
    void visit(Fn&& fn) const { const_cast<ModelWeights<Mat<Scalar>>&>(weights).visit(fn); }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        visit([&](const std::string&, const Mat<Scalar>& m) { n += static_cast<std::size_t>(m.size()); });
        return n;
    }
};

/// Glorot-uniform matrices, unit LayerNorm gains, zero biases and head.
template <typename Scalar>
ModelParams<Scalar> init_params(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    auto glorot = [&](int rows, int cols) {
        const double limit = std::sqrt(6.0 / double(rows + cols));
        std::uniform_real_distribution<double> u(-limit, limit);
        Mat<Scalar> m(rows, cols);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = Scalar(u(rng));
        return m;
    };
    const int d = cfg.d_model;
    ModelParams<Scalar> p;
    p.config = cfg;
    auto& w = p.weights;
    w.feature_embedding = glorot(cfg.n_features, d);
    w.feature_bias = glorot(cfg.n_features, d);
    w.cls_token = glorot(1, d);
    for (int l = 0; l < cfg.n_layers; ++l) {
        EncoderLayerWeights<Mat<Scalar>> layer;
        layer.w_qkv = glorot(d, 3 * d);
        layer.b_qkv = Mat<Scalar>::Zero(1, 3 * d);
        layer.w_out = glorot(d, d);
        layer.b_out = Mat<Scalar>::Zero(1, d);
        layer.ln1_gain = Mat<Scalar>::Ones(1, d);
        layer.ln1_bias = Mat<Scalar>::Zero(1, d);
        layer.w_ff1 = glorot(d, cfg.d_ff);
        layer.b_ff1 = Mat<Scalar>::Zero(1, cfg.d_ff);
        layer.w_ff2 = glorot(cfg.d_ff, d);
        layer.b_ff2 = Mat<Scalar>::Zero(1, d);
        layer.ln2_gain = Mat<Scalar>::Ones(1, d);
        layer.ln2_bias = Mat<Scalar>::Zero(1, d);
        w.layers.push_back(std::move(layer));
    }
    w.head_weight = glorot(d, cfg.n_classes);
    w.head_bias = Mat<Scalar>::Zero(1, cfg.n_classes);
    return p;
}

/// Registers every parameter as a tape leaf.
template <typename Scalar>
ModelWeights<Var> bind(Tape<Scalar>& tape, const ModelParams<Scalar>& params, bool requires_grad) {
    ModelWeights<Var> vars;
    vars.layers.resize(params.weights.layers.size());
    ModelWeights<Mat<Scalar>>& src = const_cast<ModelWeights<Mat<Scalar>>&>(params.weights);
    // Both structures visit in the same order; collect leaves then scatter.
    std::vector<Var> leaves;
    src.visit([&](const std::string&, Mat<Scalar>& m) { leaves.push_back(tape.leaf(m, requires_grad)); });
    std::size_t i = 0;
    vars.visit([&](const std::string&, Var& v) { v = leaves[i++]; });
    return vars;
}

/// Transformer encoder over per-feature tokens plus a CLS token; returns
/// logits (batch x classes) read off the final CLS position.
template <typename Scalar>
Var forward(Tape<Scalar>& t, const ModelConfig& cfg, const ModelWeights<Var>& w, Var x) {
    const auto& xv = t.value(x);
    if (xv.cols() != cfg.n_features) {
        throw ShapeMismatch("forward: expected " + std::to_string(cfg.n_features) + " features, got " +
                            std::to_string(xv.cols()));
    }
    const Eigen::Index batch = xv.rows();
    const Eigen::Index seq = cfg.n_features + 1;
    Var h = tokenize(t, x, w.feature_embedding, w.feature_bias, w.cls_token);
    for (const auto& layer : w.layers) {
        const Var qkv = add_row(t, matmul(t, h, layer.w_qkv), layer.b_qkv);
        const Var att = attention(t, qkv, batch, seq, Eigen::Index(cfg.n_heads));
        const Var proj = add_row(t, matmul(t, att, layer.w_out), layer.b_out);
        h = layer_norm(t, add(t, h, proj), layer.ln1_gain, layer.ln1_bias);
        const Var hidden = gelu(t, add_row(t, matmul(t, h, layer.w_ff1), layer.b_ff1));
        const Var ff = add_row(t, matmul(t, hidden, layer.w_ff2), layer.b_ff2);
        h = layer_norm(t, add(t, h, ff), layer.ln2_gain, layer.ln2_bias);
    }
    const Var cls = strided_rows(t, h, seq);
    return add_row(t, matmul(t, cls, w.head_weight), w.head_bias);
}

/// Forward-only logits for a batch of standardized rows.
template <typename Scalar>
Mat<Scalar> predict_logits(const ModelParams<Scalar>& params, const Mat<Scalar>& batch) {
    Tape<Scalar> t = Tape<Scalar>::inference();
    const auto w = bind(t, params, false);
    const Var x = t.leaf(batch);
    return t.value(forward(t, params.config, w, x));
}

/// Logits for a large matrix, evaluated in chunks to bound tape memory.
template <typename Scalar>
Mat<Scalar> predict_logits_chunked(const ModelParams<Scalar>& params, const Mat<Scalar>& rows,
                                   Eigen::Index chunk = 512) {
    Mat<Scalar> out(rows.rows(), params.config.n_classes);
    for (Eigen::Index start = 0; start < rows.rows(); start += chunk) {
        const Eigen::Index n = std::min(chunk, rows.rows() - start);
        out.middleRows(start, n) = predict_logits(params, Mat<Scalar>(rows.middleRows(start, n)));
    }
    return out;
}

/// Argmax class per row; ties go to the lowest class index.
template <typename Scalar>
std::vector<int> argmax_rows(const Mat<Scalar>& logits) {
    std::vector<int> out(static_cast<std::size_t>(logits.rows()));
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < logits.cols(); ++c) {
            if (logits(r, c) > logits(r, best)) best = c;
        }
        out[static_cast<std::size_t>(r)] = static_cast<int>(best);
    }
    return out;
}

template <typename Scalar>
Mat<Scalar> softmax_rows(const Mat<Scalar>& logits) {
    Mat<Scalar> p(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const Scalar mx = logits.row(r).maxCoeff();
        p.row(r) = (logits.row(r).array() - mx).exp().matrix();
        p.row(r) /= p.row(r).sum();
    }
    return p;
}

/// Gradients of logit `class_index` with respect to each input row.
///
/// Rows of `points` are independent through the network, so one backward pass
/// seeded with a one-hot column yields every row's input gradient at once.
template <typename Scalar>
Mat<Scalar> grad_input_batch(const ModelParams<Scalar>& params, const Mat<Scalar>& points, int class_index) {
    if (class_index < 0 || class_index >= params.config.n_classes) {
        throw ShapeMismatch("grad_input: class index out of range");
    }
    Tape<Scalar> t;
    const auto w = bind(t, params, false);
    const Var x = t.leaf(points, true);
    const Var logits = forward(t, params.config, w, x);
    Mat<Scalar> seed = Mat<Scalar>::Zero(points.rows(), params.config.n_classes);
    seed.col(class_index).setOnes();
    t.backward(logits, seed);
    if (t.grad(x).size() == 0) return Mat<Scalar>::Zero(points.rows(), points.cols());
    return t.grad(x);
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> grad_input(const ModelParams<Scalar>& params,
                                                    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x,
                                                    int class_index) {
    const Mat<Scalar> row = x.transpose();
    return grad_input_batch(params, row, class_index).row(0).transpose();
}

/// Checkpoint container: JSON with the config and flat row-major weights.
void save_checkpoint(const ModelParams<double>& params, const std::filesystem::path& path);
ModelParams<double> load_checkpoint(const std::filesystem::path& path);
std::string checkpoint_json(const ModelParams<double>& params);
ModelParams<double> checkpoint_from_json(const std::string& text);

}  // namespace exai5g
