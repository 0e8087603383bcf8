#pragma once

// Tape-based reverse-mode automatic differentiation over dense row-major
// Eigen matrices. Every op records a backward closure on the tape; calling
// Tape::backward replays them in reverse creation order.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "exai5g/errors.hpp"

namespace exai5g {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// Handle to a node on a Tape.
struct Var {
    std::size_t id = 0;
};

template <typename Scalar>
class Tape {
public:
    using Matrix = Mat<Scalar>;
    using Backward = std::function<void(Tape&, std::size_t)>;

    /// A tape that records no backward closures; forward-only inference.
    static Tape inference() {
        Tape t;
        t.record_ = false;
        return t;
    }

    Var leaf(Matrix value, bool requires_grad = false) {
        nodes_.push_back(Node{std::move(value), Matrix{}, {}, requires_grad && record_});
        return Var{nodes_.size() - 1};
    }

    Var push(Matrix value, bool requires_grad, Backward backward) {
        const bool rg = requires_grad && record_;
        nodes_.push_back(Node{std::move(value), Matrix{}, rg ? std::move(backward) : Backward{}, rg});
        return Var{nodes_.size() - 1};
    }

    const Matrix& value(Var v) const { return nodes_[v.id].value; }
    bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
    std::size_t size() const { return nodes_.size(); }

    /// Gradient accumulated on `v`; zero-sized when nothing reached it.
    const Matrix& grad(Var v) const { return nodes_[v.id].grad; }

    /// Accumulates `delta` into the gradient of `v` (no-op for constants).
    template <typename Derived>
    void accumulate(Var v, const Eigen::MatrixBase<Derived>& delta) {
        Node& n = nodes_[v.id];
        if (!n.requires_grad) return;
        if (n.grad.size() == 0) {
            n.grad = delta;
        } else {
            n.grad += delta;
        }
    }

    /// Back-propagates from `out` seeded with `seed` (same shape as out).
    void backward(Var out, const Matrix& seed) {
        if (seed.rows() != value(out).rows() || seed.cols() != value(out).cols()) {
            throw ShapeMismatch("backward seed shape does not match output");
        }
        if (!nodes_[out.id].requires_grad) return;
        accumulate(out, seed);
        for (std::size_t i = out.id + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (n.backward && n.grad.size() != 0) n.backward(*this, i);
        }
    }

    /// Back-propagates from a 1x1 output.
    void backward(Var out) { backward(out, Matrix::Ones(1, 1)); }

    /// Gradient of `self` as seen from inside a backward closure.
    const Matrix& upstream(std::size_t self) const { return nodes_[self].grad; }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        Backward backward;
        bool requires_grad = false;
    };

    std::vector<Node> nodes_;
    bool record_ = true;
};

namespace detail {

template <typename Scalar>
void require_same_shape(const Mat<Scalar>& a, const Mat<Scalar>& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeMismatch(std::string(op) + ": operand shapes differ");
    }
}

}  // namespace detail

/// C = A B
template <typename Scalar>
Var matmul(Tape<Scalar>& t, Var a, Var b) {
    const auto& av = t.value(a);
    const auto& bv = t.value(b);
    if (av.cols() != bv.rows()) throw ShapeMismatch("matmul: inner dimensions differ");
    Mat<Scalar> out = av * bv;
    return t.push(std::move(out), t.requires_grad(a) || t.requires_grad(b),
                  [a, b](Tape<Scalar>& tp, std::size_t self) {
                      const auto& g = tp.upstream(self);
                      if (tp.requires_grad(a)) tp.accumulate(a, g * tp.value(b).transpose());
                      if (tp.requires_grad(b)) tp.accumulate(b, tp.value(a).transpose() * g);
                  });
}

/// C = A + B (same shape)
template <typename Scalar>
Var add(Tape<Scalar>& t, Var a, Var b) {
    detail::require_same_shape(t.value(a), t.value(b), "add");
    Mat<Scalar> out = t.value(a) + t.value(b);
    return t.push(std::move(out), t.requires_grad(a) || t.requires_grad(b),
                  [a, b](Tape<Scalar>& tp, std::size_t self) {
                      const auto& g = tp.upstream(self);
                      tp.accumulate(a, g);
                      tp.accumulate(b, g);
                  });
}

/// C = A + 1 b, broadcasting the 1xN row `b` over every row of A.
template <typename Scalar>
Var add_row(Tape<Scalar>& t, Var a, Var b) {
    const auto& av = t.value(a);
    const auto& bv = t.value(b);
    if (bv.rows() != 1 || bv.cols() != av.cols()) throw ShapeMismatch("add_row: bias shape");
    Mat<Scalar> out = av.rowwise() + RowVec<Scalar>(bv);
    return t.push(std::move(out), t.requires_grad(a) || t.requires_grad(b),
                  [a, b](Tape<Scalar>& tp, std::size_t self) {
                      const auto& g = tp.upstream(self);
                      tp.accumulate(a, g);
                      if (tp.requires_grad(b)) tp.accumulate(b, g.colwise().sum());
                  });
}

namespace detail {

/// tanh(c * (x + k x^3)) through the vectorized exponential.
template <typename Scalar>
Mat<Scalar> gelu_tanh(const Mat<Scalar>& x) {
    constexpr Scalar c = Scalar(0.7978845608028654);  // sqrt(2/pi)
    constexpr Scalar k = Scalar(0.044715);
    const auto u = (x.array() + k * x.array().cube()) * c;
    return (Scalar(1) - Scalar(2) / ((Scalar(2) * u).exp() + Scalar(1))).matrix();
}

}  // namespace detail

/// Tanh-approximated GELU, elementwise.
template <typename Scalar>
Var gelu(Tape<Scalar>& t, Var a) {
    const auto& x = t.value(a);
    Mat<Scalar> th = detail::gelu_tanh(x);
    Mat<Scalar> out = (Scalar(0.5) * x.array() * (Scalar(1) + th.array())).matrix();
    return t.push(std::move(out), t.requires_grad(a), [a, th = std::move(th)](Tape<Scalar>& tp, std::size_t self) {
        constexpr Scalar c = Scalar(0.7978845608028654);
        constexpr Scalar k = Scalar(0.044715);
        const auto xv = tp.value(a).array();
        const auto d = Scalar(0.5) * (Scalar(1) + th.array()) +
                       Scalar(0.5) * xv * (Scalar(1) - th.array().square()) * c *
                           (Scalar(1) + Scalar(3) * k * xv.square());
        tp.accumulate(a, (tp.upstream(self).array() * d).matrix());
    });
}

/// Row-wise layer normalization with learned gain and bias (both 1xN).
template <typename Scalar>
Var layer_norm(Tape<Scalar>& t, Var a, Var gain, Var bias, Scalar eps = Scalar(1e-5)) {
    const auto& x = t.value(a);
    const auto& gv = t.value(gain);
    const auto& bv = t.value(bias);
    const Eigen::Index n = x.cols();
    if (gv.rows() != 1 || gv.cols() != n || bv.rows() != 1 || bv.cols() != n) {
        throw ShapeMismatch("layer_norm: gain/bias shape");
    }
    Mat<Scalar> xhat(x.rows(), n);
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv_std(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const Scalar mu = x.row(r).mean();
        const Scalar var = (x.row(r).array() - mu).square().mean();
        inv_std(r) = Scalar(1) / std::sqrt(var + eps);
        xhat.row(r) = (x.row(r).array() - mu) * inv_std(r);
    }
    Mat<Scalar> out = (xhat.array().rowwise() * RowVec<Scalar>(gv).array()).matrix();
    out.rowwise() += RowVec<Scalar>(bv);
    const bool rg = t.requires_grad(a) || t.requires_grad(gain) || t.requires_grad(bias);
    return t.push(std::move(out), rg,
                  [a, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std)](
                      Tape<Scalar>& tp, std::size_t self) {
                      const auto& g = tp.upstream(self);
                      if (tp.requires_grad(gain)) {
                          tp.accumulate(gain, g.cwiseProduct(xhat).colwise().sum());
                      }
                      if (tp.requires_grad(bias)) tp.accumulate(bias, g.colwise().sum());
                      if (!tp.requires_grad(a)) return;
                      const RowVec<Scalar> gv2 = tp.value(gain);
                      const Mat<Scalar> dxhat = (g.array().rowwise() * gv2.array()).matrix();
                      Mat<Scalar> dx(dxhat.rows(), dxhat.cols());
                      for (Eigen::Index r = 0; r < dxhat.rows(); ++r) {
                          const Scalar m1 = dxhat.row(r).mean();
                          const Scalar m2 = dxhat.row(r).cwiseProduct(xhat.row(r)).mean();
                          dx.row(r) = inv_std(r) *
                                      (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2).matrix();
                      }
                      tp.accumulate(a, dx);
                  });
}

/// Multi-head scaled dot-product self-attention over packed sequences.
///
/// `qkv` is (batch*seq) x (3*d): queries, keys and values side by side.
/// Rows [b*seq, (b+1)*seq) form sequence b; head h owns columns
/// [h*d/heads, (h+1)*d/heads) of each of Q, K and V. Output is (batch*seq) x d.
template <typename Scalar>
Var attention(Tape<Scalar>& t, Var qkv, Eigen::Index batch, Eigen::Index seq, Eigen::Index heads) {
    const auto& in = t.value(qkv);
    if (in.rows() != batch * seq || in.cols() % 3 != 0) throw ShapeMismatch("attention: qkv shape");
    const Eigen::Index d = in.cols() / 3;
    if (heads <= 0 || d % heads != 0) throw ShapeMismatch("attention: heads must divide width");
    const Eigen::Index dh = d / heads;
    const Scalar scale = Scalar(1) / std::sqrt(Scalar(dh));

    Mat<Scalar> out(batch * seq, d);
    std::vector<Mat<Scalar>> probs(static_cast<std::size_t>(batch * heads));
    for (Eigen::Index b = 0; b < batch; ++b) {
        for (Eigen::Index h = 0; h < heads; ++h) {
            const auto q = in.block(b * seq, h * dh, seq, dh);
            const auto k = in.block(b * seq, d + h * dh, seq, dh);
            const auto v = in.block(b * seq, 2 * d + h * dh, seq, dh);
            Mat<Scalar> s = (q * k.transpose()) * scale;
            for (Eigen::Index r = 0; r < seq; ++r) {
                const Scalar mx = s.row(r).maxCoeff();
                s.row(r) = (s.row(r).array() - mx).exp().matrix();
                s.row(r) /= s.row(r).sum();
            }
            out.block(b * seq, h * dh, seq, dh).noalias() = s * v;
            probs[static_cast<std::size_t>(b * heads + h)] = std::move(s);
        }
    }
    return t.push(std::move(out), t.requires_grad(qkv),
                  [qkv, batch, seq, heads, d, dh, scale, probs = std::move(probs)](
                      Tape<Scalar>& tp, std::size_t self) {
                      const auto& g = tp.upstream(self);
                      const auto& x = tp.value(qkv);
                      Mat<Scalar> dx = Mat<Scalar>::Zero(x.rows(), x.cols());
                      for (Eigen::Index b = 0; b < batch; ++b) {
                          for (Eigen::Index h = 0; h < heads; ++h) {
                              const auto& p = probs[static_cast<std::size_t>(b * heads + h)];
                              const auto q = x.block(b * seq, h * dh, seq, dh);
                              const auto k = x.block(b * seq, d + h * dh, seq, dh);
                              const auto v = x.block(b * seq, 2 * d + h * dh, seq, dh);
                              const auto go = g.block(b * seq, h * dh, seq, dh);
                              dx.block(b * seq, 2 * d + h * dh, seq, dh).noalias() = p.transpose() * go;
                              const Mat<Scalar> dp = go * v.transpose();
                              Mat<Scalar> ds = p.cwiseProduct(dp);
                              for (Eigen::Index r = 0; r < seq; ++r) {
                                  const Scalar row_dot = ds.row(r).sum();
                                  ds.row(r) -= p.row(r) * row_dot;
                              }
                              ds *= scale;
                              dx.block(b * seq, h * dh, seq, dh).noalias() = ds * k;
                              dx.block(b * seq, d + h * dh, seq, dh).noalias() = ds.transpose() * q;
                          }
                      }
                      tp.accumulate(qkv, dx);
                  });
}

/// Lifts a batch of feature vectors to token sequences.
///
/// For input x (batch x F), sequence b is [cls, x[b,0]*emb[0] + bias[0], ...,
/// x[b,F-1]*emb[F-1] + bias[F-1]], packed into (batch*(F+1)) x d rows.
template <typename Scalar>
Var tokenize(Tape<Scalar>& t, Var x, Var emb, Var bias, Var cls) {
    const auto& xv = t.value(x);
    const auto& ev = t.value(emb);
    const auto& bv = t.value(bias);
    const auto& cv = t.value(cls);
    const Eigen::Index f = xv.cols();
    const Eigen::Index d = ev.cols();
    if (ev.rows() != f || bv.rows() != f || bv.cols() != d || cv.rows() != 1 || cv.cols() != d) {
        throw ShapeMismatch("tokenize: embedding shapes do not match input width");
    }
    const Eigen::Index seq = f + 1;
    Mat<Scalar> out(xv.rows() * seq, d);
    for (Eigen::Index b = 0; b < xv.rows(); ++b) {
        out.row(b * seq) = cv;
        auto tokens = out.block(b * seq + 1, 0, f, d);
        tokens = bv;
        tokens += xv.row(b).transpose().asDiagonal() * ev;
    }
    const bool rg = t.requires_grad(x) || t.requires_grad(emb) || t.requires_grad(bias) ||
                    t.requires_grad(cls);
    return t.push(std::move(out), rg, [x, emb, bias, cls, seq, f, d](Tape<Scalar>& tp, std::size_t self) {
        const auto& g = tp.upstream(self);
        const auto& xv2 = tp.value(x);
        const auto& ev2 = tp.value(emb);
        const Eigen::Index n = xv2.rows();
        Mat<Scalar> dx(n, f);
        Mat<Scalar> demb = Mat<Scalar>::Zero(f, d);
        Mat<Scalar> dbias = Mat<Scalar>::Zero(f, d);
        Mat<Scalar> dcls = Mat<Scalar>::Zero(1, d);
        for (Eigen::Index b = 0; b < n; ++b) {
            const auto gt = g.block(b * seq + 1, 0, f, d);
            dcls += g.row(b * seq);
            dbias += gt;
            demb.noalias() += xv2.row(b).transpose().asDiagonal() * gt;
            dx.row(b) = gt.cwiseProduct(ev2).rowwise().sum().transpose();
        }
        if (tp.requires_grad(x)) tp.accumulate(x, dx);
        if (tp.requires_grad(emb)) tp.accumulate(emb, demb);
        if (tp.requires_grad(bias)) tp.accumulate(bias, dbias);
        if (tp.requires_grad(cls)) tp.accumulate(cls, dcls);
    });
}

/// Selects rows 0, stride, 2*stride, ... (the CLS positions).
template <typename Scalar>
Var strided_rows(Tape<Scalar>& t, Var a, Eigen::Index stride) {
    const auto& av = t.value(a);
    if (stride <= 0 || av.rows() % stride != 0) throw ShapeMismatch("strided_rows: stride");
    const Eigen::Index n = av.rows() / stride;
    Mat<Scalar> out(n, av.cols());
    for (Eigen::Index i = 0; i < n; ++i) out.row(i) = av.row(i * stride);
    return t.push(std::move(out), t.requires_grad(a), [a, stride, n](Tape<Scalar>& tp, std::size_t self) {
        const auto& g = tp.upstream(self);
        const auto& av2 = tp.value(a);
        Mat<Scalar> da = Mat<Scalar>::Zero(av2.rows(), av2.cols());
        for (Eigen::Index i = 0; i < n; ++i) da.row(i * stride) = g.row(i);
        tp.accumulate(a, da);
    });
}

/// Row-wise log-sum-exp minus the selected logit: -log softmax(logits)_y.
template <typename Scalar, typename Derived>
Scalar neg_log_softmax(const Eigen::MatrixBase<Derived>& row, int y) {
    const Scalar mx = row.maxCoeff();
    const Scalar lse = mx + std::log((row.array() - mx).exp().sum());
    return lse - row(y);
}

/// Class-weighted focal loss with exponent 2, averaged over the batch.
///
/// Per sample: ce = alpha[y] * -log(max(softmax(l)_y, 1e-12)), p = exp(-ce),
/// term = (1 - p)^2 * ce. Returns a 1x1 node.
template <typename Scalar>
Var focal_loss(Tape<Scalar>& t, Var logits, std::span<const int> labels, std::span<const Scalar> alpha) {
    const auto& lv = t.value(logits);
    if (static_cast<std::size_t>(lv.rows()) != labels.size()) throw ShapeMismatch("focal_loss: labels");
    if (static_cast<std::size_t>(lv.cols()) != alpha.size()) throw ShapeMismatch("focal_loss: alpha");
    const Scalar max_nll = -std::log(Scalar(1e-12));
    const Eigen::Index n = lv.rows();
    // d(term)/d(nll) per sample, cached for backward.
    std::vector<Scalar> dterm(static_cast<std::size_t>(n));
    Scalar total = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        if (y < 0 || y >= lv.cols()) throw ShapeMismatch("focal_loss: label out of range");
        const Scalar a = alpha[static_cast<std::size_t>(y)];
        Scalar nll = neg_log_softmax<Scalar>(lv.row(i), y);
        const bool clipped = nll > max_nll;
        if (clipped) nll = max_nll;
        const Scalar ce = a * nll;
        const Scalar p = std::exp(-ce);
        total += (Scalar(1) - p) * (Scalar(1) - p) * ce;
        const Scalar dce = (Scalar(1) - p) * (Scalar(1) - p) + Scalar(2) * p * (Scalar(1) - p) * ce;
        dterm[static_cast<std::size_t>(i)] = clipped ? Scalar(0) : dce * a;
    }
    Mat<Scalar> out(1, 1);
    out(0, 0) = total / Scalar(n);
    std::vector<int> ys(labels.begin(), labels.end());
    return t.push(std::move(out), t.requires_grad(logits),
                  [logits, ys = std::move(ys), dterm = std::move(dterm)](Tape<Scalar>& tp, std::size_t self) {
                      const Scalar g = tp.upstream(self)(0, 0);
                      const auto& lv2 = tp.value(logits);
                      const Eigen::Index n2 = lv2.rows();
                      Mat<Scalar> dl(n2, lv2.cols());
                      for (Eigen::Index i = 0; i < n2; ++i) {
                          const Scalar mx = lv2.row(i).maxCoeff();
                          RowVec<Scalar> sm = (lv2.row(i).array() - mx).exp().matrix();
                          sm /= sm.sum();
                          sm(ys[static_cast<std::size_t>(i)]) -= Scalar(1);
                          dl.row(i) = sm * (dterm[static_cast<std::size_t>(i)] * g / Scalar(n2));
                      }
                      tp.accumulate(logits, dl);
                  });
}

/// Plain-value focal loss, the same formula without a tape.
template <typename Scalar>
Scalar focal_loss_value(const Mat<Scalar>& logits, std::span<const int> labels, std::span<const Scalar> alpha) {
    Tape<Scalar> t = Tape<Scalar>::inference();
    const Var l = t.leaf(logits);
    return t.value(focal_loss(t, l, labels, alpha))(0, 0);
}

}  // namespace exai5g
