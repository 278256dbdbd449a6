// SPDX-License-Identifier: Apache-2.0
#include "ihs/autograd.hpp"

#include <cmath>

#include "ihs/error.hpp"

namespace ihs {

namespace {

std::string dims(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void check_offsets(const std::vector<Eigen::Index>& offsets, Eigen::Index rows) {
    if (offsets.size() < 2 || offsets.front() != 0 || offsets.back() != rows) {
        fail(ErrorKind::Shape, "attention offsets must start at 0 and end at the key row count");
    }
    for (std::size_t b = 1; b < offsets.size(); ++b) {
        if (offsets[b] <= offsets[b - 1]) fail(ErrorKind::Shape, "attention sequences must be nonempty");
    }
}

}  // namespace

Parameter::Parameter(std::string name_, std::vector<std::size_t> shape_)
    : name(std::move(name_)), shape(std::move(shape_)) {
    if (shape.empty() || shape.size() > 2) fail(ErrorKind::Shape, "parameter '" + name + "' must be rank 1 or 2");
    const auto rows = shape.size() == 1 ? Eigen::Index{1} : static_cast<Eigen::Index>(shape[0]);
    const auto cols = static_cast<Eigen::Index>(shape.back());
    value = Matrix::Zero(rows, cols);
    grad = Matrix::Zero(rows, cols);
}

Matrix softmax_rows(const Matrix& x) {
    Matrix y(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double m = x.row(i).maxCoeff();
        y.row(i) = (x.row(i).array() - m).exp().matrix();
        y.row(i) /= y.row(i).sum();
    }
    return y;
}

Matrix attention_weights(const RowVector& query, const Matrix& keys, const std::vector<Eigen::Index>& offsets,
                         Eigen::Index heads) {
    const Eigen::Index d = query.size();
    if (heads <= 0 || d % heads != 0) fail(ErrorKind::Shape, "attention width must be divisible by heads");
    if (keys.cols() != d) fail(ErrorKind::Shape, "query and keys differ in width");
    check_offsets(offsets, keys.rows());
    const Eigen::Index dh = d / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    const auto batch = static_cast<Eigen::Index>(offsets.size() - 1);
    Eigen::Index longest = 0;
    for (Eigen::Index b = 0; b < batch; ++b) longest = std::max(longest, offsets[b + 1] - offsets[b]);

    Matrix w = Matrix::Zero(batch * heads, longest);
    for (Eigen::Index b = 0; b < batch; ++b) {
        const Eigen::Index start = offsets[b];
        const Eigen::Index len = offsets[b + 1] - start;
        for (Eigen::Index h = 0; h < heads; ++h) {
            RowVector s(len);
            for (Eigen::Index r = 0; r < len; ++r) {
                s[r] = scale * query.segment(h * dh, dh).dot(keys.row(start + r).segment(h * dh, dh));
            }
            const double m = s.maxCoeff();
            s = (s.array() - m).exp().matrix();
            s /= s.sum();
            w.row(b * heads + h).head(len) = s;
        }
    }
    return w;
}

Tape::Var Tape::push_node(Matrix value, bool needs_grad, std::function<void(Tape&, const Matrix&)> push) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    n.push = std::move(push);
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

void Tape::accumulate(Var v, const Matrix& g) {
    auto& n = nodes_[v.id];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0) {
        n.grad = g;
    } else {
        n.grad += g;
    }
}

Tape::Var Tape::constant(Matrix value) { return push_node(std::move(value), false, nullptr); }

Tape::Var Tape::param(Parameter& p) {
    auto v = push_node(p.value, true, nullptr);
    nodes_[v.id].param = &p;
    return v;
}

Tape::Var Tape::matmul(Var a, Var b) {
    const auto& A = value(a);
    const auto& B = value(b);
    if (A.cols() != B.rows()) fail(ErrorKind::Shape, "matmul " + dims(A) + " by " + dims(B));
    return push_node(A * B, needs(a) || needs(b), [a, b](Tape& t, const Matrix& g) {
        if (t.needs(a)) t.accumulate(a, g * t.value(b).transpose());
        if (t.needs(b)) t.accumulate(b, t.value(a).transpose() * g);
    });
}

Tape::Var Tape::add_row(Var x, Var bias) {
    const auto& X = value(x);
    const auto& B = value(bias);
    if (B.rows() != 1 || B.cols() != X.cols()) fail(ErrorKind::Shape, "bias " + dims(B) + " for " + dims(X));
    Matrix y = X.rowwise() + B.row(0);
    return push_node(std::move(y), needs(x) || needs(bias), [x, bias](Tape& t, const Matrix& g) {
        t.accumulate(x, g);
        if (t.needs(bias)) t.accumulate(bias, g.colwise().sum());
    });
}

Tape::Var Tape::leaky_relu(Var x, double slope) {
    const auto& X = value(x);
    Matrix y = X.unaryExpr([slope](double v) { return v >= 0.0 ? v : slope * v; });
    return push_node(std::move(y), needs(x), [x, slope](Tape& t, const Matrix& g) {
        const auto& X = t.value(x);
        Matrix d = X.unaryExpr([slope](double v) { return v >= 0.0 ? 1.0 : slope; });
        t.accumulate(x, g.cwiseProduct(d));
    });
}

Tape::Var Tape::dropout(Var x, double p, Rng& rng) {
    if (p <= 0.0) return x;
    if (p >= 1.0) fail(ErrorKind::Contract, "dropout rate must be below 1");
    const auto& X = value(x);
    const double keep_scale = 1.0 / (1.0 - p);
    Matrix mask(X.rows(), X.cols());
    for (Eigen::Index j = 0; j < mask.cols(); ++j) {
        for (Eigen::Index i = 0; i < mask.rows(); ++i) {
            mask(i, j) = uniform_unit(rng) < p ? 0.0 : keep_scale;
        }
    }
    Matrix y = X.cwiseProduct(mask);
    return push_node(std::move(y), needs(x),
                     [x, mask = std::move(mask)](Tape& t, const Matrix& g) { t.accumulate(x, g.cwiseProduct(mask)); });
}

Tape::Var Tape::concat_cols(std::span<const Var> parts) {
    if (parts.empty()) fail(ErrorKind::Shape, "concat of nothing");
    const Eigen::Index rows = value(parts[0]).rows();
    Eigen::Index cols = 0;
    bool any = false;
    for (auto p : parts) {
        if (value(p).rows() != rows) fail(ErrorKind::Shape, "concat parts differ in row count");
        cols += value(p).cols();
        any = any || needs(p);
    }
    Matrix y(rows, cols);
    Eigen::Index at = 0;
    for (auto p : parts) {
        y.middleCols(at, value(p).cols()) = value(p);
        at += value(p).cols();
    }
    std::vector<Var> ps(parts.begin(), parts.end());
    return push_node(std::move(y), any, [ps](Tape& t, const Matrix& g) {
        Eigen::Index at = 0;
        for (auto p : ps) {
            const auto c = t.value(p).cols();
            if (t.needs(p)) t.accumulate(p, g.middleCols(at, c));
            at += c;
        }
    });
}

Tape::Var Tape::scale_rows(Var x, Var s) {
    const auto& X = value(x);
    const auto& S = value(s);
    const bool shared = S.rows() == 1 && S.cols() == 1;
    if (S.cols() != 1 || !(shared || S.rows() == X.rows())) {
        fail(ErrorKind::Shape, "row scale " + dims(S) + " for " + dims(X));
    }
    Matrix y = shared ? Matrix(X * S(0, 0)) : Matrix(X.array().colwise() * S.col(0).array());
    return push_node(std::move(y), needs(x) || needs(s), [x, s, shared](Tape& t, const Matrix& g) {
        const auto& X = t.value(x);
        const auto& S = t.value(s);
        if (t.needs(x)) {
            t.accumulate(x, shared ? Matrix(g * S(0, 0)) : Matrix(g.array().colwise() * S.col(0).array()));
        }
        if (t.needs(s)) {
            Matrix gs = g.cwiseProduct(X).rowwise().sum();
            if (shared) gs = Matrix::Constant(1, 1, gs.sum());
            t.accumulate(s, gs);
        }
    });
}

Tape::Var Tape::column(Var x, Eigen::Index k) {
    const auto& X = value(x);
    if (k < 0 || k >= X.cols()) fail(ErrorKind::Shape, "column index out of range");
    return push_node(X.col(k), needs(x), [x, k](Tape& t, const Matrix& g) {
        const auto& X = t.value(x);
        Matrix full = Matrix::Zero(X.rows(), X.cols());
        full.col(k) = g.col(0);
        t.accumulate(x, full);
    });
}

Tape::Var Tape::squash(Var x, Squash kind) {
    const auto& X = value(x);
    Matrix sig = X.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    Matrix y = kind == Squash::ScaledSigmoid ? Matrix(2.0 * sig.array() - 1.0) : sig;
    const double factor = kind == Squash::ScaledSigmoid ? 2.0 : 1.0;
    return push_node(std::move(y), needs(x), [x, sig = std::move(sig), factor](Tape& t, const Matrix& g) {
        Matrix d = factor * sig.array() * (1.0 - sig.array());
        t.accumulate(x, g.cwiseProduct(d));
    });
}

Tape::Var Tape::softmax_rows(Var x) {
    Matrix y = ihs::softmax_rows(value(x));
    const auto out = push_node(y, needs(x), nullptr);
    nodes_[out.id].push = [x, out](Tape& t, const Matrix& g) {
        const auto& Y = t.value(out);
        Eigen::VectorXd dot = g.cwiseProduct(Y).rowwise().sum();
        Matrix gx = Y.array() * (g.array().colwise() - dot.array());
        t.accumulate(x, gx);
    };
    return out;
}

Tape::Var Tape::query_attention(Var query, Var keys, Var values, std::vector<Eigen::Index> offsets,
                                Eigen::Index heads) {
    const auto& Q = value(query);
    const auto& K = value(keys);
    const auto& V = value(values);
    if (Q.rows() != 1) fail(ErrorKind::Shape, "attention query must be a single row");
    if (V.rows() != K.rows() || V.cols() != K.cols()) fail(ErrorKind::Shape, "keys and values differ in shape");
    Matrix w = attention_weights(Q.row(0), K, offsets, heads);

    const Eigen::Index d = Q.cols();
    const Eigen::Index dh = d / heads;
    const auto batch = static_cast<Eigen::Index>(offsets.size() - 1);
    Matrix y = Matrix::Zero(batch, d);
    for (Eigen::Index b = 0; b < batch; ++b) {
        const Eigen::Index len = offsets[b + 1] - offsets[b];
        for (Eigen::Index h = 0; h < heads; ++h) {
            y.row(b).segment(h * dh, dh) =
                w.row(b * heads + h).head(len) * V.block(offsets[b], h * dh, len, dh);
        }
    }

    const bool any = needs(query) || needs(keys) || needs(values);
    return push_node(std::move(y), any,
                     [query, keys, values, offsets = std::move(offsets), heads, w = std::move(w)](
                         Tape& t, const Matrix& g) {
                         const auto& Q = t.value(query);
                         const auto& K = t.value(keys);
                         const auto& V = t.value(values);
                         const Eigen::Index d = Q.cols();
                         const Eigen::Index dh = d / heads;
                         const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
                         Matrix gq = Matrix::Zero(1, d);
                         Matrix gk = Matrix::Zero(K.rows(), d);
                         Matrix gv = Matrix::Zero(V.rows(), d);
                         const auto batch = static_cast<Eigen::Index>(offsets.size() - 1);
                         for (Eigen::Index b = 0; b < batch; ++b) {
                             const Eigen::Index start = offsets[b];
                             const Eigen::Index len = offsets[b + 1] - start;
                             for (Eigen::Index h = 0; h < heads; ++h) {
                                 const RowVector a = w.row(b * heads + h).head(len);
                                 const RowVector go = g.row(b).segment(h * dh, dh);
                                 gv.block(start, h * dh, len, dh) += a.transpose() * go;
                                 // d(loss)/d(weight_r) then through the softmax
                                 RowVector ga = go * V.block(start, h * dh, len, dh).transpose();
                                 const double mean = ga.dot(a);
                                 const RowVector gs = a.array() * (ga.array() - mean);
                                 gq.row(0).segment(h * dh, dh) +=
                                     scale * gs * K.block(start, h * dh, len, dh);
                                 gk.block(start, h * dh, len, dh) +=
                                     scale * gs.transpose() * Q.row(0).segment(h * dh, dh);
                             }
                         }
                         t.accumulate(query, gq);
                         t.accumulate(keys, gk);
                         t.accumulate(values, gv);
                     });
}

Tape::Var Tape::softmax_cross_entropy(Var logits, std::span<const int> labels,
                                      const std::array<double, 2>& class_weights, std::vector<double>* per_sample) {
    const auto& L = value(logits);
    if (L.cols() != 2 || L.rows() != static_cast<Eigen::Index>(labels.size()) || labels.empty()) {
        fail(ErrorKind::Shape, "cross-entropy expects B x 2 logits with B labels");
    }
    Matrix probs = ihs::softmax_rows(L);
    std::vector<double> losses(labels.size());
    double weight_sum = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int y = labels[i];
        if (y != 0 && y != 1) fail(ErrorKind::Contract, "labels must be 0 or 1");
        const auto r = static_cast<Eigen::Index>(i);
        // Two classes: -log softmax_y = softplus(z_other - z_y).
        const double d = L(r, 1 - y) - L(r, y);
        losses[i] = d > 0.0 ? d + std::log1p(std::exp(-d)) : std::log1p(std::exp(d));
        weight_sum += class_weights[y];
        total += class_weights[y] * losses[i];
    }
    if (per_sample) *per_sample = losses;
    if (weight_sum <= 0.0) fail(ErrorKind::Contract, "class weights sum to zero over the batch");
    Matrix out = Matrix::Constant(1, 1, total / weight_sum);
    std::vector<int> ys(labels.begin(), labels.end());
    return push_node(std::move(out), needs(logits),
                     [logits, ys = std::move(ys), probs = std::move(probs), class_weights, weight_sum](
                         Tape& t, const Matrix& g) {
                         Matrix gl = probs;
                         for (std::size_t i = 0; i < ys.size(); ++i) {
                             const auto r = static_cast<Eigen::Index>(i);
                             gl(r, ys[i]) -= 1.0;
                             gl.row(r) *= class_weights[ys[i]] / weight_sum;
                         }
                         t.accumulate(logits, g(0, 0) * gl);
                     });
}

void Tape::backward(Var out) {
    if (value(out).size() != 1) fail(ErrorKind::Shape, "backward needs a scalar output");
    for (auto& n : nodes_) n.grad.resize(0, 0);
    nodes_[out.id].grad = Matrix::Ones(1, 1);
    for (std::size_t i = out.id + 1; i-- > 0;) {
        auto& n = nodes_[i];
        if (!n.needs_grad || n.grad.size() == 0) continue;
        if (n.push) n.push(*this, n.grad);
        if (n.param) n.param->grad += n.grad;
    }
}

}  // namespace ihs
