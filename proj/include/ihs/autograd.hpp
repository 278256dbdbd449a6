// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ihs/random.hpp"

namespace ihs {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

/// A learnable tensor. Rank-1 tensors are stored as 1 x n rows.
struct Parameter {
    std::string name;
    std::vector<std::size_t> shape;
    Matrix value;
    Matrix grad;

    Parameter() = default;
    Parameter(std::string name, std::vector<std::size_t> shape);

    std::size_t size() const { return static_cast<std::size_t>(value.size()); }
    void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

enum class Squash { ScaledSigmoid, Sigmoid };

/// Reverse-mode tape over dense matrices. Every op records its value and a
/// closure that pushes the output gradient to its inputs; backward() walks
/// the tape once in reverse and accumulates into Parameter::grad.
class Tape {
public:
    struct Var {
        std::size_t id = 0;
    };

    Var constant(Matrix value);
    Var param(Parameter& p);

    const Matrix& value(Var v) const { return nodes_[v.id].value; }

    Var matmul(Var a, Var b);
    /// x + 1 x n bias broadcast over rows.
    Var add_row(Var x, Var bias);
    Var leaky_relu(Var x, double slope);
    /// Inverted dropout with rate p; identity when p == 0.
    Var dropout(Var x, double p, Rng& rng);
    Var concat_cols(std::span<const Var> parts);
    /// Multiplies row i of x by s(i, 0); s is B x 1, or 1 x 1 for a shared scalar.
    Var scale_rows(Var x, Var s);
    Var column(Var x, Eigen::Index k);
    Var squash(Var x, Squash kind);
    Var softmax_rows(Var x);
    /// Multi-head attention of a single query row over variable-length
    /// sequences. Rows [offsets[b], offsets[b+1]) of keys/values belong to
    /// sequence b; the result has one row per sequence.
    Var query_attention(Var query, Var keys, Var values, std::vector<Eigen::Index> offsets,
                        Eigen::Index heads);
    /// Mean softmax cross-entropy of B x 2 logits, weighted per class.
    /// Per-sample losses are written to `per_sample` when given.
    Var softmax_cross_entropy(Var logits, std::span<const int> labels,
                              const std::array<double, 2>& class_weights = {1.0, 1.0},
                              std::vector<double>* per_sample = nullptr);

    /// Seeds d(out)/d(out) = 1 for a 1 x 1 output and back-propagates.
    void backward(Var out);

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        bool needs_grad = false;
        Parameter* param = nullptr;
        std::function<void(Tape&, const Matrix&)> push;
    };

    Var push_node(Matrix value, bool needs_grad, std::function<void(Tape&, const Matrix&)> push);
    bool needs(Var v) const { return nodes_[v.id].needs_grad; }
    void accumulate(Var v, const Matrix& g);

    std::vector<Node> nodes_;
};

Matrix softmax_rows(const Matrix& x);

/// Attention weights used by Tape::query_attention: row b*heads + h holds the
/// weights of head h over the positions of sequence b (padded with zeros up
/// to the longest sequence).
Matrix attention_weights(const RowVector& query, const Matrix& keys,
                         const std::vector<Eigen::Index>& offsets, Eigen::Index heads);

}  // namespace ihs
