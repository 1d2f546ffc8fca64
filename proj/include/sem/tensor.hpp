#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "sem/errors.hpp"

namespace sem {

using Scalar = double;
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
using Index = Eigen::Index;

class Tape;

/// Handle to a value recorded on a Tape. Rank-2 (rows x cols), row-major.
/// Vectors are 1 x d, scalars 1 x 1.
class Var {
public:
    Var() = default;

    const Matrix& value() const;
    /// Gradient slot, or nullptr when it was never allocated.
    const Matrix* grad() const;
    bool requires_grad() const;

    Index rows() const { return value().rows(); }
    Index cols() const { return value().cols(); }
    Scalar item() const;

    Tape* tape() const { return tape_; }
    std::size_t id() const { return id_; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Reverse-mode tape. Operations are appended in evaluation order, so the
/// node sequence is already topologically sorted. One thread per tape.
class Tape {
public:
    using Backward = std::function<void(Tape&, const Matrix& upstream)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var leaf(Matrix value, bool requires_grad = true);
    Var constant(Matrix value) { return leaf(std::move(value), false); }

    /// Records an op output. The node requires grad iff any input does; the
    /// backward rule is dropped otherwise.
    Var record(Matrix value, std::initializer_list<Var> inputs, Backward backward);

    /// Seeds d(root)/d(root) = 1 and replays the tape in reverse.
    void backward(Var root);

    /// Adds `g` into the gradient slot of `v` (allocating it on first use).
    void accumulate(const Var& v, const Matrix& g);

    void zero_grad();
    void reset();
    std::size_t size() const { return nodes_.size(); }

private:
    friend class Var;
    struct Node {
        Matrix value;
        Matrix grad;
        bool has_grad = false;
        bool requires_grad = false;
        Backward backward;
    };
    std::vector<Node> nodes_;
};

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var hadamard(const Var& a, const Var& b);
Var scale(const Var& a, Scalar s);
/// a (B x n) plus bias (1 x n) broadcast over rows.
Var add_row_bias(const Var& a, const Var& bias);
Var relu(const Var& a);
/// Same data reinterpreted as rows x cols (row-major).
Var reshape(const Var& a, Index rows, Index cols);
Var slice_cols(const Var& a, Index start, Index count);
Var concat_cols(const Var& a, const Var& b);

Var sum(const Var& a);
Var mean(const Var& a);
/// Per-row log-sum-exp, B x n -> B x 1.
Var logsumexp_rows(const Var& a);

/// Per-row temperature softmax: p_j = exp(x_j / tau) / sum_k exp(x_k / tau).
Var softmax_tau(const Var& x, Scalar tau);
Var l2_normalize_rows(const Var& a);
/// Per-row inner product, B x d -> B x 1.
Var row_dot(const Var& a, const Var& b);
/// Per-row cosine similarity, B x d -> B x 1.
Var cosine_similarity_rows(const Var& a, const Var& b);
/// Cosine similarity of two 1 x d vectors, as a 1 x 1 scalar.
Var cosine_similarity(const Var& a, const Var& b);
/// Mean softmax cross-entropy of logits (B x C) against integer labels.
Var cross_entropy(const Var& logits, std::span<const int> labels);

struct BatchNormState {
    RowVector running_mean;
    RowVector running_var;
    Scalar momentum = 0.9;
    Scalar eps = 1e-5;

    explicit BatchNormState(Index features = 0)
        : running_mean(RowVector::Zero(features)), running_var(RowVector::Ones(features)) {}
};

/// Per-feature standardisation followed by gamma * xhat + beta. Training mode
/// uses batch statistics (biased variance) and folds them into `state` as
/// running = momentum * running + (1 - momentum) * batch.
Var batch_norm(const Var& x, const Var& gamma, const Var& beta, BatchNormState& state,
               bool training);

// Plain-matrix helpers shared by modules that do not need a tape.
Matrix softmax_rows(const Matrix& x, Scalar tau);

}  // namespace sem
