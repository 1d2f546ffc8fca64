#pragma once

#include <unordered_map>
#include <vector>

#include "sem/rng.hpp"
#include "sem/tensor.hpp"

namespace sem {

/// Records parameters onto a tape, either as trainable leaves or as constants
/// (the latter never allocate gradient slots). Leaves are collected in the
/// same order as Mlp::parameters().
class ParamBinder {
public:
    ParamBinder(Tape& tape, bool trainable) : tape_(tape), trainable_(trainable) {}

    /// Binding the same parameter twice returns the same Var, so gradients
    /// from several forward passes accumulate on one leaf.
    Var bind(const Matrix& p) {
        if (auto it = index_.find(&p); it != index_.end()) return bound_[it->second];
        Var v = trainable_ ? tape_.leaf(p) : tape_.constant(p);
        index_.emplace(&p, bound_.size());
        bound_.push_back(v);
        return v;
    }
    /// Gradient of a bound parameter; nullptr when unbound or unreached.
    const Matrix* grad_of(const Matrix& p) const {
        auto it = index_.find(&p);
        return it == index_.end() ? nullptr : bound_[it->second].grad();
    }
    Tape& tape() { return tape_; }
    const std::vector<Var>& bound() const { return bound_; }

private:
    Tape& tape_;
    bool trainable_;
    std::vector<Var> bound_;
    std::unordered_map<const Matrix*, std::size_t> index_;
};

/// Fully connected stack: hidden layers are Linear -> [BatchNorm] -> ReLU,
/// the last layer is Linear only. Weights are stored in x W + b form.
class Mlp {
public:
    Mlp() = default;
    Mlp(Index input_dim, const std::vector<Index>& hidden, Index output_dim, bool batch_norm,
        Rng& init_rng);

    Var forward(ParamBinder& binder, const Var& x, bool training);
    /// Evaluation-mode forward (running batch-norm statistics), no tape kept.
    Matrix infer(const Matrix& x) const;

    std::vector<Matrix*> parameters();
    std::vector<const Matrix*> parameters() const;
    std::vector<BatchNormState*> norm_states();
    std::vector<const BatchNormState*> norm_states() const;

    Index input_dim() const { return weights_.empty() ? 0 : weights_.front().rows(); }
    Index output_dim() const { return weights_.empty() ? 0 : weights_.back().cols(); }
    std::size_t depth() const { return weights_.size(); }
    bool has_batch_norm() const { return batch_norm_; }

    Matrix& weight(std::size_t layer) { return weights_.at(layer); }
    Matrix& bias(std::size_t layer) { return biases_.at(layer); }
    const Matrix& weight(std::size_t layer) const { return weights_.at(layer); }

private:
    bool batch_norm_ = false;
    std::vector<Matrix> weights_;
    std::vector<Matrix> biases_;
    std::vector<Matrix> gammas_;
    std::vector<Matrix> betas_;
    std::vector<BatchNormState> norms_;
};

/// Uniform fan-in initialisation, U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Matrix fan_in_uniform(Index fan_in, Index fan_out, Rng& rng);

}  // namespace sem
