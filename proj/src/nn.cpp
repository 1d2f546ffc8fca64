#include "sem/nn.hpp"

#include <cmath>

namespace sem {

Matrix fan_in_uniform(Index fan_in, Index fan_out, Rng& rng) {
    const Scalar bound = 1.0 / std::sqrt(static_cast<Scalar>(fan_in));
    Matrix w(fan_in, fan_out);
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-bound, bound);
    return w;
}

Mlp::Mlp(Index input_dim, const std::vector<Index>& hidden, Index output_dim, bool batch_norm,
         Rng& init_rng)
    : batch_norm_(batch_norm) {
    if (input_dim < 1 || output_dim < 1) throw ParameterError("Mlp dimensions must be positive");
    Index prev = input_dim;
    auto add_layer = [&](Index out) {
        if (out < 1) throw ParameterError("Mlp hidden width must be positive");
        weights_.push_back(fan_in_uniform(prev, out, init_rng));
        biases_.push_back(Matrix::Zero(1, out));
        prev = out;
    };
    for (Index h : hidden) {
        add_layer(h);
        if (batch_norm_) {
            gammas_.push_back(Matrix::Ones(1, h));
            betas_.push_back(Matrix::Zero(1, h));
            norms_.emplace_back(h);
        }
    }
    add_layer(output_dim);
}

Var Mlp::forward(ParamBinder& binder, const Var& x, bool training) {
    if (x.cols() != input_dim()) throw DimensionError("Mlp input width mismatch");
    Var h = x;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        Var w = binder.bind(weights_[i]);
        Var b = binder.bind(biases_[i]);
        h = add_row_bias(matmul(h, w), b);
        if (i + 1 == weights_.size()) break;
        if (batch_norm_) {
            Var g = binder.bind(gammas_[i]);
            Var be = binder.bind(betas_[i]);
            h = batch_norm(h, g, be, norms_[i], training);
        }
        h = relu(h);
    }
    return h;
}

Matrix Mlp::infer(const Matrix& x) const {
    if (x.cols() != input_dim()) throw DimensionError("Mlp input width mismatch");
    Tape tape;
    Var h = tape.constant(x);
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        h = add_row_bias(matmul(h, tape.constant(weights_[i])), tape.constant(biases_[i]));
        if (i + 1 == weights_.size()) break;
        if (batch_norm_) {
            BatchNormState st = norms_[i];
            h = batch_norm(h, tape.constant(gammas_[i]), tape.constant(betas_[i]), st, false);
        }
        h = relu(h);
    }
    return h.value();
}

std::vector<Matrix*> Mlp::parameters() {
    std::vector<Matrix*> out;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        out.push_back(&weights_[i]);
        out.push_back(&biases_[i]);
        if (batch_norm_ && i + 1 < weights_.size()) {
            out.push_back(&gammas_[i]);
            out.push_back(&betas_[i]);
        }
    }
    return out;
}

std::vector<const Matrix*> Mlp::parameters() const {
    auto ps = const_cast<Mlp*>(this)->parameters();
    return {ps.begin(), ps.end()};
}

std::vector<BatchNormState*> Mlp::norm_states() {
    std::vector<BatchNormState*> out;
    for (auto& n : norms_) out.push_back(&n);
    return out;
}

std::vector<const BatchNormState*> Mlp::norm_states() const {
    std::vector<const BatchNormState*> out;
    for (const auto& n : norms_) out.push_back(&n);
    return out;
}

}  // namespace sem
