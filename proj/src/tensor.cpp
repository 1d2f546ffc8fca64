#include "sem/tensor.hpp"

#include <cmath>
#include <string>

namespace sem {

namespace {

std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_tape(const Var& a, const Var& b) {
    if (a.tape() == nullptr || a.tape() != b.tape()) {
        throw ContractError("operands are not recorded on the same tape");
    }
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.value()) +
                             " vs " + shape_str(b.value()));
    }
}

// Row-wise log-sum-exp with max subtraction.
Eigen::VectorXd lse_rows(const Matrix& x) {
    Eigen::VectorXd out(x.rows());
    for (Index r = 0; r < x.rows(); ++r) {
        const Scalar m = x.row(r).maxCoeff();
        Scalar acc = 0.0;
        for (Index c = 0; c < x.cols(); ++c) acc += std::exp(x(r, c) - m);
        out(r) = m + std::log(acc);
    }
    return out;
}

}  // namespace

// ---- Var -------------------------------------------------------------------

const Matrix& Var::value() const {
    if (tape_ == nullptr) throw ContractError("empty Var");
    return tape_->nodes_.at(id_).value;
}

const Matrix* Var::grad() const {
    if (tape_ == nullptr) throw ContractError("empty Var");
    const auto& node = tape_->nodes_.at(id_);
    return node.has_grad ? &node.grad : nullptr;
}

bool Var::requires_grad() const { return tape_ != nullptr && tape_->nodes_.at(id_).requires_grad; }

Scalar Var::item() const {
    const Matrix& v = value();
    if (v.size() != 1) throw ContractError("item() on non-scalar of shape " + shape_str(v));
    return v(0, 0);
}

// ---- Tape ------------------------------------------------------------------

Var Tape::leaf(Matrix value, bool requires_grad) {
    if (value.size() > 0 && !value.allFinite()) throw NumericError("non-finite leaf value");
    nodes_.push_back(Node{std::move(value), Matrix(), false, requires_grad, nullptr});
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
    if (!value.allFinite()) throw NumericError("operation produced a non-finite value");
    bool needs_grad = false;
    for (const Var& in : inputs) {
        if (in.tape() != this) throw ContractError("input recorded on a different tape");
        needs_grad = needs_grad || in.requires_grad();
    }
    nodes_.push_back(Node{std::move(value), Matrix(), false, needs_grad,
                          needs_grad ? std::move(backward) : Backward{}});
    return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(const Var& v, const Matrix& g) {
    Node& node = nodes_.at(v.id());
    if (!node.requires_grad) return;
    if (!node.has_grad) {
        node.grad = g;
        node.has_grad = true;
    } else {
        node.grad += g;
    }
}

void Tape::backward(Var root) {
    if (root.tape() != this) throw ContractError("root is not on this tape");
    if (root.value().size() != 1) {
        throw ContractError("backward requires a scalar root, got " + shape_str(root.value()));
    }
    if (!root.requires_grad()) return;
    accumulate(root, Matrix::Ones(1, 1));
    for (std::size_t i = root.id() + 1; i-- > 0;) {
        Node& node = nodes_[i];
        if (node.has_grad && node.backward) node.backward(*this, node.grad);
    }
}

void Tape::zero_grad() {
    for (Node& node : nodes_) {
        node.grad = Matrix();
        node.has_grad = false;
    }
}

void Tape::reset() { nodes_.clear(); }

// ---- elementwise / linear ops ---------------------------------------------

Var operator+(const Var& a, const Var& b) {
    require_same_tape(a, b);
    require_same_shape(a, b, "add");
    return a.tape()->record(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
        t.accumulate(a, g);
        t.accumulate(b, g);
    });
}

Var operator-(const Var& a, const Var& b) {
    require_same_tape(a, b);
    require_same_shape(a, b, "sub");
    return a.tape()->record(a.value() - b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
        t.accumulate(a, g);
        t.accumulate(b, -g);
    });
}

Var matmul(const Var& a, const Var& b) {
    require_same_tape(a, b);
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: inner extents differ " + shape_str(a.value()) + " * " +
                             shape_str(b.value()));
    }
    return a.tape()->record(a.value() * b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
        if (a.requires_grad()) t.accumulate(a, g * b.value().transpose());
        if (b.requires_grad()) t.accumulate(b, a.value().transpose() * g);
    });
}

Var transpose(const Var& a) {
    return a.tape()->record(a.value().transpose(), {a},
                            [a](Tape& t, const Matrix& g) { t.accumulate(a, g.transpose()); });
}

Var hadamard(const Var& a, const Var& b) {
    require_same_tape(a, b);
    require_same_shape(a, b, "hadamard");
    return a.tape()->record(a.value().cwiseProduct(b.value()), {a, b},
                            [a, b](Tape& t, const Matrix& g) {
                                if (a.requires_grad()) t.accumulate(a, g.cwiseProduct(b.value()));
                                if (b.requires_grad()) t.accumulate(b, g.cwiseProduct(a.value()));
                            });
}

Var scale(const Var& a, Scalar s) {
    return a.tape()->record(a.value() * s, {a},
                            [a, s](Tape& t, const Matrix& g) { t.accumulate(a, g * s); });
}

Var add_row_bias(const Var& a, const Var& bias) {
    require_same_tape(a, bias);
    if (bias.rows() != 1 || bias.cols() != a.cols()) {
        throw DimensionError("add_row_bias: bias " + shape_str(bias.value()) + " for input " +
                             shape_str(a.value()));
    }
    Matrix out = a.value().rowwise() + bias.value().row(0);
    return a.tape()->record(std::move(out), {a, bias}, [a, bias](Tape& t, const Matrix& g) {
        t.accumulate(a, g);
        if (bias.requires_grad()) t.accumulate(bias, g.colwise().sum());
    });
}

Var relu(const Var& a) {
    return a.tape()->record(a.value().cwiseMax(0.0), {a}, [a](Tape& t, const Matrix& g) {
        Matrix mask = (a.value().array() > 0.0).cast<Scalar>().matrix();
        t.accumulate(a, g.cwiseProduct(mask));
    });
}

Var reshape(const Var& a, Index rows, Index cols) {
    if (rows * cols != a.value().size()) {
        throw DimensionError("reshape: " + shape_str(a.value()) + " to " + std::to_string(rows) +
                             "x" + std::to_string(cols));
    }
    Matrix out = Eigen::Map<const Matrix>(a.value().data(), rows, cols);
    const Index r0 = a.rows();
    const Index c0 = a.cols();
    return a.tape()->record(std::move(out), {a}, [a, r0, c0](Tape& t, const Matrix& g) {
        t.accumulate(a, Eigen::Map<const Matrix>(g.data(), r0, c0));
    });
}

Var slice_cols(const Var& a, Index start, Index count) {
    if (start < 0 || count < 0 || start + count > a.cols()) {
        throw DimensionError("slice_cols out of range for " + shape_str(a.value()));
    }
    Matrix out = a.value().middleCols(start, count);
    return a.tape()->record(std::move(out), {a}, [a, start, count](Tape& t, const Matrix& g) {
        Matrix full = Matrix::Zero(a.rows(), a.cols());
        full.middleCols(start, count) = g;
        t.accumulate(a, full);
    });
}

Var concat_cols(const Var& a, const Var& b) {
    require_same_tape(a, b);
    if (a.rows() != b.rows()) throw DimensionError("concat_cols: row counts differ");
    Matrix out(a.rows(), a.cols() + b.cols());
    out << a.value(), b.value();
    const Index ca = a.cols();
    const Index cb = b.cols();
    return a.tape()->record(std::move(out), {a, b}, [a, b, ca, cb](Tape& t, const Matrix& g) {
        t.accumulate(a, g.leftCols(ca));
        if (b.requires_grad()) t.accumulate(b, g.rightCols(cb));
    });
}

// ---- reductions ------------------------------------------------------------

Var sum(const Var& a) {
    Scalar acc = 0.0;
    const Scalar* p = a.value().data();
    for (Index i = 0; i < a.value().size(); ++i) acc += p[i];
    Matrix out(1, 1);
    out(0, 0) = acc;
    return a.tape()->record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
        t.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
    });
}

Var mean(const Var& a) {
    if (a.value().size() == 0) throw EmptyInputError("mean of empty tensor");
    return scale(sum(a), 1.0 / static_cast<Scalar>(a.value().size()));
}

Var logsumexp_rows(const Var& a) {
    if (a.cols() == 0) throw EmptyInputError("logsumexp over zero columns");
    Eigen::VectorXd lse = lse_rows(a.value());
    Matrix out = lse;
    return a.tape()->record(std::move(out), {a}, [a, lse](Tape& t, const Matrix& g) {
        Matrix p = (a.value().colwise() - lse).array().exp().matrix();
        for (Index r = 0; r < p.rows(); ++r) p.row(r) *= g(r, 0);
        t.accumulate(a, p);
    });
}

// ---- softmax / normalisation ------------------------------------------------

Matrix softmax_rows(const Matrix& x, Scalar tau) {
    if (!(tau > 0.0)) throw ParameterError("softmax temperature must be positive");
    if (x.cols() < 1) throw DimensionError("softmax over zero columns");
    Matrix out(x.rows(), x.cols());
    for (Index r = 0; r < x.rows(); ++r) {
        const Scalar m = x.row(r).maxCoeff();
        Scalar total = 0.0;
        for (Index c = 0; c < x.cols(); ++c) {
            out(r, c) = std::exp((x(r, c) - m) / tau);
            total += out(r, c);
        }
        out.row(r) /= total;
    }
    return out;
}

Var softmax_tau(const Var& x, Scalar tau) {
    Matrix y = softmax_rows(x.value(), tau);
    return x.tape()->record(y, {x}, [x, y, tau](Tape& t, const Matrix& g) {
        Matrix dx(y.rows(), y.cols());
        for (Index r = 0; r < y.rows(); ++r) {
            const Scalar inner = g.row(r).dot(y.row(r));
            dx.row(r) = (y.row(r).array() * (g.row(r).array() - inner)).matrix() / tau;
        }
        t.accumulate(x, dx);
    });
}

Var l2_normalize_rows(const Var& a) {
    const Matrix& x = a.value();
    Eigen::VectorXd norms(x.rows());
    for (Index r = 0; r < x.rows(); ++r) {
        norms(r) = x.row(r).norm();
        if (!(norms(r) > 0.0)) throw DegenerateInputError("zero-norm row in normalisation");
    }
    Matrix y = (x.array().colwise() / norms.array()).matrix();
    return a.tape()->record(y, {a}, [a, y, norms](Tape& t, const Matrix& g) {
        Matrix dx(y.rows(), y.cols());
        for (Index r = 0; r < y.rows(); ++r) {
            dx.row(r) = (g.row(r) - y.row(r) * g.row(r).dot(y.row(r))) / norms(r);
        }
        t.accumulate(a, dx);
    });
}

Var row_dot(const Var& a, const Var& b) {
    require_same_tape(a, b);
    require_same_shape(a, b, "row_dot");
    Matrix out = a.value().cwiseProduct(b.value()).rowwise().sum();
    return a.tape()->record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
        const Eigen::VectorXd gv = g.col(0);
        if (a.requires_grad()) t.accumulate(a, (b.value().array().colwise() * gv.array()).matrix());
        if (b.requires_grad()) t.accumulate(b, (a.value().array().colwise() * gv.array()).matrix());
    });
}

Var cosine_similarity_rows(const Var& a, const Var& b) {
    require_same_shape(a, b, "cosine_similarity");
    return row_dot(l2_normalize_rows(a), l2_normalize_rows(b));
}

Var cosine_similarity(const Var& a, const Var& b) {
    if (a.rows() != 1 || b.rows() != 1) throw DimensionError("cosine_similarity expects 1 x d vectors");
    return cosine_similarity_rows(a, b);
}

Var cross_entropy(const Var& logits, std::span<const int> labels) {
    const Matrix& x = logits.value();
    if (static_cast<Index>(labels.size()) != x.rows()) {
        throw DimensionError("cross_entropy: label count does not match batch");
    }
    if (x.rows() == 0) throw EmptyInputError("cross_entropy on empty batch");
    std::vector<int> ys(labels.begin(), labels.end());
    for (int y : ys) {
        if (y < 0 || y >= x.cols()) throw DataError("label out of range");
    }
    Eigen::VectorXd lse = lse_rows(x);
    Scalar acc = 0.0;
    for (Index r = 0; r < x.rows(); ++r) acc += lse(r) - x(r, ys[r]);
    Matrix out(1, 1);
    out(0, 0) = acc / static_cast<Scalar>(x.rows());
    return logits.tape()->record(std::move(out), {logits},
                                 [logits, lse, ys](Tape& t, const Matrix& g) {
                                     const Matrix& v = logits.value();
                                     Matrix dx = (v.colwise() - lse).array().exp().matrix();
                                     for (Index r = 0; r < dx.rows(); ++r) dx(r, ys[r]) -= 1.0;
                                     dx *= g(0, 0) / static_cast<Scalar>(v.rows());
                                     t.accumulate(logits, dx);
                                 });
}

// ---- batch norm ------------------------------------------------------------

Var batch_norm(const Var& x, const Var& gamma, const Var& beta, BatchNormState& state,
               bool training) {
    require_same_tape(x, gamma);
    require_same_tape(x, beta);
    const Index batch = x.rows();
    const Index d = x.cols();
    if (gamma.rows() != 1 || gamma.cols() != d || beta.rows() != 1 || beta.cols() != d ||
        state.running_mean.size() != d || state.running_var.size() != d) {
        throw DimensionError("batch_norm: parameter width does not match input");
    }
    if (training && batch < 2) throw DegenerateInputError("batch_norm training needs batch >= 2");

    RowVector mu;
    RowVector var;
    if (training) {
        mu = x.value().colwise().mean();
        Matrix centred = x.value().rowwise() - mu;
        var = centred.cwiseAbs2().colwise().mean();
        state.running_mean = state.momentum * state.running_mean + (1.0 - state.momentum) * mu;
        state.running_var = state.momentum * state.running_var + (1.0 - state.momentum) * var;
    } else {
        mu = state.running_mean;
        var = state.running_var;
    }
    const RowVector inv_std = (var.array() + state.eps).rsqrt().matrix();
    Matrix xhat = ((x.value().rowwise() - mu).array().rowwise() * inv_std.array()).matrix();
    Matrix out = ((xhat.array().rowwise() * gamma.value().row(0).array()).rowwise() +
                  beta.value().row(0).array())
                     .matrix();

    return x.tape()->record(
        std::move(out), {x, gamma, beta},
        [x, gamma, beta, xhat, inv_std, training, batch](Tape& t, const Matrix& g) {
            if (gamma.requires_grad()) t.accumulate(gamma, g.cwiseProduct(xhat).colwise().sum());
            if (beta.requires_grad()) t.accumulate(beta, g.colwise().sum());
            if (!x.requires_grad()) return;
            Matrix dxhat = (g.array().rowwise() * gamma.value().row(0).array()).matrix();
            if (!training) {
                t.accumulate(x, (dxhat.array().rowwise() * inv_std.array()).matrix());
                return;
            }
            const RowVector sum_d = dxhat.colwise().sum();
            const RowVector sum_dx = dxhat.cwiseProduct(xhat).colwise().sum();
            const Scalar b = static_cast<Scalar>(batch);
            Matrix dx = (dxhat * b).rowwise() - sum_d;
            dx -= (xhat.array().rowwise() * sum_dx.array()).matrix();
            dx = (dx.array().rowwise() * (inv_std.array() / b)).matrix();
            t.accumulate(x, dx);
        });
}

}  // namespace sem
