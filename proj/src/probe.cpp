#include "sem/probe.hpp"

#include <cmath>
#include <ostream>
#include <set>

#include "sem/csv.hpp"
#include "sem/rng.hpp"

namespace sem {

void ProbeConfig::validate() const {
    for (Scalar t : tau_sweep) {
        if (!(t > 0.0)) throw ParameterError("probe sweep temperatures must be positive");
    }
    if (epochs < 0) throw ParameterError("probe epochs must be nonnegative");
    if (!(learning_rate > 0.0)) throw ParameterError("probe learning rate must be positive");
    if (weight_decay < 0.0) throw ParameterError("probe weight decay must be nonnegative");
}

Matrix LinearProbe::logits(const Matrix& features) const {
    if (features.cols() != W.rows()) throw DimensionError("probe feature width mismatch");
    return (features * W).rowwise() + bias.row(0);
}

Scalar LinearProbe::sample_loss(const RowVector& z, int label) const {
    Matrix l = logits(z);
    if (label < 0 || label >= l.cols()) throw DataError("label out of range");
    const Scalar m = l.maxCoeff();
    return m + std::log((l.array() - m).exp().sum()) - l(0, label);
}

std::vector<int> argmax_rows(const Matrix& logits) {
    std::vector<int> out(static_cast<std::size_t>(logits.rows()));
    for (Index r = 0; r < logits.rows(); ++r) {
        Index best = 0;
        for (Index c = 1; c < logits.cols(); ++c)
            if (logits(r, c) > logits(r, best)) best = c;
        out[static_cast<std::size_t>(r)] = static_cast<int>(best);
    }
    return out;
}

Matrix extract_features(const Mlp& encoder, const Matrix& inputs, FeatureMode mode, const SemConfig& sem) {
    Matrix z = encoder.infer(inputs);
    if (mode == FeatureMode::base) return z;
    return sem_forward(z, sem);
}

LinearProbe init_probe(Index num_features, int num_classes, std::uint64_t seed) {
    Rng rng = Rng::stream(seed, "probe/init");
    LinearProbe p;
    p.W = fan_in_uniform(num_features, num_classes, rng);
    p.bias = Matrix::Zero(1, num_classes);
    return p;
}

LinearProbe train_probe(const Matrix& features, const std::vector<int>& labels, int num_classes,
                        const ProbeConfig& cfg) {
    cfg.validate();
    if (static_cast<Index>(labels.size()) != features.rows()) {
        throw DimensionError("features and labels are not aligned");
    }
    if (features.rows() == 0) throw EmptyInputError("no probe training samples");
    if (std::set<int>(labels.begin(), labels.end()).size() < 2) {
        throw ParameterError("probe training needs at least two classes");
    }
    LinearProbe probe = init_probe(features.cols(), num_classes, cfg.seed);
    // Normalising the step by the mean squared row norm keeps full-batch
    // descent stable for both raw logits and simplex features.
    const Scalar mean_sq = features.rowwise().squaredNorm().mean();
    const Scalar lr = cfg.learning_rate / std::max(mean_sq, Scalar{1e-12});

    auto loss_and_step = [&](bool update) {
        Tape tape;
        Var w = tape.leaf(probe.W);
        Var b = tape.leaf(probe.bias);
        Var loss = cross_entropy(add_row_bias(matmul(tape.constant(features), w), b), labels);
        if (update) {
            tape.backward(loss);
            probe.W -= lr * (*w.grad() + cfg.weight_decay * probe.W);
            probe.bias -= lr * *b.grad();
        }
        return loss.item();
    };

    probe.initial_loss = loss_and_step(false);
    for (int e = 0; e < cfg.epochs; ++e) {
        const Scalar loss = loss_and_step(true);
        if (!std::isfinite(loss)) throw NumericError("probe training diverged");
    }
    probe.epochs_run = cfg.epochs;
    probe.final_loss = loss_and_step(false);
    return probe;
}

Scalar evaluate(const LinearProbe& probe, const Matrix& features, const std::vector<int>& labels) {
    if (features.rows() == 0) throw EmptyInputError("empty evaluation set");
    if (static_cast<Index>(labels.size()) != features.rows()) {
        throw DimensionError("features and labels are not aligned");
    }
    const auto pred = argmax_rows(probe.logits(features));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == labels[i] ? 1 : 0;
    return static_cast<Scalar>(correct) / static_cast<Scalar>(pred.size());
}

std::vector<SweepRow> tau_sweep(const Mlp& encoder, const SemConfig& shape, const DatasetSplit& split,
                                const ProbeConfig& cfg) {
    cfg.validate();
    const Matrix z_train = encoder.infer(split.train.features);
    const Matrix z_val = encoder.infer(split.validation.features);
    const int classes = std::max(split.train.num_classes, split.validation.num_classes);
    std::vector<SweepRow> rows;
    auto run = [&](const Matrix& tr, const Matrix& va, const std::string& mode, Scalar tau) {
        LinearProbe p = train_probe(tr, split.train.labels, classes, cfg);
        rows.push_back({mode, tau, "validation", evaluate(p, va, split.validation.labels), cfg.seed});
    };
    if (cfg.include_base) run(z_train, z_val, "base", 0.0);
    for (Scalar tau : cfg.tau_sweep) {
        SemConfig s = shape;
        s.tau = tau;
        run(sem_forward(z_train, s), sem_forward(z_val, s), "sem", tau);
    }
    return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    CsvWriter csv(out);
    csv.row({"mode", "tau", "split", "accuracy", "seed"});
    for (const SweepRow& r : rows) {
        csv.row({r.mode, r.mode == "base" ? "" : format_double(r.tau), r.split, format_double(r.accuracy),
                 std::to_string(r.seed)});
    }
}

}  // namespace sem
