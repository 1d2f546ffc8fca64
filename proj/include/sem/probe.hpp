#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "sem/data.hpp"
#include "sem/nn.hpp"
#include "sem/sem.hpp"

namespace sem {

enum class FeatureMode { base, sem };

struct ProbeConfig {
    std::vector<Scalar> tau_sweep{0.01, 0.1, 1.0, 10.0};
    bool include_base = true;
    int epochs = 300;
    /// Step size before normalisation by the mean squared feature norm.
    Scalar learning_rate = 1.0;
    Scalar weight_decay = 1e-4;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Linear classifier logits = z W + b, W is N features x C classes.
struct LinearProbe {
    Matrix W;
    Matrix bias;  // 1 x C
    int epochs_run = 0;
    Scalar initial_loss = 0.0;
    Scalar final_loss = 0.0;

    Index num_features() const { return W.rows(); }
    Index num_classes() const { return W.cols(); }
    Matrix logits(const Matrix& features) const;
    /// Cross-entropy of a single sample.
    Scalar sample_loss(const RowVector& z, int label) const;
};

/// Row-wise argmax, ties to the lowest index.
std::vector<int> argmax_rows(const Matrix& logits);

/// Frozen-encoder features: raw logits z (base) or sem_forward(z) (sem).
/// The encoder runs in evaluation mode and is left untouched.
Matrix extract_features(const Mlp& encoder, const Matrix& inputs, FeatureMode mode,
                        const SemConfig& sem);

LinearProbe init_probe(Index num_features, int num_classes, std::uint64_t seed);

/// Full-batch gradient descent on softmax cross-entropy with weight decay.
LinearProbe train_probe(const Matrix& features, const std::vector<int>& labels, int num_classes,
                        const ProbeConfig& cfg);

/// Fraction of rows whose argmax logit equals the label.
Scalar evaluate(const LinearProbe& probe, const Matrix& features, const std::vector<int>& labels);

struct SweepRow {
    std::string mode;  // "base" or "sem"
    Scalar tau = 0.0;  // 0 for base
    std::string split;
    Scalar accuracy = 0.0;
    std::uint64_t seed = 0;
};

/// One validation-accuracy row for the base features (when enabled) and one
/// per sweep temperature.
std::vector<SweepRow> tau_sweep(const Mlp& encoder, const SemConfig& shape, const DatasetSplit& split,
                                const ProbeConfig& cfg);

/// CSV columns: mode, tau, split, accuracy, seed.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace sem
