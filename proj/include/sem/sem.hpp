#pragma once

#include <iosfwd>
#include <vector>

#include "sem/tensor.hpp"

namespace sem {

/// Shape and temperature of a simplicial embedding: L simplices of V entries.
struct SemConfig {
    Index L = 32;
    Index V = 8;
    Scalar tau = 0.5;

    Index dim() const { return L * V; }
    /// Throws ParameterError unless L >= 1, V >= 2, tau > 0.
    void validate() const;
};

/// Splits each row of z (batch x L*V) into L contiguous V-blocks and applies
/// the temperature softmax to every block.
Var sem_forward(const Var& z, const SemConfig& cfg);
Matrix sem_forward(const Matrix& z, const SemConfig& cfg);

/// Per-block Shannon entropy in nats (0 log 0 = 0), batch x L.
Matrix simplex_entropy(const Matrix& zbar, const SemConfig& cfg);

struct Histogram {
    std::vector<Scalar> edges;   // bins + 1 edges
    std::vector<long> counts;    // bins

    long total() const;
};

struct SimplexStats {
    std::vector<Scalar> entropies;  // row-major (sample, simplex)
    Histogram histogram;
    Scalar delta_hat = 0.0;         // smallest top-2 logit gap seen
};

/// Entropy histogram on [0, log V] of sem_forward(logits) plus the smallest
/// observed gap between the two largest logits of any block.
SimplexStats entropy_histogram(const Matrix& logits, const SemConfig& cfg, int bins = 50);

/// CSV with columns bin_left, bin_right, count.
void write_histogram_csv(std::ostream& out, const Histogram& h);

}  // namespace sem
