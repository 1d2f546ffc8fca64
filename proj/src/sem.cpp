#include "sem/sem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "sem/csv.hpp"

namespace sem {

void SemConfig::validate() const {
    if (L < 1) throw ParameterError("SEM needs L >= 1");
    if (V < 2) throw ParameterError("SEM needs V >= 2");
    if (!(tau > 0.0)) throw ParameterError("SEM temperature must be positive");
}

namespace {

void check_width(Index cols, const SemConfig& cfg) {
    cfg.validate();
    if (cols != cfg.dim()) {
        throw DimensionError("SEM input width " + std::to_string(cols) + " is not L*V = " +
                             std::to_string(cfg.dim()));
    }
}

}  // namespace

Var sem_forward(const Var& z, const SemConfig& cfg) {
    check_width(z.cols(), cfg);
    const Index batch = z.rows();
    Var blocks = reshape(z, batch * cfg.L, cfg.V);
    return reshape(softmax_tau(blocks, cfg.tau), batch, cfg.dim());
}

Matrix sem_forward(const Matrix& z, const SemConfig& cfg) {
    check_width(z.cols(), cfg);
    Eigen::Map<const Matrix> blocks(z.data(), z.rows() * cfg.L, cfg.V);
    Matrix p = softmax_rows(blocks, cfg.tau);
    return Eigen::Map<const Matrix>(p.data(), z.rows(), cfg.dim());
}

Matrix simplex_entropy(const Matrix& zbar, const SemConfig& cfg) {
    check_width(zbar.cols(), cfg);
    Matrix h(zbar.rows(), cfg.L);
    for (Index r = 0; r < zbar.rows(); ++r) {
        for (Index l = 0; l < cfg.L; ++l) {
            Scalar total = 0.0;
            Scalar ent = 0.0;
            for (Index j = 0; j < cfg.V; ++j) {
                const Scalar p = zbar(r, l * cfg.V + j);
                if (p < -1e-6 || !std::isfinite(p)) {
                    throw ContractError("simplex block has a negative or non-finite entry");
                }
                total += p;
                if (p > 0.0) ent -= p * std::log(p);
            }
            if (std::abs(total - 1.0) > 1e-6) throw ContractError("simplex block does not sum to 1");
            h(r, l) = std::max(ent, 0.0);
        }
    }
    return h;
}

long Histogram::total() const {
    long t = 0;
    for (long c : counts) t += c;
    return t;
}

SimplexStats entropy_histogram(const Matrix& logits, const SemConfig& cfg, int bins) {
    if (bins < 2) throw ParameterError("histogram needs at least 2 bins");
    if (logits.rows() == 0) throw EmptyInputError("entropy histogram of an empty dataset");
    check_width(logits.cols(), cfg);

    SimplexStats stats;
    const Matrix h = simplex_entropy(sem_forward(logits, cfg), cfg);
    const Scalar hi = std::log(static_cast<Scalar>(cfg.V));
    stats.histogram.edges.resize(bins + 1);
    for (int b = 0; b <= bins; ++b) stats.histogram.edges[b] = hi * b / bins;
    stats.histogram.counts.assign(bins, 0);
    stats.entropies.reserve(h.size());
    for (Index r = 0; r < h.rows(); ++r) {
        for (Index l = 0; l < h.cols(); ++l) {
            const Scalar e = h(r, l);
            stats.entropies.push_back(e);
            int b = static_cast<int>(std::floor(e / hi * bins));
            stats.histogram.counts[std::clamp(b, 0, bins - 1)] += 1;
        }
    }

    Scalar gap = std::numeric_limits<Scalar>::infinity();
    for (Index r = 0; r < logits.rows(); ++r) {
        for (Index l = 0; l < cfg.L; ++l) {
            Scalar first = -std::numeric_limits<Scalar>::infinity();
            Scalar second = first;
            for (Index j = 0; j < cfg.V; ++j) {
                const Scalar v = logits(r, l * cfg.V + j);
                if (v > first) {
                    second = first;
                    first = v;
                } else if (v > second) {
                    second = v;
                }
            }
            gap = std::min(gap, first - second);
        }
    }
    stats.delta_hat = gap;
    return stats;
}

void write_histogram_csv(std::ostream& out, const Histogram& h) {
    CsvWriter csv(out);
    csv.row({"bin_left", "bin_right", "count"});
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
        csv.row({format_double(h.edges[b]), format_double(h.edges[b + 1]),
                 std::to_string(h.counts[b])});
    }
}

}  // namespace sem
