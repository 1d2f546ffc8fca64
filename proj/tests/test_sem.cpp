#include <doctest.h>

#include <cmath>
#include <sstream>

#include "sem/csv.hpp"
#include "sem/sem.hpp"
#include "support/gradcheck.hpp"

using namespace sem;
using sem::testing::random_matrix;

namespace {

Matrix row(std::initializer_list<double> v) {
    Matrix m(1, static_cast<Index>(v.size()));
    Index i = 0;
    for (double x : v) m(0, i++) = x;
    return m;
}

Index argmax_block(const Matrix& m, Index r, Index start, Index V) {
    Index best = 0;
    for (Index j = 1; j < V; ++j)
        if (m(r, start + j) > m(r, start + best)) best = j;
    return best;
}

}  // namespace

TEST_CASE("sem_forward examples") {
    CHECK((sem_forward(row({0, 0, 0, 0}), SemConfig{2, 2, 3.7}).array() == 0.5).all());
    Matrix third = sem_forward(row({1, 1, 1}), SemConfig{1, 3, 0.1});
    CHECK((third.array() - 1.0 / 3.0).abs().maxCoeff() < 1e-15);
    Matrix p = sem_forward(row({2, 0}), SemConfig{1, 2, 2.0});
    CHECK(std::abs(p(0, 0) - 0.731059) < 1e-5);
    CHECK(std::abs(p(0, 1) - 0.268941) < 1e-5);
    CHECK_THROWS_AS(sem_forward(row({1, 2, 3}), SemConfig{2, 2, 1.0}), DimensionError);
    CHECK_THROWS_AS(sem_forward(row({1, 2}), SemConfig{1, 1, 1.0}), ParameterError);
}

TEST_CASE("tape and matrix sem_forward agree") {
    Rng rng(4);
    SemConfig cfg{3, 5, 0.4};
    Matrix z = random_matrix(rng, 6, cfg.dim());
    Tape t;
    CHECK(sem_forward(t.constant(z), cfg).value() == sem_forward(z, cfg));
}

TEST_CASE("sem blocks are simplices and preserve argmax") {
    Rng rng(17);
    for (double tau : {1e-4, 1e-3, 0.1, 1.0, 10.0, 1e4}) {
        SemConfig cfg{4, 6, tau};
        Matrix z = random_matrix(rng, 50, cfg.dim(), 3.0);
        Matrix p = sem_forward(z, cfg);
        CHECK((p.array() >= 0.0).all());
        for (Index r = 0; r < z.rows(); ++r) {
            for (Index l = 0; l < cfg.L; ++l) {
                CHECK(std::abs(p.row(r).segment(l * cfg.V, cfg.V).sum() - 1.0) < 1e-9);
                CHECK(argmax_block(p, r, l * cfg.V, cfg.V) == argmax_block(z, r, l * cfg.V, cfg.V));
            }
        }
    }
}

TEST_CASE("entropy is non-decreasing in temperature") {
    Rng rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        Matrix z = random_matrix(rng, 1, 5);
        double prev = -1.0;
        for (double tau : {0.01, 0.1, 1.0, 10.0, 100.0}) {
            SemConfig cfg{1, 5, tau};
            const double h = simplex_entropy(sem_forward(z, cfg), cfg)(0, 0);
            CHECK(h >= prev - 1e-12);
            CHECK(h <= std::log(5.0) + 1e-9);
            CHECK(h >= -1e-12);
            prev = h;
        }
    }
}

TEST_CASE("simplex_entropy examples") {
    SemConfig v4{1, 4, 1.0};
    CHECK(std::abs(simplex_entropy(row({0.25, 0.25, 0.25, 0.25}), v4)(0, 0) - std::log(4.0)) < 1e-9);
    CHECK(simplex_entropy(row({0, 1, 0, 0}), v4)(0, 0) == 0.0);
    SemConfig v2{1, 2, 1.0};
    CHECK(std::abs(simplex_entropy(row({0.9, 0.1}), v2)(0, 0) - 0.325083) < 1e-5);
    CHECK_THROWS_AS(simplex_entropy(row({0.9, 0.2}), v2), ContractError);
    CHECK_THROWS_AS(simplex_entropy(row({1.1, -0.1}), v2), ContractError);
}

TEST_CASE("entropy_histogram extremes") {
    SemConfig cfg{2, 4, 0.05};
    Matrix flat = Matrix::Constant(10, cfg.dim(), 0.3);
    auto s = entropy_histogram(flat, cfg, 50);
    CHECK(s.histogram.counts.back() == 20);
    CHECK(s.histogram.total() == 20);
    CHECK(s.delta_hat == 0.0);

    Matrix peaked = Matrix::Zero(10, cfg.dim());
    for (Index r = 0; r < 10; ++r) {
        peaked(r, r % 4) = 50.0;
        peaked(r, 4 + (r + 1) % 4) = 50.0;
    }
    s = entropy_histogram(peaked, cfg, 50);
    CHECK(s.histogram.counts.front() == 20);
    CHECK(s.delta_hat == 50.0);
    CHECK_THROWS_AS(entropy_histogram(Matrix(0, cfg.dim()), cfg), EmptyInputError);
    CHECK_THROWS_AS(entropy_histogram(flat, cfg, 1), ParameterError);
}

TEST_CASE("entropy_histogram matches a per-row recomputation") {
    Rng rng(8);
    SemConfig cfg{3, 5, 0.7};
    Matrix z = random_matrix(rng, 40, cfg.dim(), 2.0);
    const int bins = 12;
    auto s = entropy_histogram(z, cfg, bins);

    std::vector<long> counts(bins, 0);
    double gap = 1e300;
    for (Index r = 0; r < z.rows(); ++r) {
        for (Index l = 0; l < cfg.L; ++l) {
            std::vector<double> block(cfg.V);
            for (Index j = 0; j < cfg.V; ++j) block[j] = z(r, l * cfg.V + j);
            double mx = *std::max_element(block.begin(), block.end());
            double total = 0;
            for (double b : block) total += std::exp((b - mx) / cfg.tau);
            double h = 0;
            for (double b : block) {
                double p = std::exp((b - mx) / cfg.tau) / total;
                h -= p * std::log(p);
            }
            int bin = std::min(bins - 1, static_cast<int>(h / std::log(5.0) * bins));
            counts[bin]++;
            std::sort(block.begin(), block.end());
            gap = std::min(gap, block[cfg.V - 1] - block[cfg.V - 2]);
        }
    }
    CHECK(s.histogram.counts == counts);
    CHECK(s.delta_hat == gap);
    CHECK(s.entropies.size() == 120);
}

TEST_CASE("histogram csv") {
    Histogram h{{0.0, 0.5, 1.0}, {3, 4}};
    std::ostringstream os;
    write_histogram_csv(os, h);
    CHECK(os.str() == "bin_left,bin_right,count\r\n0,0.5,3\r\n0.5,1,4\r\n");
}

TEST_CASE("csv quoting round trip") {
    std::ostringstream os;
    CsvWriter w(os);
    w.row({"plain", "with,comma", "with \"quote\""});
    std::istringstream is(os.str());
    auto rows = read_csv(is);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0] == std::vector<std::string>{"plain", "with,comma", "with \"quote\""});
    CHECK(parse_double(format_double(0.1 + 0.2)) == 0.1 + 0.2);
}
