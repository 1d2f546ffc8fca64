#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sem/probe.hpp"
#include "sem/rng.hpp"
#include "sem/tensor.hpp"

namespace sem {

/// Inputs for the complexity terms of the downstream generalisation bound.
/// Q_1 is the set of q in [-1, 1]^V with q_1 >= q_j + delta for all j != 1.
struct BoundConfig {
    Index n = 1;
    Index L = 1;
    Index V = 2;
    std::vector<Scalar> taus{0.01, 0.1, 1.0, 10.0};
    Scalar delta = 1e-3;
    std::size_t mc_samples = 100000;
    std::uint64_t seed = 0;
    std::optional<Scalar> R;           // Lipschitz constant of l_y o g
    std::optional<Scalar> B;           // per-sample loss bound
    std::optional<Scalar> delta_conf;  // confidence level
    Scalar lemma5_epsilon = 1e-3;      // per-sample target at the smallest tau

    void validate() const;
};

namespace detail {

/// 1 / (1 + exp(s)) without overflow.
template <class S>
S inv_one_plus_exp(S s) {
    using std::exp;
    if (s > S(0)) {
        const S e = exp(-s);
        return e / (S(1) + e);
    }
    return S(1) / (S(1) + exp(s));
}

}  // namespace detail

/// Closed-form upper bound on sup_{q,q' in Q_1} n * ||sigma_tau(q) - sigma_tau(q')||^2:
///   n * ( |a(2) - a(delta)|^2 + (V-1) |c - d|^2 ),
///   a(x) = 1 / (1 + (V-1) e^{-x/tau}),
///   c = 1 / (1 + e^{delta/tau} (1 + (V-2) e^{-2/tau})),
///   d = 1 / (1 + e^{2/tau} (1 + (V-2) e^{-delta/tau})).
/// Every exponential with a positive exponent is folded into a log so the
/// evaluation stays finite for tau -> 0.
template <class S>
S lemma4_bound(S n, Index V, S delta, S tau) {
    using std::exp;
    using std::log;
    using std::log1p;
    const S vm1 = S(V - 1);
    const S vm2 = S(V - 2);
    const S log_vm1 = log(vm1);
    const S a_far = detail::inv_one_plus_exp(log_vm1 - S(2) / tau);
    const S a_near = detail::inv_one_plus_exp(log_vm1 - delta / tau);
    const S c = detail::inv_one_plus_exp(delta / tau + log1p(vm2 * exp(-S(2) / tau)));
    const S d = detail::inv_one_plus_exp(S(2) / tau + log1p(vm2 * exp(-delta / tau)));
    const S first = (a_far - a_near) * (a_far - a_near);
    const S second = (c - d) * (c - d);
    return n * (first + vm1 * second);
}

/// n V (2 - delta)^2: every coordinate difference 2 - delta is attained at once
/// by q = (1, 1-delta, ...), q' = (delta-1, -1, ...).
Scalar phi_base_exact(Index n, Index V, Scalar delta);

/// One point of Q_1. Each coordinate lands on an endpoint of its feasible
/// interval with probability 1/2 (1/4 per end), otherwise uniformly inside.
Eigen::VectorXd sample_q1(Index V, Scalar delta, Rng& rng);

/// Deterministic vertex pairs of the gap box: delta_i in {delta, 2} arranged
/// as "first k gaps at delta, rest at 2" and its complement.
std::vector<Eigen::VectorXd> q1_extreme_points(Index V, Scalar delta);

/// sigma_tau(q) for a single vector.
Eigen::VectorXd softmax_vector(const Eigen::VectorXd& q, Scalar tau);

/// n * max over the supplied pairs of ||sigma_tau(q) - sigma_tau(q')||^2.
Scalar phi_from_pairs(Index n, std::span<const std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs,
                      Scalar tau);

/// Monte Carlo lower estimate of phi for the SEM classifier: all extreme
/// pairs plus cfg.mc_samples random pairs from a stream keyed on (seed, V,
/// delta, tau). Larger mc_samples extends the same sample sequence.
Scalar phi_sem_mc(const BoundConfig& cfg, Scalar tau);

struct Lemma5Row {
    Scalar tau = 0.0;
    Scalar bound = 0.0;
};

struct Lemma5Scan {
    std::vector<Lemma5Row> rows;
    bool final_below_epsilon = false;
    bool monotone_decreasing = false;
};

/// lemma4_bound along a strictly decreasing tau grid.
Lemma5Scan lemma5_scan(const BoundConfig& cfg);

enum class Lemma6Status { pass, fail, out_of_regime };
std::string to_string(Lemma6Status s);

struct Lemma6Result {
    Scalar tau = 0.0;
    Scalar gap = 0.0;        // lemma4_bound - phi_base_exact
    Scalar threshold = 0.0;  // (3n/4)(1 - V)
    Scalar margin = 0.0;     // threshold - gap, >= 0 on pass
    Lemma6Status status = Lemma6Status::pass;
};

/// Checks lemma4_bound(tau) - phi_base_exact <= (3n/4)(1 - V) per tau. The
/// inequality relies on delta <= 1; larger gaps are reported out of regime.
std::vector<Lemma6Result> lemma6_check(const BoundConfig& cfg);

struct FeaturePair {
    RowVector a;
    RowVector b;
    int label = 0;
};

/// max |l_y(g(a)) - l_y(g(b))| / ||a - b|| over pairs with distinct features.
Scalar estimate_lipschitz(const LinearProbe& probe, std::span<const FeaturePair> pairs);

struct BoundRow {
    Scalar tau = 0.0;
    Scalar phi_base = 0.0;
    Scalar phi_sem_mc = 0.0;
    Scalar lemma4_bound = 0.0;
    Scalar gap = 0.0;
    Scalar lemma6_threshold = 0.0;
    Lemma6Status lemma6 = Lemma6Status::pass;
    std::optional<Scalar> second_term;       // R sqrt(L * lemma4_bound / n)
    std::optional<Scalar> base_second_term;  // R sqrt(L * phi_base / n)
};

struct BoundReport {
    BoundConfig config;
    std::vector<BoundRow> rows;
    /// sqrt(ln(2/delta_conf)/n), the coefficient of the universal constant c.
    std::optional<Scalar> third_term_coefficient;

    /// phi_sem_mc <= lemma4_bound + 1e-9 in every row.
    bool sandwich_holds() const;
};

BoundReport compute_bound_report(const BoundConfig& cfg);
nlohmann::json to_json(const BoundReport& report);
/// Columns: tau, V, Delta, n, phi_base, phi_sem_mc, lemma4_bound,
/// lemma6_threshold, lemma6_pass, second_term.
void write_bound_csv(std::ostream& out, const BoundReport& report);

}  // namespace sem
