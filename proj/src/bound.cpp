#include "sem/bound.hpp"

#include <algorithm>
#include <ostream>

#include "sem/csv.hpp"

namespace sem {

void BoundConfig::validate() const {
    if (n < 1) throw ParameterError("n must be at least 1");
    if (L < 1) throw ParameterError("L must be at least 1");
    if (V < 2) throw ParameterError("V must be at least 2");
    if (!(delta > 0.0)) throw ParameterError("Delta must be positive");
    if (delta > 2.0) throw InfeasibleRegionError("Delta > 2 leaves Q_1 empty");
    for (Scalar t : taus) {
        if (!(t > 0.0)) throw ParameterError("temperatures must be positive");
    }
    if (R && *R < 0.0) throw ParameterError("R must be nonnegative");
    if (delta_conf && !(*delta_conf > 0.0 && *delta_conf < 1.0)) {
        throw ParameterError("confidence delta must lie in (0, 1)");
    }
}

namespace {

void check_region(Index V, Scalar delta) {
    if (V < 2) throw ParameterError("V must be at least 2");
    if (!(delta > 0.0)) throw ParameterError("Delta must be positive");
    if (delta > 2.0) throw InfeasibleRegionError("Delta > 2 leaves Q_1 empty");
}

// Endpoint with probability 1/4 each, uniform interior otherwise.
Scalar draw_coordinate(Scalar lo, Scalar hi, Rng& rng) {
    const Scalar u = rng.uniform();
    if (u < 0.25) return hi;
    if (u < 0.5) return lo;
    return rng.uniform(lo, hi);
}

}  // namespace

Scalar phi_base_exact(Index n, Index V, Scalar delta) {
    check_region(V, delta);
    const Scalar span = 2.0 - delta;
    return static_cast<Scalar>(n) * static_cast<Scalar>(V) * span * span;
}

Eigen::VectorXd sample_q1(Index V, Scalar delta, Rng& rng) {
    check_region(V, delta);
    Eigen::VectorXd q(V);
    q(0) = draw_coordinate(-1.0 + delta, 1.0, rng);
    for (Index j = 1; j < V; ++j) q(j) = draw_coordinate(-1.0, q(0) - delta, rng);
    return q;
}

std::vector<Eigen::VectorXd> q1_extreme_points(Index V, Scalar delta) {
    check_region(V, delta);
    std::vector<Eigen::VectorXd> out;
    for (Index k = 0; k < V; ++k) {
        Eigen::VectorXd near_first(V);
        Eigen::VectorXd far_first(V);
        near_first(0) = far_first(0) = 1.0;
        for (Index j = 1; j < V; ++j) {
            const bool head = j <= k;
            near_first(j) = 1.0 - (head ? delta : 2.0);
            far_first(j) = 1.0 - (head ? 2.0 : delta);
        }
        out.push_back(near_first);
        out.push_back(far_first);
    }
    return out;
}

Eigen::VectorXd softmax_vector(const Eigen::VectorXd& q, Scalar tau) {
    const Scalar m = q.maxCoeff();
    Eigen::VectorXd e = ((q.array() - m) / tau).exp().matrix();
    return e / e.sum();
}

Scalar phi_from_pairs(Index n, std::span<const std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs,
                      Scalar tau) {
    Scalar best = 0.0;
    for (const auto& [q, qp] : pairs) {
        best = std::max(best, (softmax_vector(q, tau) - softmax_vector(qp, tau)).squaredNorm());
    }
    return static_cast<Scalar>(n) * best;
}

Scalar phi_sem_mc(const BoundConfig& cfg, Scalar tau) {
    check_region(cfg.V, cfg.delta);
    if (!(tau > 0.0)) throw ParameterError("temperature must be positive");
    const auto extremes = q1_extreme_points(cfg.V, cfg.delta);
    std::vector<Eigen::VectorXd> images;
    images.reserve(extremes.size());
    for (const auto& q : extremes) images.push_back(softmax_vector(q, tau));
    Scalar best = 0.0;
    for (std::size_t i = 0; i < images.size(); ++i)
        for (std::size_t j = i + 1; j < images.size(); ++j)
            best = std::max(best, (images[i] - images[j]).squaredNorm());

    Rng rng = Rng::stream(cfg.seed, "mc/V=" + std::to_string(cfg.V) + "/delta=" + format_double(cfg.delta) +
                                        "/tau=" + format_double(tau));
    for (std::size_t s = 0; s < cfg.mc_samples; ++s) {
        const Eigen::VectorXd a = softmax_vector(sample_q1(cfg.V, cfg.delta, rng), tau);
        const Eigen::VectorXd b = softmax_vector(sample_q1(cfg.V, cfg.delta, rng), tau);
        best = std::max(best, (a - b).squaredNorm());
    }
    return static_cast<Scalar>(cfg.n) * best;
}

Lemma5Scan lemma5_scan(const BoundConfig& cfg) {
    cfg.validate();
    if (cfg.taus.empty()) throw ParameterError("lemma5_scan needs a temperature grid");
    for (std::size_t i = 1; i < cfg.taus.size(); ++i) {
        if (!(cfg.taus[i] < cfg.taus[i - 1])) throw ParameterError("tau grid must decrease toward 0");
    }
    Lemma5Scan scan;
    const Scalar n = static_cast<Scalar>(cfg.n);
    for (Scalar tau : cfg.taus) scan.rows.push_back({tau, lemma4_bound(n, cfg.V, cfg.delta, tau)});
    scan.monotone_decreasing = true;
    for (std::size_t i = 1; i < scan.rows.size(); ++i) {
        if (!(scan.rows[i].bound < scan.rows[i - 1].bound)) scan.monotone_decreasing = false;
    }
    scan.final_below_epsilon = scan.rows.back().bound < cfg.lemma5_epsilon * n;
    return scan;
}

std::string to_string(Lemma6Status s) {
    switch (s) {
        case Lemma6Status::pass: return "pass";
        case Lemma6Status::fail: return "fail";
        case Lemma6Status::out_of_regime: return "out_of_regime";
    }
    return "unknown";
}

std::vector<Lemma6Result> lemma6_check(const BoundConfig& cfg) {
    cfg.validate();
    const Scalar n = static_cast<Scalar>(cfg.n);
    const Scalar base = phi_base_exact(cfg.n, cfg.V, cfg.delta);
    const Scalar threshold = 0.75 * n * (1.0 - static_cast<Scalar>(cfg.V));
    std::vector<Lemma6Result> out;
    for (Scalar tau : cfg.taus) {
        Lemma6Result r;
        r.tau = tau;
        r.gap = lemma4_bound(n, cfg.V, cfg.delta, tau) - base;
        r.threshold = threshold;
        r.margin = threshold - r.gap;
        if (cfg.delta > 1.0) {
            r.status = Lemma6Status::out_of_regime;
        } else {
            r.status = r.gap <= threshold ? Lemma6Status::pass : Lemma6Status::fail;
        }
        out.push_back(r);
    }
    return out;
}

Scalar estimate_lipschitz(const LinearProbe& probe, std::span<const FeaturePair> pairs) {
    Scalar best = 0.0;
    bool any = false;
    for (const FeaturePair& p : pairs) {
        const Scalar dist = (p.a - p.b).norm();
        if (!(dist > 0.0)) continue;
        any = true;
        const Scalar diff = std::abs(probe.sample_loss(p.a, p.label) - probe.sample_loss(p.b, p.label));
        best = std::max(best, diff / dist);
    }
    if (!any) throw DegenerateInputError("every feature pair is identical");
    return best;
}

bool BoundReport::sandwich_holds() const {
    return std::all_of(rows.begin(), rows.end(),
                       [](const BoundRow& r) { return r.phi_sem_mc <= r.lemma4_bound + 1e-9; });
}

BoundReport compute_bound_report(const BoundConfig& cfg) {
    cfg.validate();
    BoundReport report;
    report.config = cfg;
    const Scalar n = static_cast<Scalar>(cfg.n);
    const auto l6 = lemma6_check(cfg);
    const Scalar base = phi_base_exact(cfg.n, cfg.V, cfg.delta);
    for (std::size_t i = 0; i < cfg.taus.size(); ++i) {
        BoundRow row;
        row.tau = cfg.taus[i];
        row.phi_base = base;
        row.phi_sem_mc = phi_sem_mc(cfg, row.tau);
        row.lemma4_bound = lemma4_bound(n, cfg.V, cfg.delta, row.tau);
        row.gap = l6[i].gap;
        row.lemma6_threshold = l6[i].threshold;
        row.lemma6 = l6[i].status;
        if (cfg.R) {
            const Scalar L = static_cast<Scalar>(cfg.L);
            row.second_term = *cfg.R * std::sqrt(L * row.lemma4_bound / n);
            row.base_second_term = *cfg.R * std::sqrt(L * base / n);
        }
        report.rows.push_back(row);
    }
    if (cfg.delta_conf) report.third_term_coefficient = std::sqrt(std::log(2.0 / *cfg.delta_conf) / n);
    return report;
}

nlohmann::json to_json(const BoundReport& report) {
    const BoundConfig& c = report.config;
    nlohmann::json rows = nlohmann::json::array();
    for (const BoundRow& r : report.rows) {
        nlohmann::json j = {{"tau", r.tau},
                            {"phi_base", r.phi_base},
                            {"phi_sem_mc", r.phi_sem_mc},
                            {"lemma4_bound", r.lemma4_bound},
                            {"gap", r.gap},
                            {"lemma6_threshold", r.lemma6_threshold},
                            {"lemma6", to_string(r.lemma6)},
                            {"lemma6_margin", r.lemma6_threshold - r.gap}};
        if (r.second_term) {
            j["second_term"] = *r.second_term;
            j["base_second_term"] = *r.base_second_term;
        }
        rows.push_back(j);
    }
    nlohmann::json out = {{"n", c.n},
                          {"L", c.L},
                          {"V", c.V},
                          {"Delta", c.delta},
                          {"mc_samples", c.mc_samples},
                          {"seed", c.seed},
                          {"phi_base", phi_base_exact(c.n, c.V, c.delta)},
                          {"lemma6_threshold", 0.75 * static_cast<Scalar>(c.n) * (1.0 - static_cast<Scalar>(c.V))},
                          {"sandwich_holds", report.sandwich_holds()},
                          {"rows", rows},
                          {"third_term", "c * sqrt(ln(2/delta)/n)"}};
    if (c.R) out["R"] = *c.R;
    if (c.B) out["B"] = *c.B;
    if (report.third_term_coefficient) {
        out["delta_conf"] = *c.delta_conf;
        out["third_term_coefficient"] = *report.third_term_coefficient;
    }
    return out;
}

void write_bound_csv(std::ostream& out, const BoundReport& report) {
    const BoundConfig& c = report.config;
    CsvWriter csv(out);
    csv.row({"tau", "V", "Delta", "n", "phi_base", "phi_sem_mc", "lemma4_bound", "lemma6_threshold",
             "lemma6_pass", "second_term"});
    for (const BoundRow& r : report.rows) {
        csv.row({format_double(r.tau), std::to_string(c.V), format_double(c.delta), std::to_string(c.n),
                 format_double(r.phi_base), format_double(r.phi_sem_mc), format_double(r.lemma4_bound),
                 format_double(r.lemma6_threshold), to_string(r.lemma6),
                 r.second_term ? format_double(*r.second_term) : ""});
    }
}

}  // namespace sem
