#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace sem {

/// Seeded generator whose draws depend only on the engine state, so the
/// state string alone is enough to resume a sequence bit-exactly.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    /// Independent sub-stream derived from (seed, name). Adding a new stream
    /// never perturbs existing ones.
    static Rng stream(std::uint64_t seed, std::string_view name);

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform on [0, 1).
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Standard normal (Box-Muller, no cached second draw).
    double normal();
    /// Uniform on {0, ..., n-1}.
    std::uint64_t below(std::uint64_t n);
    bool bernoulli(double p) { return uniform() < p; }

    std::string state() const;
    void set_state(const std::string& s);

    friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace sem
