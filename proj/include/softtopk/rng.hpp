#pragma once

#include <cstdint>
#include <string>

#include "softtopk/types.hpp"

namespace softtopk {

// SplitMix64, Sebastiano Vigna's 2015 public-domain reference implementation.
// Chosen over <random> engines because the output (and the uint64 -> double
// mapping below) is pinned bit-for-bit across platforms and standard libraries.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1), 53 mantissa bits.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [-1, 1).
    double next_signed_unit() { return 2.0 * next_unit() - 1.0; }

    /// Seed for a derived substream; consumes one draw from this stream.
    std::uint64_t fork_seed() { return next_u64(); }
};

enum class PeakedMode { verbatim, normalized };

inline std::string to_string(PeakedMode m) {
    return m == PeakedMode::verbatim ? "verbatim" : "normalized";
}

inline PeakedMode peaked_mode_from_string(const std::string& s) {
    if (s == "verbatim") return PeakedMode::verbatim;
    if (s == "normalized") return PeakedMode::normalized;
    throw ConfigError("mode must be 'verbatim' or 'normalized' (got '" + s + "')");
}

struct InstanceConfig {
    std::size_t n = 0;
    std::size_t k = 0;
    std::size_t d = 0;
    std::size_t batch = 1;
    std::uint64_t seed = 0;
    double boost = 100.0;
    PeakedMode mode = PeakedMode::verbatim;
};

inline void validate(const InstanceConfig& cfg) {
    if (cfg.k < 1 || cfg.k > cfg.n)
        throw ConfigError("config requires 1 <= k <= n (got k=" + std::to_string(cfg.k) +
                          ", n=" + std::to_string(cfg.n) + ")");
    if (cfg.d < 1) throw ConfigError("config requires d >= 1 (got d=" + std::to_string(cfg.d) + ")");
    if (cfg.batch < 1)
        throw ConfigError("config requires batch >= 1 (got batch=" + std::to_string(cfg.batch) + ")");
    if (!(cfg.boost > 0.0))
        throw ConfigError("config requires boost > 0 (got boost=" + std::to_string(cfg.boost) + ")");
}

template <std::floating_point T>
struct Instance {
    Matrix<T> embeddings;  // n x d, U[-1,1]
    Vector<T> scores;      // n, U[0,1]
};

// Each batch member draws from its own substream (one parent fork per index),
// so instances are independent and the whole batch is a pure function of cfg.
// Values are always generated in double and narrowed to T afterwards.
template <std::floating_point T = double>
std::vector<Instance<T>> generate_instance(const InstanceConfig& cfg) {
    validate(cfg);
    std::vector<Instance<T>> out;
    out.reserve(cfg.batch);
    SplitMix64 parent(cfg.seed);
    for (std::size_t b = 0; b < cfg.batch; ++b) {
        SplitMix64 rng(parent.fork_seed());
        Instance<T> inst;
        inst.embeddings = Matrix<T>(cfg.n, cfg.d);
        for (auto& e : inst.embeddings.data) e = static_cast<T>(rng.next_signed_unit());
        inst.scores.resize(cfg.n);
        for (auto& s : inst.scores) s = static_cast<T>(rng.next_unit());
        out.push_back(std::move(inst));
    }
    return out;
}

}  // namespace softtopk
