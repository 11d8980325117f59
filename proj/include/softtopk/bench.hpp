#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "softtopk/rng.hpp"
#include "softtopk/types.hpp"

namespace softtopk {

enum class Algo { iterative, halving, exact };

inline std::string to_string(Algo a) {
    switch (a) {
        case Algo::iterative: return "iterative";
        case Algo::halving: return "halving";
        default: return "exact";
    }
}

inline Algo algo_from_string(const std::string& s) {
    if (s == "iterative") return Algo::iterative;
    if (s == "halving") return Algo::halving;
    if (s == "exact") return Algo::exact;
    throw ConfigError("algo must be 'iterative', 'halving' or 'exact' (got '" + s + "')");
}

// One measurement row: forward wall time over the whole batch for a single
// repeat, plus batch nCCS statistics (identical across repeats by design).
struct BenchRecord {
    Algo algo = Algo::iterative;
    std::size_t n = 0;
    std::size_t k = 0;
    std::size_t d = 0;
    std::size_t batch = 0;
    double boost = 0.0;
    PeakedMode mode = PeakedMode::verbatim;
    std::uint64_t seed = 0;
    std::size_t repeat_index = 0;
    double wall_time_s = 0.0;
    double nccs_mean = 0.0;
    double nccs_std = 0.0;
};

struct SweepConfig {
    std::vector<std::size_t> n_list = {16, 32, 64, 128, 256, 512, 1024, 2048, 4096, 8192, 16384};
    std::vector<std::size_t> k_list = {2, 4, 8, 16, 32, 64, 128, 256, 512, 1024, 2048};
    std::size_t d = 64;
    std::size_t batch = 16;
    double boost = 100.0;
    PeakedMode mode = PeakedMode::verbatim;
    double alpha = 50.0;  // normalized-mode sharpness
    std::uint64_t seed = 42;
    std::size_t repeats = 5;
    std::vector<Algo> algos = {Algo::iterative, Algo::halving, Algo::exact};
    std::size_t threads = 0;       // worker pool for generation/metrics; 0 = auto
    bool parallel_timing = false;  // also parallelise the timed loop (throughput mode)
    bool use_float32 = false;
    std::string csv_path;        // empty = don't write
    std::string charts_prefix;   // empty = don't write
    std::function<void(const std::string&)> log;  // progress/skip lines; may be null
};

void validate(const SweepConfig& cfg);

// Runs every (algo, n, k) combination with k < n: one untimed warmup, then
// `repeats` timed forward passes over a freshly generated batch.  nCCS is
// measured against exact_topk on the same instances.
std::vector<BenchRecord> run_sweep(const SweepConfig& cfg);

// 9-significant-digit shortest form used for every real in CSV output.
std::string format_real(double value);

inline constexpr const char* kCsvHeader =
    "algo,n,k,d,batch,boost,mode,seed,repeat_index,wall_time_s,nccs_mean,nccs_std";

void emit_csv(const std::vector<BenchRecord>& records, const std::string& path);
std::vector<BenchRecord> parse_csv(const std::string& path);

// Two standalone SVGs: <prefix>time_vs_n.svg (log-log) and
// <prefix>nccs_vs_n.svg (log-x), one series per (algo, k).
void emit_charts(const std::vector<BenchRecord>& records, const std::string& path_prefix);

}  // namespace softtopk
